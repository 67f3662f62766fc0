"""Whole-word vocabulary with fixed special-token slots.

Slots 0-3 are reserved: PAD, UNK, SEP, MASK.  Regular tokens are assigned
ids in sorted order of their surface form, so a vocabulary built from the
same token set is always identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

PAD_ID = 0
UNK_ID = 1
SEP_ID = 2
MASK_ID = 3

SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[SEP]", "[MASK]")
N_SPECIAL = len(SPECIAL_TOKENS)


class UnknownTokenError(KeyError):
    """A surface form has no vocabulary entry and UNK mapping is disabled."""


class Vocabulary:
    def __init__(self, tokens: Iterable[str]):
        """Build a vocabulary from regular (non-special) surface forms.

        Duplicates are collapsed; ordering of ids is deterministic (sorted).
        """
        regular = sorted(set(tokens) - set(SPECIAL_TOKENS))
        self._id_to_token = list(SPECIAL_TOKENS) + regular
        self._token_to_id = {t: i for i, t in enumerate(self._id_to_token)}

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id(self, token: str, allow_unk: bool = True) -> int:
        """Map a surface form to its id, or UNK_ID if unknown."""
        idx = self._token_to_id.get(token)
        if idx is None:
            if allow_unk:
                return UNK_ID
            raise UnknownTokenError(token)
        return idx

    def token(self, idx: int) -> str:
        return self._id_to_token[idx]

    def encode(self, tokens: Iterable[str], allow_unk: bool = True) -> list[int]:
        return [self.id(t, allow_unk=allow_unk) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._id_to_token[i] for i in ids]

    # one token per line, line number = id (specials included)
    def save(self, path) -> None:
        Path(path).write_text("\n".join(self._id_to_token) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if lines[:N_SPECIAL] != list(SPECIAL_TOKENS):
            raise ValueError(
                f"vocabulary file {path} does not start with the reserved "
                f"special tokens {SPECIAL_TOKENS}"
            )
        vocab = cls([])
        vocab._id_to_token = list(lines)
        vocab._token_to_id = {t: i for i, t in enumerate(lines)}
        return vocab
