"""Single-layer softmax classifier heads, their losses, and the
gradient-reversal layer.

The language-confusion loss is implemented exactly as written in the
source formulation: L = (1-w) * XE(y_a) + w * (-sum_k ln y_b[k]).  The
language term sums negative log-probabilities over *all* classes, which
is minimized (value K ln K) at the uniform distribution.  A Shannon
entropy variant (-H(y_b) as the term) is available behind
``language_term="shannon"`` for comparison; both agree on the minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from langlab.rng import stream

LOG_EPS = 1e-12
LANGUAGE_TERM_VARIANTS = ("as_written", "shannon")


@dataclass
class ClassifierHead:
    w: np.ndarray  # (d_model, n_classes)
    b: np.ndarray  # (n_classes,)

    def __post_init__(self):
        if self.w.ndim != 2 or self.b.shape != (self.w.shape[1],):
            raise ValueError("head weight/bias shapes inconsistent")
        if self.w.shape[1] < 2:
            raise ValueError("a classifier head needs >= 2 classes")

    @classmethod
    def init(cls, d_model: int, n_classes: int, init_std: float,
             seed: int = 0, tag: str = "head") -> "ClassifierHead":
        rng = stream(seed, "head-init", tag)
        return cls(
            w=rng.normal(0.0, init_std, size=(d_model, n_classes)),
            b=rng.normal(0.0, init_std, size=(n_classes,)),
        )

    @property
    def n_classes(self) -> int:
        return self.w.shape[1]

    def copy(self) -> "ClassifierHead":
        return ClassifierHead(self.w.copy(), self.b.copy())


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def head_logits(head: ClassifierHead, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != head.w.shape[0]:
        raise ValueError(
            f"embedding dim {x.shape[-1]} does not match head dim {head.w.shape[0]}"
        )
    return x @ head.w + head.b


def head_forward(head: ClassifierHead, embedding: np.ndarray) -> np.ndarray:
    """Softmax probabilities for one embedding or a batch of them."""
    return softmax(head_logits(head, embedding))


def cross_entropy(probabilities: np.ndarray, gold: int) -> float:
    """-ln p[gold], with a 1e-12 floor inside the log."""
    p = np.asarray(probabilities)
    if not 0 <= gold < p.shape[-1]:
        raise ValueError(f"gold class {gold} out of range for {p.shape[-1]} classes")
    return float(-np.log(max(float(p[gold]), LOG_EPS)))


def grad_reversal_forward(x: np.ndarray) -> np.ndarray:
    return x


def grad_reversal_backward(upstream: np.ndarray, lam: float) -> np.ndarray:
    if lam < 0:
        raise ValueError(f"gradient reversal lambda must be >= 0, got {lam}")
    return -lam * upstream


def language_term(lang_probs: np.ndarray, variant: str = "as_written") -> float:
    """The language-confusion term for one probability vector."""
    p = np.maximum(np.asarray(lang_probs, dtype=float), LOG_EPS)
    if variant == "as_written":
        return float(-np.log(p).sum())
    if variant == "shannon":
        return float((p * np.log(p)).sum())
    raise ValueError(f"unknown language term variant {variant!r}")


def entropy_max_loss(task_probs, gold_task, lang_probs, w,
                     language_term_variant: str = "as_written") -> float:
    """Combined loss (1-w) * XE(task) + w * language term."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must be in [0,1], got {w}")
    xe = cross_entropy(task_probs, gold_task)
    return (1.0 - w) * xe + w * language_term(lang_probs, language_term_variant)


# ----------------------------------------------------------------------------
# Batch loss/gradient helpers used by the training loops.  All losses are
# means over the batch; logits-level softmax+CE keeps them stable.
# ----------------------------------------------------------------------------

def ce_loss_and_dlogits(logits: np.ndarray, golds: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. logits, (N, K) batch."""
    probs = softmax(logits)
    n = logits.shape[0]
    picked = np.maximum(probs[np.arange(n), golds], LOG_EPS)
    loss = float(-np.log(picked).mean())
    d = probs.copy()
    d[np.arange(n), golds] -= 1.0
    return loss, d / n


def language_term_and_dlogits(logits: np.ndarray, variant: str = "as_written"):
    """Mean language-confusion term and gradient w.r.t. logits (N, K)."""
    probs = softmax(logits)
    n, k = logits.shape
    if variant == "as_written":
        loss = float(-np.log(np.maximum(probs, LOG_EPS)).sum(axis=1).mean())
        d = (k * probs - 1.0) / n
    elif variant == "shannon":
        logp = np.log(np.maximum(probs, LOG_EPS))
        loss = float((probs * logp).sum(axis=1).mean())
        ent = -(probs * logp).sum(axis=1, keepdims=True)
        d = probs * (logp + ent) / n
    else:
        raise ValueError(f"unknown language term variant {variant!r}")
    return loss, d


def head_backward(head: ClassifierHead, x: np.ndarray, d_logits: np.ndarray):
    """Gradients (dw, db, dx) of a loss whose logits-gradient is d_logits."""
    x2 = x.reshape(-1, head.w.shape[0])
    d2 = d_logits.reshape(-1, head.w.shape[1])
    dw = x2.T @ d2
    db = d2.sum(axis=0)
    dx = d_logits @ head.w.T
    return dw, db, dx
