"""Composite encoder+heads step and embedding caching.

One step function serves plain fine-tuning, gradient reversal, and the
entropy-maximisation even phase, so the reduction identities (lambda=0
and w=0 recover plain fine-tuning) hold by construction: the same code
path executes with the extra terms contributing exact zeros.

Dropout layout per step: encoder-internal masks come from the task-side
rng during the task forward, then one output-dropout mask is drawn and
shared by every head reading those embeddings (the language data forward
draws from its own rng so optional branches never perturb the task-side
stream).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from langlab.encoder import EncoderModel, backward_batch, forward_batch
from langlab.heads import (
    ClassifierHead,
    ce_loss_and_dlogits,
    head_backward,
    head_logits,
    language_term_and_dlogits,
)
from langlab.training.batching import Batch, make_batch


def select_embeddings(hidden: np.ndarray, batch: Batch):
    """Pick the classified vectors: every real token, or position 0."""
    if batch.level == "token":
        T = hidden.shape[1]
        rows, cols = np.nonzero(np.arange(T)[None, :] < batch.lengths[:, None])
        return hidden[rows, cols], (rows, cols)
    return hidden[:, 0, :], None


def _scatter(hidden_shape, where, dX):
    d_hidden = np.zeros(hidden_shape)
    if where is None:
        d_hidden[:, 0, :] = dX
    else:
        rows, cols = where
        d_hidden[rows, cols] = dX
    return d_hidden


def _gold_at_level(batch: Batch, where):
    if batch.level == "token":
        rows, cols = where
        return batch.task_y[rows, cols]
    return batch.task_y


@dataclass
class StepResult:
    task_loss: float
    lang_loss: float | None      # CE on the language-data batch (grad reversal)
    lang_term: float | None      # confusion term on the task batch (entropy max)
    grads: dict[str, np.ndarray]


def composite_step(encoder: EncoderModel, task_head: ClassifierHead,
                   batch: Batch, rng_task, *,
                   lang_head: ClassifierHead | None = None,
                   w: float | None = None,
                   language_term_variant: str = "as_written",
                   grl_lambda: float | None = None,
                   lid_batch: Batch | None = None,
                   rng_lid=None) -> StepResult:
    """Forward/backward for one update.

    Plain fine-tuning: leave w, grl_lambda, lid_batch unset.
    Entropy-max even phase: pass w and a (frozen) lang_head; the
    confusion term is evaluated on the task batch through that head.
    Gradient reversal: pass grl_lambda, lid_batch, rng_lid, lang_head;
    the language CE trains the head normally and reaches the encoder
    scaled by -lambda.
    """
    dropout = encoder.config.dropout
    hidden, tape = forward_batch(encoder, batch.ids, batch.lengths,
                                 train=True, rng=rng_task, want_tape=True)
    X, where = select_embeddings(hidden, batch)
    mask = (rng_task.random(X.shape) >= dropout) / (1.0 - dropout) \
        if dropout > 0.0 else None
    Xd = X * mask if mask is not None else X

    golds = _gold_at_level(batch, where)
    task_loss, d_logits_t = ce_loss_and_dlogits(head_logits(task_head, Xd), golds)
    dw_t, db_t, dXd_t = head_backward(task_head, Xd, d_logits_t)

    lang_term = None
    if w is not None:
        if lang_head is None:
            raise ValueError("entropy-max step needs a language head")
        lang_term, d_logits_l = language_term_and_dlogits(
            head_logits(lang_head, Xd), language_term_variant
        )
        dXd_l = d_logits_l @ lang_head.w.T
        dXd = (1.0 - w) * dXd_t + w * dXd_l
        dw_t = (1.0 - w) * dw_t
        db_t = (1.0 - w) * db_t
    else:
        dXd = dXd_t

    dX = dXd * mask if mask is not None else dXd
    grads_enc = backward_batch(encoder, tape, _scatter(hidden.shape, where, dX))
    grads = {f"enc/{k}": v for k, v in grads_enc.items()}
    grads["task/w"] = dw_t
    grads["task/b"] = db_t

    lang_loss = None
    if lid_batch is not None:
        if grl_lambda is None or lang_head is None or rng_lid is None:
            raise ValueError(
                "gradient-reversal step needs grl_lambda, lang_head and rng_lid"
            )
        hidden2, tape2 = forward_batch(encoder, lid_batch.ids, lid_batch.lengths,
                                       train=True, rng=rng_lid, want_tape=True)
        X2 = hidden2[:, 0, :]
        mask2 = (rng_lid.random(X2.shape) >= dropout) / (1.0 - dropout) \
            if dropout > 0.0 else None
        X2d = X2 * mask2 if mask2 is not None else X2
        lang_loss, d_logits = ce_loss_and_dlogits(
            head_logits(lang_head, X2d), lid_batch.lang_y
        )
        dw_l, db_l, dX2d = head_backward(lang_head, X2d, d_logits)
        dX2 = dX2d * mask2 if mask2 is not None else dX2d
        # the reversal layer sits between encoder and language head
        d_hidden2 = _scatter(hidden2.shape, None, -grl_lambda * dX2)
        grads2 = backward_batch(encoder, tape2, d_hidden2)
        for k, v in grads2.items():
            grads[f"enc/{k}"] += v
        grads["lang/w"] = dw_l
        grads["lang/b"] = db_l

    return StepResult(task_loss=task_loss, lang_loss=lang_loss,
                      lang_term=lang_term, grads=grads)


# ----------------------------------------------------------------------------
# Eval-mode embedding cache: probes and evaluation reuse fixed encoder
# outputs instead of re-running the encoder every epoch.
# ----------------------------------------------------------------------------

@dataclass
class EmbeddedData:
    X: np.ndarray                  # (M, d) one row per classified vector
    task_y: np.ndarray | None      # (M,)
    lang_y: np.ndarray             # (M,)
    example_index: np.ndarray      # (M,) source example per row

    def __len__(self) -> int:
        return self.X.shape[0]


def embed_examples(encoder: EncoderModel, examples, level: str,
                   lang_to_id: dict, label_to_id: dict | None = None,
                   batch_size: int = 64) -> EmbeddedData:
    """Eval-mode embeddings for every classified vector in the examples."""
    xs, tys, lys, idx = [], [], [], []
    for start in range(0, len(examples), batch_size):
        chunk = list(examples[start:start + batch_size])
        batch = make_batch(chunk, label_to_id, lang_to_id, level)
        hidden, _ = forward_batch(encoder, batch.ids, batch.lengths)
        X, where = select_embeddings(hidden, batch)
        xs.append(X)
        if batch.task_y is not None:
            tys.append(_gold_at_level(batch, where))
        if level == "token":
            rows, _ = where
            lys.append(batch.lang_y[rows])
            idx.append(start + rows)
        else:
            lys.append(batch.lang_y)
            idx.append(start + np.arange(len(chunk)))
    return EmbeddedData(
        X=np.concatenate(xs),
        task_y=np.concatenate(tys) if tys else None,
        lang_y=np.concatenate(lys),
        example_index=np.concatenate(idx),
    )
