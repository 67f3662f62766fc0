"""Exact t-SNE (no tree approximation).

Per-row Gaussian bandwidths are found by bisection until each row of the
conditional distribution hits the target perplexity within 1e-3; the
joint P is the symmetrized average.  The 2-d map minimizes KL(P||Q) with
a Student-t Q by gradient descent with momentum (0.5, then 0.8 after the
early-exaggeration window), per-parameter gains, and early exaggeration
of P for the first 250 iterations.  O(N^2) memory and time; fine at desk
scale, and exactness removes approximation as a confound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from langlab.rng import stream

P_FLOOR = 1e-12
PERP_TOL = 1e-3
EXAGGERATION_ITERS = 250
MOMENTUM_SWITCH = 250


@dataclass
class TsneResult:
    coords: np.ndarray          # (N, 2)
    kl_initial: float
    kl_final: float
    row_perplexities: np.ndarray
    settings: dict = field(default_factory=dict)


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _row_probs(d2_row: np.ndarray, beta: float, i: int):
    """Conditional p_{j|i} at precision beta, and the row perplexity."""
    z = -beta * d2_row
    z[i] = -np.inf
    z -= z[np.isfinite(z)].max()
    e = np.exp(z)
    e[i] = 0.0
    s = e.sum()
    p = e / s
    nz = p[p > 0]
    h = float(-(nz * np.log(nz)).sum())
    return p, float(np.exp(h))


def _bisect_beta(d2_row: np.ndarray, i: int, target: float, max_steps: int = 200):
    beta = 1.0
    lo, hi = 0.0, np.inf
    p, perp = _row_probs(d2_row, beta, i)
    for _ in range(max_steps):
        if abs(perp - target) <= PERP_TOL:
            break
        if perp > target:       # too flat: raise precision
            lo = beta
            beta = beta * 2.0 if hi == np.inf else 0.5 * (lo + hi)
        else:
            hi = beta
            beta = beta / 2.0 if lo == 0.0 else 0.5 * (lo + hi)
        p, perp = _row_probs(d2_row, beta, i)
    return p, perp, beta


def joint_probabilities(points: np.ndarray, perplexity: float):
    """Symmetrized t-SNE joint P plus per-row achieved perplexities."""
    n = points.shape[0]
    d2 = _pairwise_sq_dists(points)
    p_cond = np.zeros((n, n))
    perps = np.zeros(n)
    for i in range(n):
        p_cond[i], perps[i], _ = _bisect_beta(d2[i], i, perplexity)
    p = (p_cond + p_cond.T) / (2.0 * n)
    return p, perps


def _q_matrix(y: np.ndarray):
    num = 1.0 / (1.0 + _pairwise_sq_dists(y))
    np.fill_diagonal(num, 0.0)
    q = num / num.sum()
    return np.maximum(q, P_FLOOR), num


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float((p[mask] * np.log(p[mask] / q[mask])).sum())


def tsne(points, perplexity: float = 30.0, iterations: int = 1000,
         learning_rate: float = 200.0, early_exaggeration: float = 12.0,
         seed: int = 0) -> TsneResult:
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if perplexity >= n:
        raise ValueError(f"perplexity {perplexity} must be < n points {n}")
    if perplexity > n - 1:
        raise ValueError(f"row perplexity {perplexity} unreachable with {n} points")

    p, row_perps = joint_probabilities(points, perplexity)
    p = np.maximum(p, P_FLOOR)

    rng = stream(seed, "tsne-init")
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(y)
    gains = np.ones_like(y)

    q, _ = _q_matrix(y)
    kl_initial = _kl(p, q)

    for it in range(iterations):
        pp = p * early_exaggeration if it < EXAGGERATION_ITERS else p
        q, num = _q_matrix(y)
        w = (pp - q) * num
        grad = 4.0 * ((np.diag(w.sum(axis=1)) - w) @ y)
        if not np.isfinite(grad).all():
            raise FloatingPointError(
                f"non-finite t-SNE gradient at iteration {it}"
            )
        momentum = 0.5 if it < MOMENTUM_SWITCH else 0.8
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        update = momentum * update - learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)

    q, _ = _q_matrix(y)
    kl_final = _kl(p, q)
    if not np.isfinite(y).all():
        raise FloatingPointError("non-finite t-SNE coordinates")
    return TsneResult(
        coords=y, kl_initial=kl_initial, kl_final=kl_final,
        row_perplexities=row_perps,
        settings={
            "perplexity": perplexity, "iterations": iterations,
            "learning_rate": learning_rate,
            "early_exaggeration": early_exaggeration,
            "exaggeration_iters": EXAGGERATION_ITERS,
            "momentum_switch": MOMENTUM_SWITCH, "seed": seed,
        },
    )
