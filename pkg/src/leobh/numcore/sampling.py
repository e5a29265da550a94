"""Sampling K distinct indices from a categorical policy.

The K-subset action is factored into K sequential softmax draws without
replacement; the action log-probability is the sum of the conditional draw
log-probabilities, which keeps the policy gradient exact for the factored
distribution.
"""

from __future__ import annotations

import numpy as np


def _masked_log_softmax(logits: np.ndarray, avail: np.ndarray) -> np.ndarray:
    z = np.where(avail, logits, -np.inf)
    zmax = z.max()
    exp = np.exp(z - zmax)
    return z - (zmax + np.log(exp.sum()))


def sample_k_distinct(logits: np.ndarray, k: int, rng: np.random.Generator,
                      mask: np.ndarray | None = None):
    """Draw k distinct indices; returns (indices in draw order, total log-prob)."""
    logits = np.asarray(logits, dtype=float)
    avail = np.ones(len(logits), dtype=bool) if mask is None else mask.copy()
    if k > int(avail.sum()):
        raise ValueError(f"cannot draw {k} distinct items from {int(avail.sum())}")
    chosen: list[int] = []
    logprob = 0.0
    for _ in range(k):
        lp = _masked_log_softmax(logits, avail)
        p = np.exp(lp)
        p[~avail] = 0.0
        p = p / p.sum()
        idx = int(rng.choice(len(logits), p=p))
        logprob += float(lp[idx])
        chosen.append(idx)
        avail[idx] = False
    return chosen, logprob


def k_distinct_log_prob(logits: np.ndarray, chosen: list[int],
                        mask: np.ndarray | None = None) -> float:
    """Log-probability of drawing `chosen` in that order."""
    logits = np.asarray(logits, dtype=float)
    avail = np.ones(len(logits), dtype=bool) if mask is None else mask.copy()
    logprob = 0.0
    for idx in chosen:
        if not avail[idx]:
            raise ValueError(f"index {idx} not available")
        logprob += float(_masked_log_softmax(logits, avail)[idx])
        avail[idx] = False
    return logprob


def k_distinct_log_prob_grad(logits: np.ndarray, chosen: list[int],
                             mask: np.ndarray | None = None):
    """(log-prob, d log-prob / d logits) for the ordered draw `chosen`."""
    logits = np.asarray(logits, dtype=float)
    avail = np.ones(len(logits), dtype=bool) if mask is None else mask.copy()
    grad = np.zeros_like(logits)
    logprob = 0.0
    for idx in chosen:
        lp = _masked_log_softmax(logits, avail)
        logprob += float(lp[idx])
        soft = np.exp(lp)
        soft[~avail] = 0.0
        grad -= soft
        grad[idx] += 1.0
        avail[idx] = False
    return logprob, grad


def top_k_distinct(logits: np.ndarray, k: int,
                   mask: np.ndarray | None = None) -> list[int]:
    """Greedy argmax-K (evaluation mode); ties resolve to the lowest index."""
    logits = np.asarray(logits, dtype=float)
    z = logits if mask is None else np.where(mask, logits, -np.inf)
    order = np.argsort(-z, kind="stable")
    return [int(i) for i in order[:k]]
