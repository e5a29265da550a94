"""Shared test oracles: finite differences and link-budget closed forms."""

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8


def central_diff_grads(loss_fn, params: list, h: float = 1e-5) -> list:
    """Central finite-difference gradient of a scalar loss over array params."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            hi = loss_fn()
            p[idx] = orig - h
            lo = loss_fn()
            p[idx] = orig
            g[idx] = (hi - lo) / (2.0 * h)
            it.iternext()
        grads.append(g)
    return grads


def rel_err(a, b, floor: float = 1e-8) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def fspl_db(distance_m: float, freq_hz: float) -> float:
    lam = SPEED_OF_LIGHT / freq_hz
    return 20.0 * np.log10(4.0 * np.pi * distance_m / lam)


def brute_force_sinr(powers, gains, noise, sat, beam, cell, active):
    """Triple-sum SINR oracle: explicit loops over every interfering beam."""
    num = powers[sat][beam] * gains[sat][beam][cell]
    denom = noise
    for n in range(len(powers)):
        for l in range(len(powers[n])):
            if not active[n][l] or (n == sat and l == beam):
                continue
            denom += powers[n][l] * gains[n][l][cell]
    return num / denom
