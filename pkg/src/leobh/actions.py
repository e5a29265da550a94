"""Decision payloads shared by schedulers, baselines, and the simulator:
illumination patterns and beam power vectors, plus the power projection that
makes any raw actor output feasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CoverageMap
from .scenario import Scenario


@dataclass
class BhPattern:
    """Binary illumination matrix x[sat, cell] over global cell ids."""

    x: np.ndarray  # (N, V) int8

    @classmethod
    def from_selection(cls, selections: list[list[int]], n_cells: int) -> "BhPattern":
        """Build from per-satellite lists of global cell ids."""
        x = np.zeros((len(selections), n_cells), dtype=np.int8)
        for n, cells in enumerate(selections):
            x[n, list(cells)] = 1
        return cls(x=x)

    def lit_cells(self, sat: int) -> np.ndarray:
        return np.nonzero(self.x[sat])[0]


@dataclass
class PowerAlloc:
    """Per-beam transmit powers of one satellite (watts)."""

    powers_w: np.ndarray  # (K,)


def project_powers(raw: np.ndarray, scenario: Scenario) -> PowerAlloc:
    """Map raw actor outputs to a feasible power vector.

    sigmoid * P_max bounds each beam (per-beam cap); if the sum still exceeds
    P_tot every beam is scaled down uniformly (total-power cap).  Feasible
    inputs pass through the scaling untouched, so the map is idempotent on
    the feasible set.
    """
    raw = np.asarray(raw, dtype=float)
    p = scenario.p_max_w / (1.0 + np.exp(-raw))
    total = p.sum()
    if total > scenario.p_tot_w:
        p = p * (scenario.p_tot_w / total)
    return PowerAlloc(powers_w=p)


def equal_power_alloc(scenario: Scenario) -> PowerAlloc:
    """Total power split evenly, capped per beam."""
    p = min(scenario.p_tot_w / scenario.n_beams, scenario.p_max_w)
    return PowerAlloc(powers_w=np.full(scenario.n_beams, p))


def clamp_total_power(powers_w: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Uniformly rescale a per-beam capped vector so the sum respects P_tot."""
    total = powers_w.sum()
    if total > scenario.p_tot_w:
        return powers_w * (scenario.p_tot_w / total)
    return powers_w


def boresight_matrix(pattern: BhPattern, coverage: CoverageMap, n_beams: int) -> np.ndarray:
    """(N, K) global cell ids served by each beam, -1 for idle beams.

    Beam k of a satellite points at the k-th lit cell in ascending cell-id
    order; the fixed convention keeps power vectors aligned with cells.
    """
    n_sats = pattern.x.shape[0]
    bore = np.full((n_sats, n_beams), -1, dtype=int)
    for n in range(n_sats):
        lit = pattern.lit_cells(n)
        bore[n, :len(lit)] = lit[:n_beams]
    return bore
