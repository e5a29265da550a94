"""Objective quantities: loads, load gap, delay fairness, rewards, constraint
checks, and the episode-level objective combining throughput and fairness.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .actions import BhPattern, PowerAlloc
from .geometry import CellGrid, CoverageMap
from .scenario import Scenario
from .traffic import QueueState

POWER_TOL_REL = 1e-9

SLOT_CSV_COLUMNS = ["slot", "sat", "cell", "served_bits", "backlog_bits",
                    "delay_slots", "load_bits", "q_gap", "j_gap", "reward"]


@dataclass
class SlotMetrics:
    slot: int
    throughput_bits: np.ndarray  # (N, C) bits served this slot
    load_bits: np.ndarray        # (N,) backlog sum over illuminated cells
    delays: np.ndarray           # (N, C) end-of-slot queue delays
    backlog_bits: np.ndarray     # (N, C) end-of-slot backlogs
    q_gap: float                 # bits
    j_gap: float                 # slots, summed over satellites
    violations: int              # co-illumination (C3) + proximity (C5)
    reward: float = 0.0


def satellite_load(queues: QueueState, pattern: BhPattern, sat: int) -> float:
    """Backlog bits of the cells this satellite illuminates this slot."""
    lit = pattern.x[sat, queues.cell_of[sat]].astype(bool)
    return float(queues.phi[sat][lit].sum())


def load_gap(loads: np.ndarray) -> float:
    loads = np.asarray(loads, dtype=float)
    return float(loads.max() - loads.min())


def delay_fairness_term(delays_row: np.ndarray) -> float:
    """max - min queue delay across one satellite's covered cells."""
    d = np.asarray(delays_row, dtype=float)
    return float(d.max() - d.min())


def slot_delay_fairness(delays: np.ndarray) -> float:
    """Per-slot fairness term summed over satellites."""
    return float(sum(delay_fairness_term(row) for row in delays))


def bh_reward(m: SlotMetrics, scenario: Scenario) -> float:
    """Common beam-hopping reward: negative weighted gap + fairness + penalty."""
    nz = scenario.normalizers
    penalty = scenario.penalty_coeff * m.violations
    return -(scenario.alpha * m.q_gap / nz.q_max
             + (1.0 - scenario.alpha) * m.j_gap / nz.j_max
             + penalty)


def pa_reward(m: SlotMetrics, sat: int, scenario: Scenario) -> float:
    """Per-satellite power-allocation reward: throughput vs delay spread."""
    nz = scenario.normalizers
    th = float(m.throughput_bits[sat].sum())
    fairness = delay_fairness_term(m.delays[sat])
    return (scenario.beta * th / nz.th_max
            - (1.0 - scenario.beta) * fairness / nz.j_max)


def p0_objective(throughput_bits: float, j_slots: float, scenario: Scenario,
                 n_slots: int) -> float:
    """Episode objective: normalized total throughput minus delay fairness."""
    nz = scenario.normalizers
    denom = scenario.n_sats * n_slots
    return (scenario.beta * throughput_bits / (nz.th_max * denom)
            - (1.0 - scenario.beta) * j_slots / (nz.j_max * denom))


@dataclass
class ConstraintReport:
    c1_binary: bool = True
    c2_beam_count: bool = True
    c3_coillumination: int = 0
    c4_coverage: bool = True
    c5_proximity: int = 0
    c6_beam_power: bool = True
    c7_total_power: bool = True
    messages: list = field(default_factory=list)

    @property
    def hard_ok(self) -> bool:
        """C1/C2/C4/C6/C7 hold (C3/C5 are soft, penalized in the reward)."""
        return (self.c1_binary and self.c2_beam_count and self.c4_coverage
                and self.c6_beam_power and self.c7_total_power)

    @property
    def violations(self) -> int:
        return self.c3_coillumination + self.c5_proximity


def count_soft_violations(pattern: BhPattern, scenario: Scenario,
                          grid: CellGrid) -> tuple[int, int]:
    """(co-illuminated cell count, cross-satellite proximity pair count)."""
    col = pattern.x.sum(axis=0)
    c3 = int(np.maximum(col - 1, 0).sum())
    c5 = 0
    dists = grid.pairwise_distances_km()
    lit = [pattern.lit_cells(n) for n in range(pattern.x.shape[0])]
    for n in range(len(lit)):
        for m in range(n + 1, len(lit)):
            for i in lit[n]:
                for j in lit[m]:
                    if i != j and dists[i, j] < scenario.min_interference_dist_km:
                        c5 += 1
    return c3, c5


def constraint_check(pattern: BhPattern, powers: list[PowerAlloc],
                     scenario: Scenario, grid: CellGrid,
                     coverage: CoverageMap) -> ConstraintReport:
    rep = ConstraintReport()
    x = pattern.x
    if not np.isin(x, (0, 1)).all():
        rep.c1_binary = False
        rep.messages.append("C1: non-binary entries in pattern")
    row = x.sum(axis=1)
    if not (row == scenario.n_beams).all():
        rep.c2_beam_count = False
        rep.messages.append(f"C2: row sums {row.tolist()} != K={scenario.n_beams}")
    rep.c3_coillumination, rep.c5_proximity = count_soft_violations(pattern, scenario, grid)
    for n, cells in enumerate(coverage.covered):
        outside = np.ones(x.shape[1], dtype=bool)
        outside[list(cells)] = False
        if x[n][outside].any():
            rep.c4_coverage = False
            rep.messages.append(f"C4: satellite {n} illuminates cells outside coverage")
    for n, alloc in enumerate(powers):
        p = alloc.powers_w
        if (p < 0).any() or (p > scenario.p_max_w * (1 + POWER_TOL_REL)).any():
            rep.c6_beam_power = False
            rep.messages.append(f"C6: satellite {n} beam power outside [0, P_max]")
        if p.sum() > scenario.p_tot_w * (1 + POWER_TOL_REL):
            rep.c7_total_power = False
            rep.messages.append(f"C7: satellite {n} total power exceeds P_tot")
    return rep


def write_slot_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SLOT_CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)


def slot_csv_rows(m: SlotMetrics, queues: QueueState) -> list[dict]:
    """Long-format per-(slot, sat, cell) rows; slot-level values repeated."""
    rows = []
    n_sats, c_per_sat = m.throughput_bits.shape
    for n in range(n_sats):
        for c in range(c_per_sat):
            rows.append({
                "slot": m.slot,
                "sat": n,
                "cell": int(queues.cell_of[n, c]),
                "served_bits": repr(float(m.throughput_bits[n, c])),
                "backlog_bits": repr(float(m.backlog_bits[n, c])),
                "delay_slots": repr(float(m.delays[n, c])),
                "load_bits": repr(float(m.load_bits[n])),
                "q_gap": repr(float(m.q_gap)),
                "j_gap": repr(float(m.j_gap)),
                "reward": repr(float(m.reward)),
            })
    return rows
