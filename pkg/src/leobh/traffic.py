"""Traffic arrivals and per-(satellite, cell) TTL queues.

Queues are fluid (bit-granular) age histograms: phi[n, c, l] holds the bits
that have been queued at satellite n for cell c for l+1 slots.  Bits older
than the TTL are dropped.  A cell inside an overlap region has one replica
per covering satellite; in the default mirrored mode the replicas represent
the same user demand, so serving the cell through any satellite drains every
replica and conservation accounting counts the cell once (through its
lowest-indexed covering satellite, the "owner").
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import CoverageMap
from .scenario import Scenario, TrafficConfig


@dataclass
class TrafficTrace:
    arrivals: np.ndarray      # (T, V) bits
    hotspot_mask: np.ndarray  # (V,) bool

    @property
    def n_slots(self) -> int:
        return self.arrivals.shape[0]

    def to_json(self, path: str | Path) -> None:
        doc = {"arrivals_bits": self.arrivals.tolist(),
               "hotspot_mask": self.hotspot_mask.astype(int).tolist()}
        Path(path).write_text(json.dumps(doc) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "TrafficTrace":
        doc = json.loads(Path(path).read_text())
        return cls(arrivals=np.asarray(doc["arrivals_bits"], dtype=float),
                   hotspot_mask=np.asarray(doc["hotspot_mask"], dtype=bool))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["slot", "cell", "arrival_bits"])
            for t in range(self.n_slots):
                for v in range(self.arrivals.shape[1]):
                    w.writerow([t, v, repr(float(self.arrivals[t, v]))])


def generate_trace(scenario: Scenario, cfg: TrafficConfig | None = None,
                   n_slots: int | None = None, seed: int | None = None) -> TrafficTrace:
    """Poisson bit arrivals, diurnal sinusoidal means, hot/cold cell split."""
    cfg = cfg or scenario.traffic
    cfg.validate()
    n_slots = n_slots if n_slots is not None else scenario.bh_period_slots
    v = scenario.n_cells_total
    rng = np.random.default_rng(cfg.seed if seed is None else seed)

    n_hot = int(round(cfg.hotspot_fraction * v))
    hot = np.zeros(v, dtype=bool)
    if n_hot:
        hot[rng.choice(v, size=n_hot, replace=False)] = True
    phase = rng.uniform(0.0, 2.0 * np.pi, size=v)

    base = np.where(hot, cfg.mean_hot_bits, cfg.mean_cold_bits)
    t = np.arange(n_slots)[:, None]
    mod = 1.0 + cfg.diurnal_amplitude * np.sin(
        2.0 * np.pi * t / cfg.diurnal_period_slots + phase[None, :])
    mean = np.maximum(base[None, :] * mod, 0.0)
    arrivals = rng.poisson(mean).astype(float)
    return TrafficTrace(arrivals=arrivals, hotspot_mask=hot)


class QueueState:
    """TTL age-histogram queues for every (satellite, covered cell) pair."""

    def __init__(self, scenario: Scenario, coverage: CoverageMap, mirrored: bool = True):
        n, c, l = scenario.n_sats, scenario.cells_per_sat, scenario.t_ttl_slots
        self.phi = np.zeros((n, c, l))
        self.t_ttl = l
        self.mirrored = mirrored
        self.cell_of = np.array(coverage.covered, dtype=int)  # (N, C) global ids
        v = scenario.n_cells_total
        self.replicas: list[list[tuple[int, int]]] = [[] for _ in range(v)]
        for sat, cells in enumerate(coverage.covered):
            for local, cell in enumerate(cells):
                self.replicas[cell].append((sat, local))
        self.owner = [reps[0] for reps in self.replicas]
        self.arrived_bits = 0.0
        self.served_bits = 0.0
        self.dropped_bits = 0.0

    # -- queries -------------------------------------------------------------

    def backlog(self, sat: int, local: int) -> float:
        return float(self.phi[sat, local].sum())

    def backlog_matrix(self) -> np.ndarray:
        """(N, C) backlog per satellite-local queue."""
        return self.phi.sum(axis=2)

    def canonical_backlog(self) -> float:
        """Total demand counting each cell once (owner replica)."""
        return float(sum(self.phi[s, c].sum() for s, c in self.owner))

    def delay_slots(self, sat: int, local: int) -> float:
        """Age-weighted mean residence time; 0 for an empty queue."""
        q = self.phi[sat, local]
        total = q.sum()
        if total <= 0.0:
            return 0.0
        ages = np.arange(1, self.t_ttl + 1)
        return float((ages * q).sum() / total)

    def delay_matrix(self) -> np.ndarray:
        total = self.phi.sum(axis=2)
        ages = np.arange(1, self.t_ttl + 1)
        weighted = (self.phi * ages).sum(axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            d = np.where(total > 0.0, weighted / np.maximum(total, 1e-300), 0.0)
        return d

    # -- slot updates ----------------------------------------------------------

    def enqueue(self, arrivals: np.ndarray) -> None:
        """Add per-cell arrival bits at age 1 on every covering satellite."""
        for cell, bits in enumerate(arrivals):
            if bits <= 0.0:
                continue
            for sat, local in self.replicas[cell]:
                self.phi[sat, local, 0] += bits
            self.arrived_bits += float(bits) if self.mirrored \
                else float(bits) * len(self.replicas[cell])

    def serve(self, sat: int, local: int, bits_capacity: float) -> float:
        """Drain up to `bits_capacity` bits, oldest age first; returns bits served.

        In mirrored mode the same age buckets are drained on every replica of
        the cell, so overlap copies stay coherent.
        """
        if bits_capacity < 0:
            raise ValueError("negative service capacity")
        q = self.phi[sat, local]
        total = q.sum()
        if total <= 0.0 or bits_capacity == 0.0:
            return 0.0
        served = min(float(bits_capacity), float(total))
        drain = np.zeros_like(q)
        remaining = served
        for age in range(self.t_ttl - 1, -1, -1):
            take = min(q[age], remaining)
            drain[age] = take
            remaining -= take
            if remaining <= 0.0:
                break
        targets = self.replicas[int(self.cell_of[sat, local])] if self.mirrored \
            else [(sat, local)]
        for s, c in targets:
            self.phi[s, c] = np.maximum(self.phi[s, c] - drain, 0.0)
        self.served_bits += served
        return served

    def age_and_drop(self) -> float:
        """Shift every bucket one slot older; bits past the TTL are dropped."""
        expired = self.phi[:, :, -1].copy()
        self.phi[:, :, 1:] = self.phi[:, :, :-1]
        self.phi[:, :, 0] = 0.0
        if self.mirrored:
            dropped = float(sum(expired[s, c] for s, c in self.owner))
        else:
            dropped = float(expired.sum())
        self.dropped_bits += dropped
        return dropped

    def conservation_gap(self) -> float:
        """arrivals - served - dropped - backlog; ~0 when accounting is exact."""
        backlog = self.canonical_backlog() if self.mirrored else float(self.phi.sum())
        return self.arrived_bits - self.served_bits - self.dropped_bits - backlog
