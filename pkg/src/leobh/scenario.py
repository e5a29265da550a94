"""Run configuration: constellation, RF front end, traffic shape and weights.

A `Scenario` is the single source of truth for a run.  It round-trips
through a flat snake_case JSON document so that runs are reproducible from
a file checked into an experiment directory.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .units import BOLTZMANN_J_K, SPEED_OF_LIGHT_M_S, dbw_to_w

# C must be a centered hexagonal number so each footprint closes full rings.
CENTERED_HEX = (1, 7, 19, 37, 61, 91)


@dataclass
class TrafficConfig:
    """Arrival-process shape: hot/cold Poisson means with diurnal modulation."""

    hotspot_fraction: float = 0.2
    mean_hot_bits: float = 10e6
    mean_cold_bits: float = 1e6
    diurnal_period_slots: int = 64
    diurnal_amplitude: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.hotspot_fraction <= 1.0:
            raise ValueError(f"hotspot_fraction must be in [0, 1], got {self.hotspot_fraction}")
        if self.mean_hot_bits < 0 or self.mean_cold_bits < 0:
            raise ValueError("traffic means must be nonnegative")
        if self.diurnal_period_slots < 1:
            raise ValueError("diurnal_period_slots must be >= 1")
        if not 0.0 <= self.diurnal_amplitude <= 1.0:
            raise ValueError(f"diurnal_amplitude must be in [0, 1], got {self.diurnal_amplitude}")


@dataclass
class Normalizers:
    """Reward/objective scale constants; zero means derive from the scenario."""

    q_max: float = 0.0
    j_max: float = 0.0
    th_max: float = 0.0


@dataclass
class Scenario:
    n_sats: int = 12
    cells_per_sat: int = 19
    n_beams: int = 4
    n_cells_total: int = 168
    cell_radius_km: float = 39.0
    altitude_km: float = 780.0
    carrier_hz: float = 20e9
    bandwidth_hz: float = 100e6
    p_tot_w: float = dbw_to_w(39.0)
    p_max_w: float = dbw_to_w(30.0)
    g_tx_max_dbi: float = 35.9
    g_rx_dbi: float = 0.0
    beamwidth_3db_deg: float = 3.0
    t_rx_k: float = 300.0
    slot_s: float = 2e-3
    bh_period_slots: int = 64
    t_ttl_slots: int = 16
    alpha: float = 0.5
    beta: float = 0.5
    min_interference_dist_km: float = 156.0
    penalty_coeff: float = 0.1
    normalizers: Normalizers = field(default_factory=Normalizers)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    rng_seed: int = 0

    def __post_init__(self):
        self.validate()
        self._fill_normalizers()

    def validate(self) -> None:
        if self.n_sats < 1:
            raise ValueError("n_sats must be >= 1")
        if self.cells_per_sat not in CENTERED_HEX:
            raise ValueError(
                f"cells_per_sat={self.cells_per_sat} does not admit a centered hexagonal "
                f"footprint (allowed: {CENTERED_HEX})"
            )
        if self.n_beams < 1 or self.n_beams > self.cells_per_sat:
            raise ValueError("n_beams must satisfy 1 <= K <= cells_per_sat")
        if not self.cells_per_sat <= self.n_cells_total <= self.n_sats * self.cells_per_sat:
            raise ValueError(
                f"n_cells_total={self.n_cells_total} outside feasible range "
                f"[{self.cells_per_sat}, {self.n_sats * self.cells_per_sat}]"
            )
        if self.p_max_w > self.p_tot_w:
            raise ValueError("p_max_w must not exceed p_tot_w")
        if min(self.p_max_w, self.p_tot_w) <= 0:
            raise ValueError("powers must be positive")
        for name in ("alpha", "beta"):
            w = getattr(self, name)
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {w}")
        if self.t_ttl_slots < 1 or self.bh_period_slots < 1:
            raise ValueError("slot counts must be >= 1")
        for name in ("cell_radius_km", "altitude_km", "carrier_hz", "bandwidth_hz",
                     "slot_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.t_rx_k < 0:
            raise ValueError("t_rx_k must be >= 0")
        self.traffic.validate()

    # -- derived radio constants -------------------------------------------------

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / self.carrier_hz

    def noise_power_w(self) -> float:
        return BOLTZMANN_J_K * self.t_rx_k * self.bandwidth_hz

    def peak_link_gain(self) -> float:
        """Boresight power gain of the nadir link (linear)."""
        g_tx = 10.0 ** (self.g_tx_max_dbi / 10.0)
        g_rx = 10.0 ** (self.g_rx_dbi / 10.0)
        d_m = self.altitude_km * 1e3
        return g_tx * g_rx * (self.wavelength_m / (4.0 * np.pi * d_m)) ** 2

    def peak_sinr(self) -> float:
        """Interference-free SINR of a single nadir beam at P_max."""
        noise = self.noise_power_w()
        if noise == 0.0:
            return float("inf")
        return self.p_max_w * self.peak_link_gain() / noise

    def _fill_normalizers(self) -> None:
        # Defaults: th_max = best-case bits one satellite can serve per slot;
        # j_max = TTL (worst per-cell delay spread); q_max = K queues filled at
        # peak service rate for a full TTL.
        nz = self.normalizers
        if nz.th_max <= 0:
            # cap spectral efficiency so a zero-noise scenario stays finite
            se = min(np.log2(1.0 + self.peak_sinr()), 20.0)
            nz.th_max = float(self.n_beams * self.bandwidth_hz * se * self.slot_s)
        if nz.j_max <= 0:
            nz.j_max = float(self.t_ttl_slots)
        if nz.q_max <= 0:
            nz.q_max = float(self.t_ttl_slots * nz.th_max)

    # -- JSON --------------------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        doc = dict(doc)
        if "normalizers" in doc:
            doc["normalizers"] = Normalizers(**doc["normalizers"])
        if "traffic" in doc:
            doc["traffic"] = TrafficConfig(**doc["traffic"])
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


def table2_scenario(**overrides) -> Scenario:
    """The full 12-satellite configuration (defaults above)."""
    return Scenario(**overrides)


def small_scenario(**overrides) -> Scenario:
    """Desk-scale 3-satellite configuration used by the acceptance suite."""
    cfg = dict(
        n_sats=3,
        cells_per_sat=7,
        n_beams=2,
        n_cells_total=15,
        bh_period_slots=32,
        t_ttl_slots=8,
        traffic=TrafficConfig(
            hotspot_fraction=0.2,
            mean_hot_bits=8e6,
            mean_cold_bits=0.5e6,
            diurnal_period_slots=32,
        ),
    )
    cfg.update(overrides)
    return Scenario(**cfg)
