"""Episode orchestration: the slot loop wiring predictor, beam hopping, power
allocation, the link budget, queue service, and metrics.

Per-slot order: the BH layer decides from predicted demand (current backlog
plus estimated arrivals), the actual arrivals are enqueued, the PA layer
decides from the real backlogs of the selected cells, capacities are
evaluated with every satellite's allocation, queues drain (mirrored), age,
and metrics are recorded.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .actions import BhPattern, PowerAlloc, boresight_matrix
from .channel import build_slot_radio_state, channel_power_gain, sinr
from .geometry import CellGrid, CoverageMap, build_constellation_cached
from .metrics import (SlotMetrics, bh_reward, count_soft_violations, load_gap,
                      p0_objective, satellite_load, slot_csv_rows,
                      slot_delay_fairness, write_slot_csv)
from .scenario import Scenario
from .traffic import QueueState, generate_trace

EVAL_CSV_COLUMNS = ["method", "seed", "episode", "sat", "throughput_bits",
                    "load_bits_mean", "delay_slots_mean", "q_bits", "j_slots",
                    "reward", "p0"]
SWEEP_CSV_COLUMNS = ["method", "axis", "value", "seed", "episode",
                     "throughput_bits", "q_bits", "j_slots",
                     "delay_slots_mean", "dropped_bits", "p0"]
TRAIN_CSV_COLUMNS = ["episode", "worker", "reward", "loss", "q_gap", "j_gap",
                     "violations"]


@dataclass
class BhDecisionView:
    """What the DT layer sees when choosing a pattern for slot t."""

    t: int
    demand_hat: np.ndarray   # (N, C) backlog + predicted arrivals
    backlog: np.ndarray      # (N, C) current backlog (before this slot's arrivals)
    gains: np.ndarray        # (N, C) nominal boresight link gains
    scenario: Scenario
    coverage: CoverageMap


@dataclass
class PaDecisionView:
    """What each satellite sees when powering the selected beams."""

    t: int
    selected_local: list     # per sat, local indices of lit cells (beam order)
    backlog: np.ndarray      # (N, K) backlogs of the selected cells
    gains: np.ndarray        # (N, K) nominal gains of the selected cells
    scenario: Scenario


@dataclass
class EpisodeMetrics:
    n_slots: int = 0
    throughput_bits: float = 0.0
    throughput_bits_by_sat: np.ndarray = field(default_factory=lambda: np.zeros(0))
    load_bits_by_sat_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    delay_slots_by_sat_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    q_bits: float = 0.0
    j_slots: float = 0.0
    violations: int = 0
    bh_reward_sum: float = 0.0
    arrived_bits: float = 0.0
    served_bits: float = 0.0
    dropped_bits: float = 0.0
    final_backlog_bits: float = 0.0
    delay_slots_mean: float = 0.0
    p0: float = 0.0


class SimEnv:
    """One episode of the constellation simulator, stepped slot by slot."""

    def __init__(self, scenario: Scenario, estimator=None, mirrored: bool = True,
                 grid: CellGrid | None = None, coverage: CoverageMap | None = None):
        self.scenario = scenario
        if grid is None or coverage is None:
            grid, coverage = build_constellation_cached(scenario)
        self.grid = grid
        self.coverage = coverage
        self.estimator = estimator
        self.mirrored = mirrored
        n, c = scenario.n_sats, scenario.cells_per_sat
        self.gains_local = np.zeros((n, c))
        for sat in range(n):
            for local, cell in enumerate(coverage.covered[sat]):
                self.gains_local[sat, local] = channel_power_gain(
                    coverage.sat_positions[sat], cell, cell, grid, scenario)
        self.cell_of = np.array(coverage.covered, dtype=int)
        self.queues: QueueState | None = None

    # -- episode lifecycle ---------------------------------------------------

    def reset(self, seed: int, n_slots: int | None = None) -> None:
        sc = self.scenario
        self.n_slots = n_slots if n_slots is not None else sc.bh_period_slots
        self.trace = generate_trace(sc, n_slots=self.n_slots, seed=seed)
        self.queues = QueueState(sc, self.coverage, mirrored=self.mirrored)
        if self.estimator is not None:
            self.estimator.reset()
        self.t = 0
        self._last_local_arrivals = np.zeros((sc.n_sats, sc.cells_per_sat))
        self._rho_hat_t = -1
        self._rho_hat = np.zeros_like(self._last_local_arrivals)
        self._arrivals_applied = False

    @property
    def done(self) -> bool:
        return self.t >= self.n_slots

    def _predicted_arrivals(self) -> np.ndarray:
        if self._rho_hat_t != self.t:
            if self.estimator is None:
                self._rho_hat = self._last_local_arrivals.copy()
            else:
                self._rho_hat = self.estimator.estimate(self._last_local_arrivals)
            self._rho_hat_t = self.t
        return self._rho_hat

    def bh_view(self) -> BhDecisionView:
        backlog = self.queues.backlog_matrix()
        return BhDecisionView(
            t=self.t,
            demand_hat=backlog + self._predicted_arrivals(),
            backlog=backlog,
            gains=self.gains_local,
            scenario=self.scenario,
            coverage=self.coverage)

    def apply_arrivals(self) -> None:
        if self._arrivals_applied:
            raise RuntimeError("arrivals already applied for this slot")
        self.queues.enqueue(self.trace.arrivals[self.t])
        arr = self.trace.arrivals[self.t]
        self._last_local_arrivals = arr[self.cell_of]
        self._arrivals_applied = True

    def pa_view(self, pattern: BhPattern) -> PaDecisionView:
        sc = self.scenario
        backlog = self.queues.backlog_matrix()
        sel_local, d_bar, h_bar = [], [], []
        for n in range(sc.n_sats):
            lit_global = pattern.lit_cells(n)[:sc.n_beams]
            locals_ = [list(self.coverage.covered[n]).index(g) for g in lit_global]
            sel_local.append(locals_)
            d = np.zeros(sc.n_beams)
            h = np.zeros(sc.n_beams)
            d[:len(locals_)] = backlog[n, locals_]
            h[:len(locals_)] = self.gains_local[n, locals_]
            d_bar.append(d)
            h_bar.append(h)
        return PaDecisionView(t=self.t, selected_local=sel_local,
                              backlog=np.asarray(d_bar), gains=np.asarray(h_bar),
                              scenario=sc)

    def finish_slot(self, pattern: BhPattern, powers: list[PowerAlloc]) -> SlotMetrics:
        if not self._arrivals_applied:
            raise RuntimeError("apply_arrivals must run before finish_slot")
        sc = self.scenario
        q = self.queues

        loads = np.array([satellite_load(q, pattern, n) for n in range(sc.n_sats)])
        q_gap = load_gap(loads)

        bore = boresight_matrix(pattern, self.coverage, sc.n_beams)
        powers_w = np.stack([p.powers_w for p in powers])
        state = build_slot_radio_state(sc, self.grid, self.coverage, bore, powers_w)

        served = np.zeros((sc.n_sats, sc.cells_per_sat))
        for n in range(sc.n_sats):
            for k in range(sc.n_beams):
                cell = int(bore[n, k])
                if cell < 0:
                    continue
                rate = sc.bandwidth_hz * np.log2(1.0 + sinr(state, n, k, cell))
                local = list(self.coverage.covered[n]).index(cell)
                served[n, local] = q.serve(n, local, float(rate * sc.slot_s))

        q.age_and_drop()
        delays = q.delay_matrix()
        j_gap = slot_delay_fairness(delays)
        c3, c5 = count_soft_violations(pattern, sc, self.grid)

        m = SlotMetrics(slot=self.t, throughput_bits=served, load_bits=loads,
                        delays=delays, backlog_bits=q.backlog_matrix(),
                        q_gap=q_gap, j_gap=j_gap, violations=c3 + c5)
        m.reward = bh_reward(m, sc)
        self.t += 1
        self._arrivals_applied = False
        return m


def run_episode(scenario: Scenario, bh_policy, pa_policy, seed: int,
                estimator=None, n_slots: int | None = None,
                csv_path: str | Path | None = None,
                env: SimEnv | None = None) -> EpisodeMetrics:
    """Run one full episode; returns aggregate metrics (optionally slot CSV)."""
    if env is None:
        env = SimEnv(scenario, estimator=estimator)
    env.reset(seed, n_slots=n_slots)
    bh_policy.reset(env, seed)
    pa_policy.reset(env, seed)

    sc = scenario
    agg = EpisodeMetrics(n_slots=env.n_slots,
                         throughput_bits_by_sat=np.zeros(sc.n_sats),
                         load_bits_by_sat_mean=np.zeros(sc.n_sats),
                         delay_slots_by_sat_mean=np.zeros(sc.n_sats))
    rows = []
    delay_sum = 0.0
    while not env.done:
        pattern = bh_policy.decide(env.bh_view())
        env.apply_arrivals()
        powers = pa_policy.decide(env.pa_view(pattern))
        m = env.finish_slot(pattern, powers)

        agg.throughput_bits += float(m.throughput_bits.sum())
        agg.throughput_bits_by_sat += m.throughput_bits.sum(axis=1)
        agg.load_bits_by_sat_mean += m.load_bits
        agg.delay_slots_by_sat_mean += m.delays.mean(axis=1)
        agg.q_bits += m.q_gap
        agg.j_slots += m.j_gap
        agg.violations += m.violations
        agg.bh_reward_sum += m.reward
        delay_sum += float(m.delays.mean())
        if csv_path is not None:
            rows.extend(slot_csv_rows(m, env.queues))

    agg.load_bits_by_sat_mean /= env.n_slots
    agg.delay_slots_by_sat_mean /= env.n_slots
    agg.delay_slots_mean = delay_sum / env.n_slots
    agg.arrived_bits = env.queues.arrived_bits
    agg.served_bits = env.queues.served_bits
    agg.dropped_bits = env.queues.dropped_bits
    agg.final_backlog_bits = (env.queues.canonical_backlog() if env.mirrored
                              else float(env.queues.phi.sum()))
    agg.p0 = p0_objective(agg.throughput_bits, agg.j_slots, sc, env.n_slots)
    if csv_path is not None:
        write_slot_csv(csv_path, rows)
    return agg


def evaluate(scenario: Scenario, policies: dict, seeds: list[int],
             episodes_per_seed: int, estimator=None,
             csv_path: str | Path | None = None) -> dict:
    """Evaluate named (bh, pa) policy pairs; returns summary stats per method.

    Episode seeds are derived as seed * 1000 + episode so methods see
    identical traffic.
    """
    rows = []
    summary: dict[str, dict] = {}
    for method, (bh_policy, pa_policy) in policies.items():
        env = SimEnv(scenario, estimator=estimator)
        per_episode = []
        for seed in seeds:
            for ep in range(episodes_per_seed):
                m = run_episode(scenario, bh_policy, pa_policy,
                                seed * 1000 + ep, env=env)
                per_episode.append(m)
                for sat in range(scenario.n_sats):
                    rows.append({
                        "method": method, "seed": seed, "episode": ep, "sat": sat,
                        "throughput_bits": repr(float(m.throughput_bits_by_sat[sat])),
                        "load_bits_mean": repr(float(m.load_bits_by_sat_mean[sat])),
                        "delay_slots_mean": repr(float(m.delay_slots_by_sat_mean[sat])),
                        "q_bits": repr(m.q_bits), "j_slots": repr(m.j_slots),
                        "reward": repr(m.bh_reward_sum), "p0": repr(m.p0)})
        stats = {}
        for name, get in [("throughput_bits", lambda m: m.throughput_bits),
                          ("q_bits", lambda m: m.q_bits),
                          ("j_slots", lambda m: m.j_slots),
                          ("reward", lambda m: m.bh_reward_sum),
                          ("delay_slots_mean", lambda m: m.delay_slots_mean),
                          ("p0", lambda m: m.p0)]:
            vals = np.array([get(m) for m in per_episode])
            stats[name] = {"mean": float(vals.mean()),
                           "std": float(vals.std(ddof=0))}
        summary[method] = stats
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=EVAL_CSV_COLUMNS)
            w.writeheader()
            w.writerows(rows)
    return summary


def sweep(scenario_factory, axis: str, values: list, policies_factory,
          seeds: list[int], csv_path: str | Path | None = None) -> list[dict]:
    """Sweep one scenario axis (`alpha`, `beta`, or `total_demand`).

    scenario_factory(axis, value) -> Scenario; policies_factory(scenario) ->
    {method: (bh, pa)}.  Returns (and optionally writes) per-episode rows.
    """
    if not values:
        raise ValueError("sweep needs at least one axis value")
    rows = []
    for value in values:
        sc = scenario_factory(axis, value)
        policies = policies_factory(sc)
        for method, (bh_policy, pa_policy) in policies.items():
            env = SimEnv(sc)
            for seed in seeds:
                m = run_episode(sc, bh_policy, pa_policy, seed, env=env)
                rows.append({
                    "method": method, "axis": axis, "value": repr(float(value)),
                    "seed": seed, "episode": 0,
                    "throughput_bits": repr(m.throughput_bits),
                    "q_bits": repr(m.q_bits), "j_slots": repr(m.j_slots),
                    "delay_slots_mean": repr(m.delay_slots_mean),
                    "dropped_bits": repr(m.dropped_bits), "p0": repr(m.p0)})
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SWEEP_CSV_COLUMNS)
            w.writeheader()
            w.writerows(rows)
    return rows


def write_training_csv(path: str | Path, history: list[dict]) -> None:
    """Per-episode training log (missing columns filled with zeros)."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRAIN_CSV_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in history:
            filled = {k: row.get(k, 0) for k in TRAIN_CSV_COLUMNS}
            w.writerow(filled)


def scaled_demand_scenario(base: Scenario, total_demand_bits_per_slot: float) -> Scenario:
    """Scale hot/cold means so the expected per-slot total hits the target."""
    cfg = base.traffic
    v = base.n_cells_total
    n_hot = round(cfg.hotspot_fraction * v)
    current = n_hot * cfg.mean_hot_bits + (v - n_hot) * cfg.mean_cold_bits
    if current <= 0:
        raise ValueError("base traffic has zero demand; cannot scale")
    ratio = total_demand_bits_per_slot / current
    doc = base.to_dict()
    doc["traffic"]["mean_hot_bits"] = cfg.mean_hot_bits * ratio
    doc["traffic"]["mean_cold_bits"] = cfg.mean_cold_bits * ratio
    return Scenario.from_dict(doc)
