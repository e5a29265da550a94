"""Comparison schedulers: random/greedy/periodic/queue-priority beam hopping
and fixed/demand-proportional power division.

All emit feasible decisions by construction (K distinct in-coverage cells;
per-beam and total power caps).  Tie-breaking is always lowest global cell
id so evaluations are reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from .actions import BhPattern, PowerAlloc, clamp_total_power, equal_power_alloc
from .estimator import EstimatorMixin
from .harness import BhDecisionView, PaDecisionView


def _pattern(selections, view: BhDecisionView) -> BhPattern:
    return BhPattern.from_selection(selections, view.scenario.n_cells_total)


def _top_k_by(scores_row, view: BhDecisionView, sat: int) -> list[int]:
    cells = view.coverage.covered[sat]
    order = sorted(range(len(cells)), key=lambda i: (-scores_row[i], cells[i]))
    return [cells[i] for i in order[:view.scenario.n_beams]]


class RandomBh:
    """Uniform K-subset of each satellite's coverage."""

    def reset(self, env, seed: int) -> None:
        self.rng = np.random.default_rng([seed, 11])

    def decide(self, view: BhDecisionView) -> BhPattern:
        k = view.scenario.n_beams
        sel = []
        for cells in view.coverage.covered:
            picks = self.rng.choice(len(cells), size=k, replace=False)
            sel.append([cells[i] for i in picks])
        return _pattern(sel, view)


class GreedyBh:
    """Top-K cells by predicted arrival traffic."""

    def reset(self, env, seed: int) -> None:
        pass

    def decide(self, view: BhDecisionView) -> BhPattern:
        rho_hat = view.demand_hat - view.backlog
        return _pattern([_top_k_by(rho_hat[n], view, n)
                         for n in range(len(view.coverage.covered))], view)


class QueueBh:
    """Top-K cells by queued backlog."""

    def reset(self, env, seed: int) -> None:
        pass

    def decide(self, view: BhDecisionView) -> BhPattern:
        return _pattern([_top_k_by(view.backlog[n], view, n)
                         for n in range(len(view.coverage.covered))], view)


class PeriodicBh:
    """Round-robin over each coverage set with period ceil(C/K)."""

    def reset(self, env, seed: int) -> None:
        pass

    def decide(self, view: BhDecisionView) -> BhPattern:
        sc = view.scenario
        c, k = sc.cells_per_sat, sc.n_beams
        period = math.ceil(c / k)
        offset = (view.t % period) * k
        sel = []
        for cells in view.coverage.covered:
            sel.append([cells[(offset + i) % c] for i in range(k)])
        return _pattern(sel, view)


class FixedPower:
    """Equal split of the satellite's power budget (per-beam capped)."""

    def reset(self, env, seed: int) -> None:
        pass

    def decide(self, view: PaDecisionView) -> list[PowerAlloc]:
        alloc = equal_power_alloc(view.scenario)
        return [PowerAlloc(powers_w=alloc.powers_w.copy())
                for _ in range(len(view.selected_local))]


class DemandPower:
    """Power shares proportional to selected-cell backlogs, waterfall-clamped."""

    def reset(self, env, seed: int) -> None:
        pass

    def decide(self, view: PaDecisionView) -> list[PowerAlloc]:
        return [PowerAlloc(powers_w=demand_proportional_powers(
            view.backlog[n], view.scenario)) for n in range(len(view.backlog))]


class DpaTrainer(EstimatorMixin):
    """Joint discrete beam-hopping + power baseline.

    One agent per satellite picks K cells (factored draws) and one power
    level per beam from a discrete grid; trained with the same actor-critic
    update as the beam-hopping layer, rewarded on throughput/delay fairness
    minus the co-illumination penalty.
    """

    def __init__(self, episodes: int = 6000, actor_lr: float = 1e-5,
                 critic_lr: float = 1e-4, gamma: float = 0.99,
                 actor_hidden: tuple = (128, 128), critic_hidden: tuple = (256, 256),
                 power_levels: tuple = (0.25, 0.5, 0.75, 1.0), seed: int = 0):
        self.episodes = episodes
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.gamma = gamma
        self.actor_hidden = actor_hidden
        self.critic_hidden = critic_hidden
        self.power_levels = power_levels
        self.seed = seed

    def _init_nets(self, scenario, rng):
        from .numcore import init_mlp
        n, c, k = scenario.n_sats, scenario.cells_per_sat, scenario.n_beams
        n_levels = len(self.power_levels)
        actors = [init_mlp([2 * c, *self.actor_hidden, c + k * n_levels],
                           ["tanh"] * len(self.actor_hidden) + ["linear"], rng)
                  for _ in range(n)]
        critics = [init_mlp([2 * n * c, *self.critic_hidden, 1],
                            ["tanh"] * len(self.critic_hidden) + ["linear"], rng)
                   for _ in range(n)]
        return actors, critics

    def fit(self, scenario, estimator=None) -> "DpaTrainer":
        from .bh_ma3c import bh_global_state, bh_observation
        from .harness import SimEnv
        from .metrics import pa_reward
        from .numcore import AdamState, adam_step, mlp_backward, mlp_forward

        sc = scenario
        rng = np.random.default_rng(self.seed)
        actors, critics = self._init_nets(sc, rng)
        opt_a = [AdamState.for_params(a.param_list(), self.actor_lr) for a in actors]
        opt_c = [AdamState.for_params(c.param_list(), self.critic_lr) for c in critics]
        env = SimEnv(sc, estimator=estimator)
        self.history_ = []
        for ep in range(self.episodes):
            env.reset(self.seed * 100003 + ep)
            reward_sum = 0.0
            while not env.done:
                view = env.bh_view()
                state = bh_global_state(view)
                decisions = []
                for n in range(sc.n_sats):
                    obs = bh_observation(view, n)
                    logits, cache = mlp_forward(actors[n], obs)
                    sel, levels, dlogits = _sample_dpa_action(
                        logits, sc, len(self.power_levels), rng)
                    decisions.append((obs, sel, levels, dlogits, cache))
                pattern = BhPattern.from_selection(
                    [[view.coverage.covered[n][i] for i in d[1]]
                     for n, d in enumerate(decisions)], sc.n_cells_total)
                env.apply_arrivals()
                powers = self._powers_from_levels(
                    pattern, [d[2] for d in decisions], sc)
                m = env.finish_slot(pattern, powers)
                next_state = bh_global_state(env.bh_view())
                for n in range(sc.n_sats):
                    r = pa_reward(m, n, sc) - sc.penalty_coeff * m.violations
                    reward_sum += r / sc.n_sats
                    v_s, cache_s = mlp_forward(critics[n], state)
                    v_next, _ = mlp_forward(critics[n], next_state)
                    delta = float(r + self.gamma * v_next[0] - v_s[0])
                    c_grads, _ = mlp_backward(critics[n], cache_s, np.array([-delta]))
                    adam_step(critics[n].param_list(), c_grads, opt_c[n])
                    obs, _, _, dlogits, _ = decisions[n]
                    logits, a_cache = mlp_forward(actors[n], obs)
                    a_grads, _ = mlp_backward(actors[n], a_cache, delta * dlogits)
                    adam_step(actors[n].param_list(), a_grads, opt_a[n],
                              maximize=True)
            self.history_.append({"episode": ep, "reward": reward_sum})
        self.actors_ = actors
        self.critics_ = critics
        return self

    def _powers_from_levels(self, pattern, levels_by_sat, scenario):
        out = []
        for n, levels in enumerate(levels_by_sat):
            p = np.array([self.power_levels[l] for l in levels]) * scenario.p_max_w
            out.append(PowerAlloc(powers_w=clamp_total_power(p, scenario)))
        return out

    def policy(self, greedy: bool = True) -> "DpaPolicy":
        from .estimator import check_fitted
        check_fitted(self, "actors_")
        return DpaPolicy(self.actors_, tuple(self.power_levels), greedy=greedy)

    def save(self, path) -> None:
        from .estimator import check_fitted
        from .numcore import save_checkpoint
        check_fitted(self, "actors_")
        arrays = {}
        for n, actor in enumerate(self.actors_):
            for i, p in enumerate(actor.param_list()):
                arrays[f"actor{n}_{i}"] = p
        meta = {"kind": "dpa", "n_sats": len(self.actors_),
                "params": {k: (list(v) if isinstance(v, tuple) else v)
                           for k, v in self.get_params().items()}}
        save_checkpoint(path, arrays, meta)

    @classmethod
    def load_policy(cls, path, greedy: bool = True) -> "DpaPolicy":
        from .numcore import load_checkpoint
        from .numcore.mlp import MlpParams
        meta, arrays = load_checkpoint(path)
        if meta.get("kind") != "dpa":
            raise ValueError(f"{path} is not a DPA checkpoint")
        hidden = tuple(meta["params"]["actor_hidden"])
        n_layers = len(hidden) + 1
        actors = []
        for n in range(meta["n_sats"]):
            weights = [arrays[f"actor{n}_{i}"] for i in range(n_layers)]
            biases = [arrays[f"actor{n}_{i}"] for i in range(n_layers, 2 * n_layers)]
            actors.append(MlpParams(weights, biases,
                                    ["tanh"] * len(hidden) + ["linear"]))
        return DpaPolicy(actors, tuple(meta["params"]["power_levels"]),
                         greedy=greedy)


def _sample_dpa_action(logits, scenario, n_levels, rng):
    """Split joint logits into K-cell draw + per-beam level draws."""
    from .numcore import k_distinct_log_prob_grad, sample_k_distinct

    c, k = scenario.cells_per_sat, scenario.n_beams
    cell_logits = logits[:c]
    sel, _ = sample_k_distinct(cell_logits, k, rng)
    _, d_cells = k_distinct_log_prob_grad(cell_logits, sel)
    dlogits = np.zeros_like(logits)
    dlogits[:c] = d_cells
    levels = []
    for beam in range(k):
        lo = c + beam * n_levels
        z = logits[lo:lo + n_levels]
        p = np.exp(z - z.max())
        p /= p.sum()
        # single-level grids degenerate to a certain draw with zero gradient
        level = int(rng.choice(n_levels, p=p)) if n_levels > 1 else 0
        if n_levels > 1:
            dlogits[lo:lo + n_levels] = -p
            dlogits[lo + level] += 1.0
        levels.append(level)
    # level head k powers the k-th smallest selected cell (beam order)
    return sorted(sel), levels, dlogits


class DpaPolicy:
    """Joint decide: acts as both the BH policy and the PA policy."""

    def __init__(self, actors, power_levels: tuple, greedy: bool = True):
        self.actors = actors
        self.power_levels = power_levels
        self.greedy = greedy
        self.rng = np.random.default_rng(0)
        self._levels = None

    def reset(self, env, seed: int) -> None:
        self.rng = np.random.default_rng([seed, 31])
        self._levels = None

    def decide(self, view):
        if isinstance(view, PaDecisionView):
            return self._decide_powers(view)
        return self._decide_pattern(view)

    def _decide_pattern(self, view: BhDecisionView) -> BhPattern:
        from .bh_ma3c import bh_observation
        from .numcore import mlp_forward, sample_k_distinct, top_k_distinct

        sc = view.scenario
        c, k = sc.cells_per_sat, sc.n_beams
        n_levels = len(self.power_levels)
        sel_global, self._levels = [], []
        for n, cells in enumerate(view.coverage.covered):
            logits, _ = mlp_forward(self.actors[n], bh_observation(view, n))
            if self.greedy:
                sel = top_k_distinct(logits[:c], k)
            else:
                sel, _ = sample_k_distinct(logits[:c], k, self.rng)
            levels = []
            for beam in range(k):
                z = logits[c + beam * n_levels: c + (beam + 1) * n_levels]
                if self.greedy or n_levels == 1:
                    levels.append(int(np.argmax(z)))
                else:
                    p = np.exp(z - z.max())
                    levels.append(int(self.rng.choice(n_levels, p=p / p.sum())))
            self._levels.append(levels)
            sel_global.append([cells[i] for i in sorted(sel)])
        return BhPattern.from_selection(sel_global, sc.n_cells_total)

    def _decide_powers(self, view: PaDecisionView) -> list[PowerAlloc]:
        if self._levels is None:
            raise RuntimeError("DPA power decision requested before the pattern")
        sc = view.scenario
        out = []
        for levels in self._levels:
            p = np.array([self.power_levels[l] for l in levels]) * sc.p_max_w
            out.append(PowerAlloc(powers_w=clamp_total_power(p, sc)))
        return out


def demand_proportional_powers(demands: np.ndarray, scenario) -> np.ndarray:
    """Split the budget by demand ratio; clamp at P_max and redistribute the
    surplus among unclamped beams until feasible."""
    demands = np.asarray(demands, dtype=float)
    k = len(demands)
    p_max = scenario.p_max_w
    budget = min(scenario.p_tot_w, k * p_max)
    if demands.sum() <= 0.0:
        return clamp_total_power(np.full(k, min(budget / k, p_max)), scenario)
    p = np.zeros(k)
    active = demands > 0.0
    remaining = budget
    while True:
        share = demands * active
        p_active = remaining * share / share.sum()
        over = active & (p_active >= p_max)
        if not over.any():
            p[active] = p_active[active]
            break
        p[over] = p_max
        remaining -= p_max * over.sum()
        active = active & ~over
        if not active.any() or remaining <= 0.0:
            break
    return clamp_total_power(np.minimum(p, p_max), scenario)
