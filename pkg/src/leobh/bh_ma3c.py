"""Multi-agent asynchronous advantage actor-critic for beam hopping.

One actor and one critic per satellite plus a shared critic for the whole
constellation.  Actors act on their satellite's predicted demand and link
gains; critics value the global (all-satellite) state.  Several workers
train private copies against private environments and a global store keeps
the elementwise mean of their parameters; pattern feasibility (K distinct
in-coverage cells) holds by construction of the factored K-draw action.
"""

from __future__ import annotations

import threading

import numpy as np

from .actions import BhPattern, PowerAlloc, equal_power_alloc
from .estimator import EstimatorMixin, check_fitted
from .harness import BhDecisionView, SimEnv
from .numcore import (AdamState, GlobalParamStore, adam_step, init_mlp,
                      k_distinct_log_prob_grad, load_checkpoint, mlp_backward,
                      mlp_forward, sample_k_distinct, save_checkpoint,
                      top_k_distinct)
from .numcore.mlp import MlpParams
from .scenario import Scenario


# ---------------------------------------------------------------- state maps

def obs_scales(scenario: Scenario) -> tuple[float, float]:
    """(demand, gain) normalizers that bring observations to O(1)."""
    d_ref = scenario.normalizers.th_max / scenario.n_beams
    h_ref = scenario.peak_link_gain()
    return d_ref, h_ref


def scale_demand(demand, scenario: Scenario) -> np.ndarray:
    """Demand in units of per-beam slot capacity.

    Hot queues can sit one to two orders of magnitude above this scale; the
    resulting early-layer saturation still separates hot from cold cells,
    which is the signal the schedulers need.
    """
    d_ref, _ = obs_scales(scenario)
    return np.asarray(demand, dtype=float) / d_ref


def bh_observation(view: BhDecisionView, sat: int) -> np.ndarray:
    """Per-agent observation: predicted demand and link gains of its cells."""
    _, h_ref = obs_scales(view.scenario)
    return np.concatenate([scale_demand(view.demand_hat[sat], view.scenario),
                           view.gains[sat] / h_ref])


def bh_global_state(view: BhDecisionView) -> np.ndarray:
    """Global critic input: every satellite's observation, vectorized."""
    _, h_ref = obs_scales(view.scenario)
    return np.concatenate([scale_demand(view.demand_hat, view.scenario).ravel(),
                           (view.gains / h_ref).ravel()])


def demand_update(d_prev: np.ndarray, served: np.ndarray,
                  rho_hat: np.ndarray) -> np.ndarray:
    """Predicted demand transition: previous demand minus service plus
    estimated arrivals (floored at zero)."""
    return np.maximum(np.asarray(d_prev, dtype=float) - served, 0.0) + rho_hat


# ---------------------------------------------------------------- updates

def td_error(critic: MlpParams, state: np.ndarray, reward: float,
             next_state: np.ndarray, gamma: float) -> float:
    """One-step temporal-difference error r + gamma V(s') - V(s)."""
    v_s, _ = mlp_forward(critic, state)
    v_next, _ = mlp_forward(critic, next_state)
    return float(reward + gamma * v_next[0] - v_s[0])


def critic_td_gradient(critic: MlpParams, state: np.ndarray,
                       delta: float) -> list[np.ndarray]:
    """Descent gradient of the squared TD error (semi-gradient, target fixed)."""
    _, cache = mlp_forward(critic, state)
    grads, _ = mlp_backward(critic, cache, np.array([-delta]))
    return grads


def actor_policy_gradient(actor: MlpParams, obs: np.ndarray, chosen: list[int],
                          delta: float) -> list[np.ndarray]:
    """Ascent gradient delta * grad_theta log pi(obs, chosen)."""
    logits, cache = mlp_forward(actor, obs)
    _, dlogits = k_distinct_log_prob_grad(logits, chosen)
    grads, _ = mlp_backward(actor, cache, delta * dlogits)
    return grads


def shared_critic_gradient(shared: MlpParams, state: np.ndarray,
                           deltas: list[float]) -> list[np.ndarray]:
    """Average-TD descent gradient for the constellation-level critic."""
    return critic_td_gradient(shared, state, float(np.mean(deltas)))


# ---------------------------------------------------------------- policy

class Ma3cBhPolicy:
    """Evaluation adapter around per-satellite actor networks."""

    def __init__(self, actors: list[MlpParams], greedy: bool = True):
        self.actors = actors
        self.greedy = greedy
        self.rng = np.random.default_rng(0)

    def reset(self, env, seed: int) -> None:
        self.rng = np.random.default_rng([seed, 23])

    def decide(self, view: BhDecisionView) -> BhPattern:
        sc = view.scenario
        sel = []
        for n, cells in enumerate(view.coverage.covered):
            logits, _ = mlp_forward(self.actors[n], bh_observation(view, n))
            if self.greedy:
                local = top_k_distinct(logits, sc.n_beams)
            else:
                local, _ = sample_k_distinct(logits, sc.n_beams, self.rng)
            sel.append([cells[i] for i in local])
        return BhPattern.from_selection(sel, sc.n_cells_total)


class _EqualPowerPa:
    def reset(self, env, seed):
        pass

    def decide(self, view):
        alloc = equal_power_alloc(view.scenario)
        return [PowerAlloc(powers_w=alloc.powers_w.copy())
                for _ in range(len(view.selected_local))]


# ---------------------------------------------------------------- trainer

class Ma3cBhTrainer(EstimatorMixin):
    """Trains the beam-hopping layer; power is fixed equal split during
    training (the PA layer optimizes it afterwards)."""

    def __init__(self, episodes: int = 6000, workers: int = 16,
                 actor_lr: float = 1e-5, critic_lr: float = 1e-4,
                 shared_lr: float = 1e-4, gamma: float = 0.99,
                 actor_hidden: tuple = (128, 128), critic_hidden: tuple = (256, 256),
                 seed: int = 0):
        self.episodes = episodes
        self.workers = workers
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.shared_lr = shared_lr
        self.gamma = gamma
        self.actor_hidden = actor_hidden
        self.critic_hidden = critic_hidden
        self.seed = seed

    # -- net construction --------------------------------------------------

    def _init_nets(self, scenario: Scenario, rng: np.random.Generator):
        n, c = scenario.n_sats, scenario.cells_per_sat
        obs_dim, state_dim = 2 * c, 2 * n * c
        actors = [init_mlp([obs_dim, *self.actor_hidden, c],
                           ["tanh"] * len(self.actor_hidden) + ["linear"], rng)
                  for _ in range(n)]
        critics = [init_mlp([state_dim, *self.critic_hidden, 1],
                            ["tanh"] * len(self.critic_hidden) + ["linear"], rng)
                   for _ in range(n)]
        shared = init_mlp([state_dim, *self.critic_hidden, 1],
                          ["tanh"] * len(self.critic_hidden) + ["linear"], rng)
        return actors, critics, shared

    @staticmethod
    def _flatten(actors, critics, shared) -> list[np.ndarray]:
        flat: list[np.ndarray] = []
        for net in [*actors, *critics, shared]:
            flat.extend(net.param_list())
        return flat

    @staticmethod
    def _load_flat(flat: list[np.ndarray], actors, critics, shared) -> None:
        i = 0
        for net in [*actors, *critics, shared]:
            for p in net.param_list():
                p[:] = flat[i]
                i += 1

    # -- training ------------------------------------------------------------

    def fit(self, scenario: Scenario, estimator=None) -> "Ma3cBhTrainer":
        rng = np.random.default_rng(self.seed)
        actors, critics, shared = self._init_nets(scenario, rng)
        store = GlobalParamStore(self._flatten(actors, critics, shared))
        self.history_ = []
        history_lock = threading.Lock()

        def worker(worker_id: int) -> None:
            w_rng = np.random.default_rng([self.seed, worker_id, 57])
            w_actors, w_critics, w_shared = self._init_nets(scenario, w_rng)
            opt_a = [AdamState.for_params(a.param_list(), self.actor_lr)
                     for a in w_actors]
            opt_c = [AdamState.for_params(c.param_list(), self.critic_lr)
                     for c in w_critics]
            opt_s = AdamState.for_params(w_shared.param_list(), self.shared_lr)
            env = SimEnv(scenario, estimator=estimator)
            episodes = self.episodes // self.workers
            for ep in range(episodes):
                self._load_flat(store.snapshot(), w_actors, w_critics, w_shared)
                stats = self._run_training_episode(
                    scenario, env, w_actors, w_critics, w_shared,
                    opt_a, opt_c, opt_s,
                    episode_seed=self.seed * 100003 + worker_id * 1009 + ep,
                    rng=w_rng)
                store.push(worker_id, self._flatten(w_actors, w_critics, w_shared))
                with history_lock:
                    self.history_.append({"episode": ep, "worker": worker_id, **stats})
            with history_lock:
                self.worker_params_[worker_id] = [
                    p.copy() for p in self._flatten(w_actors, w_critics, w_shared)]

        self.worker_params_ = {}
        if self.workers == 1:
            worker(0)
        else:
            threads = [threading.Thread(target=worker, args=(i,))
                       for i in range(self.workers)]
            for th in threads:
                th.start()
            for th in threads:
                th.join()

        final = store.snapshot()
        self._load_flat(final, actors, critics, shared)
        self.actors_, self.critics_, self.shared_critic_ = actors, critics, shared
        self.global_params_ = final
        self.scenario_ = scenario
        return self

    def _run_training_episode(self, scenario, env, actors, critics, shared,
                              opt_a, opt_c, opt_s, episode_seed, rng) -> dict:
        sc = scenario
        env.reset(episode_seed)
        pa = _EqualPowerPa()
        reward_sum = q_sum = j_sum = 0.0
        td_sq_sum = 0.0
        violations = 0
        n_slots = env.n_slots
        while not env.done:
            view = env.bh_view()
            state = bh_global_state(view)
            sel, chosens, obs_list = [], [], []
            for n, cells in enumerate(env.coverage.covered):
                obs = bh_observation(view, n)
                logits, _ = mlp_forward(actors[n], obs)
                chosen, _ = sample_k_distinct(logits, sc.n_beams, rng)
                sel.append([cells[i] for i in chosen])
                chosens.append(chosen)
                obs_list.append(obs)
            pattern = BhPattern.from_selection(sel, sc.n_cells_total)
            env.apply_arrivals()
            powers = pa.decide(env.pa_view(pattern))
            m = env.finish_slot(pattern, powers)
            next_state = bh_global_state(env.bh_view())

            deltas = []
            for n in range(sc.n_sats):
                delta = td_error(critics[n], state, m.reward, next_state, self.gamma)
                deltas.append(delta)
                adam_step(critics[n].param_list(),
                          critic_td_gradient(critics[n], state, delta), opt_c[n])
                adam_step(actors[n].param_list(),
                          actor_policy_gradient(actors[n], obs_list[n],
                                                chosens[n], delta),
                          opt_a[n], maximize=True)
            adam_step(shared.param_list(),
                      shared_critic_gradient(shared, state, deltas), opt_s)

            reward_sum += m.reward
            q_sum += m.q_gap
            j_sum += m.j_gap
            violations += m.violations
            td_sq_sum += float(np.mean(np.square(deltas)))
        return {"reward": reward_sum, "loss": td_sq_sum / n_slots,
                "q_gap": q_sum, "j_gap": j_sum, "violations": violations}

    # -- inference / io -----------------------------------------------------

    def policy(self, greedy: bool = True) -> Ma3cBhPolicy:
        check_fitted(self, "actors_")
        return Ma3cBhPolicy(self.actors_, greedy=greedy)

    def predict(self, view: BhDecisionView) -> BhPattern:
        check_fitted(self, "actors_")
        return self.policy().decide(view)

    def save(self, path) -> None:
        check_fitted(self, "actors_")
        arrays = {}
        for n, actor in enumerate(self.actors_):
            for i, p in enumerate(actor.param_list()):
                arrays[f"actor{n}_{i}"] = p
        for n, critic in enumerate(self.critics_):
            for i, p in enumerate(critic.param_list()):
                arrays[f"critic{n}_{i}"] = p
        for i, p in enumerate(self.shared_critic_.param_list()):
            arrays[f"shared_{i}"] = p
        meta = {"kind": "ma3c_bh",
                "n_sats": len(self.actors_),
                "params": {k: (list(v) if isinstance(v, tuple) else v)
                           for k, v in self.get_params().items()}}
        save_checkpoint(path, arrays, meta)

    @classmethod
    def load_policy(cls, path, greedy: bool = True) -> Ma3cBhPolicy:
        meta, arrays = load_checkpoint(path)
        if meta.get("kind") != "ma3c_bh":
            raise ValueError(f"{path} is not a beam-hopping checkpoint")
        hidden = tuple(meta["params"]["actor_hidden"])
        actors = []
        for n in range(meta["n_sats"]):
            n_layers = len(hidden) + 1
            weights = [arrays[f"actor{n}_{i}"] for i in range(n_layers)]
            biases = [arrays[f"actor{n}_{i}"] for i in range(n_layers, 2 * n_layers)]
            actors.append(MlpParams(weights, biases,
                                    ["tanh"] * len(hidden) + ["linear"]))
        return Ma3cBhPolicy(actors, greedy=greedy)
