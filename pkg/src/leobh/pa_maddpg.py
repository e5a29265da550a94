"""Per-beam power allocation with multi-agent DDPG.

Each beam owns a deterministic actor; each satellite owns one centralized
critic over the joint (state, all-beam actions), plus target copies of
everything, a replay buffer, Gaussian exploration noise, and soft target
updates.  Raw actor outputs pass through sigmoid * P_max (per-beam cap) and
a uniform rescale (total-power cap), so every emitted allocation is feasible
regardless of training state.
"""

from __future__ import annotations

import numpy as np

from .actions import PowerAlloc, project_powers
from .bh_ma3c import obs_scales
from .estimator import EstimatorMixin, check_fitted
from .harness import PaDecisionView, SimEnv
from .metrics import pa_reward
from .numcore import (AdamState, adam_step, init_mlp, load_checkpoint,
                      mlp_backward, mlp_forward, save_checkpoint)
from .numcore.mlp import MlpParams
from .scenario import Scenario


class ReplayBuffer:
    """Fixed-capacity FIFO transition store with uniform minibatch sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.size = 0
        self._head = 0

    def push(self, s, a, r, s_next) -> None:
        i = self._head
        self.s[i], self.a[i], self.r[i], self.s_next[i] = s, a, r, s_next
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return self.s[idx], self.a[idx], self.r[idx], self.s_next[idx]

    def __len__(self) -> int:
        return self.size


def soft_update(net: MlpParams, target: MlpParams, tau: float) -> None:
    """target <- tau * net + (1 - tau) * target, elementwise."""
    for p, tp in zip(net.param_list(), target.param_list()):
        tp *= 1.0 - tau
        tp += tau * p


def pa_state(view: PaDecisionView, sat: int) -> np.ndarray:
    """Selected-cell backlogs (log-compressed) and gains for one satellite.

    Unlike the BH layer, whose nets only need to separate hot from cold
    cells, the power critic has to resolve Q differences across the whole
    backlog range, so the demand feature is log-compressed.
    """
    d_ref, h_ref = obs_scales(view.scenario)
    return np.concatenate([np.log1p(view.backlog[sat] / d_ref),
                           view.gains[sat] / h_ref])


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def executed_fraction(raw: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Post-projection power as a fraction of P_max, batched on the last axis."""
    sig = _sigmoid(np.asarray(raw, dtype=float))
    cap = scenario.p_tot_w / scenario.p_max_w
    total = sig.sum(axis=-1, keepdims=True)
    scale = np.minimum(1.0, cap / np.maximum(total, 1e-300))
    return sig * scale


def executed_fraction_jacobian(raw: np.ndarray, scenario: Scenario) -> np.ndarray:
    """d executed_fraction / d raw for one action vector; shape (K, K).

    Where the total-power rescale is active, raising one beam's output also
    lowers every other beam through the shared scale factor, so the critic's
    preference propagates across beams.
    """
    raw = np.asarray(raw, dtype=float)
    sig = _sigmoid(raw)
    dsig = sig * (1.0 - sig)
    cap = scenario.p_tot_w / scenario.p_max_w
    total = sig.sum()
    if total <= cap:
        return np.diag(dsig)
    # v_j = cap * sig_j / total
    k = len(raw)
    jac = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            jac[j, i] = cap * ((i == j) * total - sig[j]) / total**2 * dsig[i]
    return jac  # jac[j, i] = d v_j / d raw_i


class _SatNets:
    """Actor-per-beam + centralized critic (and target copies) for one satellite."""

    def __init__(self, scenario: Scenario, hidden, critic_hidden,
                 rng: np.random.Generator):
        k = scenario.n_beams
        state_dim = 2 * k
        acts = ["tanh"] * len(hidden) + ["linear"]
        self.actors = [init_mlp([state_dim, *hidden, 1], acts, rng) for _ in range(k)]
        self.critic = init_mlp([state_dim + k, *critic_hidden, 1],
                               ["tanh"] * len(critic_hidden) + ["linear"], rng)
        self.actor_targets = [a.copy() for a in self.actors]
        self.critic_target = self.critic.copy()

    def raw_actions(self, state: np.ndarray, use_target: bool = False) -> np.ndarray:
        actors = self.actor_targets if use_target else self.actors
        return np.array([mlp_forward(a, state)[0][0] for a in actors])


def pa_act(actor: MlpParams, state: np.ndarray, noise: float,
           rng: np.random.Generator | None = None) -> float:
    """Raw (pre-sigmoid) power action with additive exploration noise."""
    raw = float(mlp_forward(actor, state)[0][0])
    if noise > 0.0:
        if rng is None:
            raise ValueError("exploration noise requires an rng")
        raw += float(rng.normal(0.0, noise))
    return raw


def critic_targets(sat: _SatNets, rewards: np.ndarray, s_next: np.ndarray,
                   gamma: float, scenario: Scenario) -> np.ndarray:
    """y = r + gamma Q'(s', pi'(s')) from the target networks.

    The target action is the executed (projected) power fraction, matching
    what the critic is trained on.
    """
    raw_next = np.stack(
        [np.concatenate(mlp_forward(at, s_next)[0]) for at in sat.actor_targets],
        axis=1)
    v_next = executed_fraction(raw_next, scenario)
    q_next, _ = mlp_forward(sat.critic_target, np.hstack([s_next, v_next]))
    return rewards + gamma * q_next[:, 0]


def critic_update(sat: _SatNets, batch, gamma: float, opt: AdamState,
                  scenario: Scenario) -> float:
    """Descend the mean squared Q error on one minibatch; returns the loss.

    Actions in the buffer are raw actor outputs; the critic is evaluated on
    the executed power fractions they project to.
    """
    s, a_raw, r, s_next = batch
    b = len(s)
    y = critic_targets(sat, r, s_next, gamma, scenario)
    v = executed_fraction(a_raw, scenario)
    q, cache = mlp_forward(sat.critic, np.hstack([s, v]))
    err = q[:, 0] - y
    loss = float(np.mean(err ** 2))
    c_grads, _ = mlp_backward(sat.critic, cache, (2.0 * err / b)[:, None])
    adam_step(sat.critic.param_list(), c_grads, opt)
    return loss


def actor_update(sat: _SatNets, s: np.ndarray, opts: list[AdamState],
                 scenario: Scenario) -> None:
    """Ascend each beam's dQ/d(executed power), chained through the
    projection and its own net.

    Every beam's batch action is replaced by its current policy output, so
    the critic is probed at the joint on-policy executed action.
    """
    b = len(s)
    raw_pi = np.stack([np.concatenate(mlp_forward(act, s)[0])
                       for act in sat.actors], axis=1)
    v_pi = executed_fraction(raw_pi, scenario)
    _, cache_pi = mlp_forward(sat.critic, np.hstack([s, v_pi]))
    _, d_in = mlp_backward(sat.critic, cache_pi, np.full((b, 1), 1.0 / b))
    d_v = d_in[:, s.shape[1]:]
    # chain through the projection: d_raw[., i] = sum_j d_v[., j] jac[j, i]
    d_raw = np.zeros_like(raw_pi)
    for row in range(b):
        jac = executed_fraction_jacobian(raw_pi[row], scenario)
        d_raw[row] = d_v[row] @ jac
    for i, actor in enumerate(sat.actors):
        _, a_cache = mlp_forward(actor, s)
        a_grads, _ = mlp_backward(actor, a_cache, d_raw[:, i][:, None])
        adam_step(actor.param_list(), a_grads, opts[i], maximize=True)


class MapaTrainer(EstimatorMixin):
    def __init__(self, episodes: int = 6000, actor_lr: float = 1e-5,
                 critic_lr: float = 1e-4, gamma: float = 0.99, tau: float = 1e-3,
                 buffer_size: int = 1_000_000, batch_size: int = 64,
                 noise: float = 0.2, hidden: tuple = (128, 128),
                 critic_hidden: tuple = (256, 256), seed: int = 0):
        self.episodes = episodes
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.gamma = gamma
        self.tau = tau
        self.buffer_size = buffer_size
        self.batch_size = batch_size
        self.noise = noise
        self.hidden = hidden
        self.critic_hidden = critic_hidden
        self.seed = seed

    def fit(self, scenario: Scenario, bh_policy, estimator=None) -> "MapaTrainer":
        rng = np.random.default_rng(self.seed)
        sc = scenario
        k = sc.n_beams
        nets = [_SatNets(sc, self.hidden, self.critic_hidden, rng)
                for _ in range(sc.n_sats)]
        opt_a = [[AdamState.for_params(a.param_list(), self.actor_lr)
                  for a in sat.actors] for sat in nets]
        opt_c = [AdamState.for_params(sat.critic.param_list(), self.critic_lr)
                 for sat in nets]
        buffers = [ReplayBuffer(self.buffer_size, 2 * k, k)
                   for _ in range(sc.n_sats)]
        env = SimEnv(sc, estimator=estimator)
        self.history_ = []

        for ep in range(self.episodes):
            ep_seed = self.seed * 100003 + ep
            env.reset(ep_seed)
            bh_policy.reset(env, ep_seed)
            pending = None
            reward_sum = np.zeros(sc.n_sats)
            critic_losses = []
            throughput = 0.0
            power_sum, power_n = 0.0, 0
            while not env.done:
                pattern = bh_policy.decide(env.bh_view())
                env.apply_arrivals()
                pav = env.pa_view(pattern)
                states = np.stack([pa_state(pav, n) for n in range(sc.n_sats)])
                raws = np.array([[pa_act(nets[n].actors[i], states[n], self.noise, rng)
                                  for i in range(k)] for n in range(sc.n_sats)])
                powers = [project_powers(raws[n], sc) for n in range(sc.n_sats)]
                m = env.finish_slot(pattern, powers)
                rewards = np.array([pa_reward(m, n, sc) for n in range(sc.n_sats)])

                if pending is not None:
                    p_states, p_raws, p_rewards = pending
                    for n in range(sc.n_sats):
                        buffers[n].push(p_states[n], p_raws[n], p_rewards[n], states[n])
                pending = (states, raws, rewards)

                for n in range(sc.n_sats):
                    if len(buffers[n]) >= self.batch_size:
                        loss = self._train_sat(nets[n], buffers[n], opt_a[n],
                                               opt_c[n], rng, sc)
                        critic_losses.append(loss)
                reward_sum += rewards
                throughput += float(m.throughput_bits.sum())
                power_sum += float(np.stack([p.powers_w for p in powers]).sum())
                power_n += sc.n_sats * k
            self.history_.append({
                "episode": ep,
                "reward": float(reward_sum.mean()),
                "critic_loss": float(np.mean(critic_losses)) if critic_losses else 0.0,
                "mean_power_w": power_sum / max(power_n, 1),
                "throughput_bits": throughput})
        self.nets_ = nets
        self.scenario_ = sc
        return self

    def _train_sat(self, sat: _SatNets, buffer: ReplayBuffer, opt_a, opt_c,
                   rng: np.random.Generator, scenario: Scenario) -> float:
        batch = buffer.sample(self.batch_size, rng)
        loss = critic_update(sat, batch, self.gamma, opt_c, scenario)
        actor_update(sat, batch[0], opt_a, scenario)
        for i, actor in enumerate(sat.actors):
            soft_update(actor, sat.actor_targets[i], self.tau)
        soft_update(sat.critic, sat.critic_target, self.tau)
        return loss

    # -- inference / io -----------------------------------------------------

    def policy(self) -> "MapaPaPolicy":
        check_fitted(self, "nets_")
        return MapaPaPolicy([sat.actors for sat in self.nets_])

    def predict(self, view: PaDecisionView) -> list[PowerAlloc]:
        return self.policy().decide(view)

    def save(self, path) -> None:
        check_fitted(self, "nets_")
        arrays = {}
        for n, sat in enumerate(self.nets_):
            for i, actor in enumerate(sat.actors):
                for j, p in enumerate(actor.param_list()):
                    arrays[f"s{n}_actor{i}_{j}"] = p
            for j, p in enumerate(sat.critic.param_list()):
                arrays[f"s{n}_critic_{j}"] = p
        meta = {"kind": "mapa_pa", "n_sats": len(self.nets_),
                "n_beams": len(self.nets_[0].actors),
                "params": {k: (list(v) if isinstance(v, tuple) else v)
                           for k, v in self.get_params().items()}}
        save_checkpoint(path, arrays, meta)

    @classmethod
    def load_policy(cls, path) -> "MapaPaPolicy":
        meta, arrays = load_checkpoint(path)
        if meta.get("kind") != "mapa_pa":
            raise ValueError(f"{path} is not a power-allocation checkpoint")
        hidden = tuple(meta["params"]["hidden"])
        n_layers = len(hidden) + 1
        actors_by_sat = []
        for n in range(meta["n_sats"]):
            actors = []
            for i in range(meta["n_beams"]):
                weights = [arrays[f"s{n}_actor{i}_{j}"] for j in range(n_layers)]
                biases = [arrays[f"s{n}_actor{i}_{j}"]
                          for j in range(n_layers, 2 * n_layers)]
                actors.append(MlpParams(weights, biases,
                                        ["tanh"] * len(hidden) + ["linear"]))
            actors_by_sat.append(actors)
        return MapaPaPolicy(actors_by_sat)


class MapaPaPolicy:
    """Deterministic (noise-free) evaluation adapter."""

    def __init__(self, actors_by_sat: list):
        self.actors_by_sat = actors_by_sat

    def reset(self, env, seed: int) -> None:
        pass

    def decide(self, view: PaDecisionView) -> list[PowerAlloc]:
        out = []
        for n, actors in enumerate(self.actors_by_sat):
            state = pa_state(view, n)
            raws = np.array([pa_act(a, state, 0.0) for a in actors])
            out.append(project_powers(raws, view.scenario))
        return out
