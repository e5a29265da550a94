import numpy as np
import pytest

from leobh.numcore import (AdamState, GlobalParamStore, adam_step,
                           init_lstm, init_mlp, k_distinct_log_prob,
                           k_distinct_log_prob_grad, load_checkpoint,
                           lstm_backward_seq, lstm_forward_seq, lstm_step,
                           lstm_step_backward, mlp_backward, mlp_forward,
                           sample_k_distinct, save_checkpoint, top_k_distinct,
                           zero_like_grads)
from leobh.numcore.mlp import MlpParams
from util import central_diff_grads, rel_err


# ---------------------------------------------------------------- MLP

def test_mlp_identity():
    params = MlpParams(weights=[np.eye(3)], biases=[np.zeros(3)],
                       activations=["linear"])
    x = np.array([1.0, -2.0, 0.5])
    y, _ = mlp_forward(params, x)
    np.testing.assert_array_equal(y, x)


def test_mlp_zero_weights_yield_bias():
    rng = np.random.default_rng(0)
    params = init_mlp([4, 3], ["linear"], rng)
    params.weights[0][:] = 0.0
    params.biases[0][:] = [1.0, 2.0, 3.0]
    y, _ = mlp_forward(params, rng.normal(size=4))
    np.testing.assert_allclose(y, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("seed", range(5))
def test_mlp_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    params = init_mlp([4, 8, 2], ["tanh", "linear"], rng)
    x = rng.normal(size=4)
    v = rng.normal(size=2)  # fixed projection makes the loss scalar

    def loss():
        y, _ = mlp_forward(params, x)
        return float(v @ y)

    y, cache = mlp_forward(params, x)
    analytic, _ = mlp_backward(params, cache, v), None
    numeric = central_diff_grads(loss, params.param_list())
    assert rel_err(np.concatenate([a.ravel() for a in analytic[0]]),
                   np.concatenate([n.ravel() for n in numeric])) < 1e-4


def test_mlp_input_gradient():
    rng = np.random.default_rng(3)
    params = init_mlp([5, 6, 3], ["tanh", "tanh"], rng)
    x = rng.normal(size=5)
    v = rng.normal(size=3)
    _, cache = mlp_forward(params, x)
    _, grad_x = mlp_backward(params, cache, v)

    def loss():
        y, _ = mlp_forward(params, x)
        return float(v @ y)

    numeric = central_diff_grads(loss, [x])[0]
    assert rel_err(grad_x, numeric) < 1e-4


def test_mlp_batched_matches_loop():
    rng = np.random.default_rng(5)
    params = init_mlp([3, 4, 2], ["tanh", "linear"], rng)
    xs = rng.normal(size=(6, 3))
    batch, _ = mlp_forward(params, xs)
    rows = np.stack([mlp_forward(params, x)[0] for x in xs])
    np.testing.assert_allclose(batch, rows, atol=1e-14)


# ---------------------------------------------------------------- LSTM

def zero_lstm(in_dim=3, hidden=4, out_dim=2):
    rng = np.random.default_rng(0)
    p = init_lstm(in_dim, hidden, out_dim, rng)
    for arr in p.param_list():
        arr[:] = 0.0
    return p


def test_lstm_step_zero_params():
    p = zero_lstm()
    h, c, y, _ = lstm_step(p, np.ones(3), np.zeros(4), np.zeros(4))
    np.testing.assert_allclose(c, 0.0)
    np.testing.assert_allclose(h, 0.0)
    np.testing.assert_allclose(y, 0.0)


def test_lstm_step_unit_cell_state():
    p = zero_lstm()
    h, c, y, _ = lstm_step(p, np.zeros(3), np.zeros(4), np.ones(4))
    np.testing.assert_allclose(c, 0.5)  # forget gate 0.5 * c_prev 1
    np.testing.assert_allclose(h, 0.5 * np.tanh(0.5), rtol=1e-12)
    assert h[0] == pytest.approx(0.2311, abs=1e-4)


@pytest.mark.parametrize("seed", range(3))
def test_lstm_step_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    p = init_lstm(3, 5, 2, rng)
    x = rng.normal(size=3)
    h0 = rng.normal(size=5)
    c0 = rng.normal(size=5)
    v = rng.normal(size=2)

    def loss():
        _, _, y, _ = lstm_step(p, x, h0, c0)
        return float(v @ y)

    _, _, _, cache = lstm_step(p, x, h0, c0)
    grads = zero_like_grads(p)
    lstm_step_backward(p, cache, v, np.zeros(5), np.zeros(5), grads)
    numeric = central_diff_grads(loss, p.param_list())
    assert rel_err(np.concatenate([g.ravel() for g in grads]),
                   np.concatenate([n.ravel() for n in numeric])) < 1e-4


def test_lstm_sequence_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    p = init_lstm(2, 4, 2, rng)
    xs = rng.normal(size=(6, 2))
    targets = rng.normal(size=(6, 2))

    def loss():
        ys, _, _, _ = lstm_forward_seq(p, xs)
        return float(0.5 * np.sum((ys - targets) ** 2))

    ys, caches, _, _ = lstm_forward_seq(p, xs)
    grads = lstm_backward_seq(p, caches, ys - targets)
    numeric = central_diff_grads(loss, p.param_list())
    assert rel_err(np.concatenate([g.ravel() for g in grads]),
                   np.concatenate([n.ravel() for n in numeric])) < 1e-4


# ---------------------------------------------------------------- Adam

def test_adam_first_step_is_lr_times_sign():
    p = [np.array([1.0, -1.0])]
    g = [np.array([0.1, -0.2])]
    st = AdamState.for_params(p, lr=1e-4)
    adam_step(p, g, st)
    np.testing.assert_allclose(p[0], [1.0 - 1e-4 * (0.1 / (0.1 + 1e-8)),
                                      -1.0 + 1e-4 * (0.2 / (0.2 + 1e-8))])


def test_adam_zero_gradient_keeps_params_decays_moments():
    p = [np.array([2.0])]
    st = AdamState.for_params(p, lr=1e-2)
    adam_step(p, [np.array([0.5])], st)
    m_after_1 = st.m[0].copy()
    p_after_1 = p[0].copy()
    adam_step(p, [np.array([0.0])], st)
    np.testing.assert_allclose(st.m[0], 0.9 * m_after_1)
    # param may still move on decayed momentum, but moments must shrink
    assert st.v[0][0] < 0.25
    assert np.isfinite(p[0]).all()
    assert p[0][0] != p_after_1[0] or st.m[0][0] == 0.0


def test_adam_two_steps_match_hand_recurrence():
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
    p = [np.array([0.3])]
    st = AdamState.for_params(p, lr=lr, beta1=b1, beta2=b2, eps=eps)
    gs = [np.array([0.1]), np.array([-0.05])]
    # hand recurrence
    theta, m, v = 0.3, 0.0, 0.0
    for t, g in enumerate(gs, start=1):
        m = b1 * m + (1 - b1) * g[0]
        v = b2 * v + (1 - b2) * g[0] ** 2
        mh = m / (1 - b1 ** t)
        vh = v / (1 - b2 ** t)
        theta -= lr * mh / (np.sqrt(vh) + eps)
        adam_step(p, [g], st)
    assert abs(p[0][0] - theta) < 1e-12


def test_adam_rejects_nonfinite():
    p = [np.array([1.0])]
    st = AdamState.for_params(p, lr=1e-3)
    with pytest.raises(FloatingPointError):
        adam_step(p, [np.array([np.nan])], st)


# ---------------------------------------------------------------- sampling

def test_sample_k_distinct_marginals_uniform():
    rng = np.random.default_rng(0)
    logits = np.zeros(19)
    counts = np.zeros(19)
    n = 20000
    for _ in range(n):
        chosen, _ = sample_k_distinct(logits, 4, rng)
        counts[chosen] += 1
    marginals = counts / n
    # 4/19 = 0.2105...; sd of the estimate ~ 0.0029 at n=2e4
    np.testing.assert_allclose(marginals, 4.0 / 19.0, atol=0.009)


def test_sample_k_distinct_returns_distinct_and_consistent_logprob():
    rng = np.random.default_rng(1)
    for _ in range(50):
        logits = rng.normal(size=8)
        chosen, lp = sample_k_distinct(logits, 3, rng)
        assert len(set(chosen)) == 3
        assert lp == pytest.approx(k_distinct_log_prob(logits, chosen), abs=1e-12)


def test_sample_k_distinct_dominant_logit_always_chosen():
    rng = np.random.default_rng(2)
    logits = np.zeros(10)
    logits[7] = 1e9
    for _ in range(200):
        chosen, _ = sample_k_distinct(logits, 3, rng)
        assert 7 in chosen


def test_sample_k_equals_c_exhausts():
    rng = np.random.default_rng(3)
    logits = np.array([0.3, -1.0, 2.0, 0.0])
    chosen, lp = sample_k_distinct(logits, 4, rng)
    assert sorted(chosen) == [0, 1, 2, 3]
    assert np.isfinite(lp)


def test_logprob_equals_product_of_conditionals():
    rng = np.random.default_rng(4)
    logits = rng.normal(size=5)
    chosen, lp = sample_k_distinct(logits, 2, rng)
    # independent conditional-probability recomputation
    p = np.exp(logits) / np.exp(logits).sum()
    p1 = p[chosen[0]]
    rest = np.exp(logits.copy())
    rest[chosen[0]] = 0.0
    p2 = rest[chosen[1]] / rest.sum()
    assert np.exp(lp) == pytest.approx(p1 * p2, rel=1e-12)


def test_ordered_logprobs_sum_to_one():
    logits = np.array([0.5, -0.2, 1.1, 0.0])
    total = 0.0
    for i in range(4):
        for j in range(4):
            if i != j:
                total += np.exp(k_distinct_log_prob(logits, [i, j]))
    assert total == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_logprob_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    logits = rng.normal(size=7)
    chosen, _ = sample_k_distinct(logits, 3, rng)
    _, grad = k_distinct_log_prob_grad(logits, chosen)

    def loss():
        return k_distinct_log_prob(logits, chosen)

    numeric = central_diff_grads(loss, [logits])[0]
    assert rel_err(grad, numeric) < 1e-4


def test_logprob_respects_mask():
    rng = np.random.default_rng(6)
    logits = np.zeros(6)
    mask = np.array([True, True, False, True, False, True])
    for _ in range(100):
        chosen, _ = sample_k_distinct(logits, 2, rng, mask=mask)
        assert not ({2, 4} & set(chosen))


def test_top_k_greedy_and_tie_break():
    logits = np.array([1.0, 3.0, 3.0, -1.0])
    assert top_k_distinct(logits, 2) == [1, 2]  # tie -> lowest index first
    assert top_k_distinct(np.zeros(4), 3) == [0, 1, 2]


# ---------------------------------------------------------------- store / ckpt

def test_store_average_and_snapshot():
    a = [np.array([1.0, 2.0])]
    store = GlobalParamStore(a)
    snap = store.snapshot()
    snap[0][0] = 99.0  # snapshots are copies
    assert store.snapshot()[0][0] == 1.0
    store.push(0, [np.array([2.0, 4.0])])
    store.push(1, [np.array([4.0, 6.0])])
    np.testing.assert_allclose(store.snapshot()[0], [3.0, 5.0])
    assert store.n_contributors == 2


def test_store_identical_pushes_noop():
    store = GlobalParamStore([np.zeros(3)])
    p = [np.array([1.0, -1.0, 0.5])]
    store.push(0, p)
    store.push(1, p)
    np.testing.assert_array_equal(store.snapshot()[0], p[0])


def test_checkpoint_bit_stable_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    arrays = {"w": rng.normal(size=(3, 4)), "b": rng.normal(size=4),
              "ints": np.arange(5, dtype=np.int64)}
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, arrays, meta={"kind": "test", "hidden": 4})
    meta, back = load_checkpoint(path)
    assert meta == {"kind": "test", "hidden": 4}
    for k in arrays:
        assert arrays[k].dtype == back[k].dtype
        np.testing.assert_array_equal(arrays[k], back[k])
