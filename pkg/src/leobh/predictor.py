"""One-step-ahead arrival forecasting.

The learned predictor is a single-layer LSTM per satellite, trained with
truncated backprop-through-time on that satellite's per-cell arrival series.
Inputs and targets share one scalar normalization so predictions come back
in bits.  The persistence forecaster (predict last observation) is the floor
any trained model has to beat.
"""

from __future__ import annotations

import numpy as np

from .estimator import EstimatorMixin, check_fitted
from .geometry import CoverageMap
from .numcore import (AdamState, adam_step, init_lstm, load_checkpoint,
                      lstm_backward_seq, lstm_forward_seq, lstm_step,
                      save_checkpoint)
from .numcore.lstm import GATES, LstmParams


class PersistencePredictor:
    """Forecast next-slot arrivals as the last observed arrivals."""

    def reset(self):
        return None

    def step(self, last_arrivals: np.ndarray, state=None):
        return np.asarray(last_arrivals, dtype=float), None


class TrafficPredictor(EstimatorMixin):
    """LSTM one-step-ahead forecaster for a (slots, cells) arrival series."""

    def __init__(self, window: int = 32, hidden: int = 64, epochs: int = 40,
                 lr: float = 1e-2, seed: int = 0):
        self.window = window
        self.hidden = hidden
        self.epochs = epochs
        self.lr = lr
        self.seed = seed

    # -- training ----------------------------------------------------------

    def fit(self, arrivals: np.ndarray) -> "TrafficPredictor":
        series = np.asarray(arrivals, dtype=float)
        if series.ndim != 2:
            raise ValueError("arrivals must be a (slots, cells) matrix")
        n_slots, n_cells = series.shape
        if self.window >= n_slots:
            raise ValueError(
                f"window={self.window} must be shorter than the trace ({n_slots} slots)")

        self.scale_ = float(max(series.mean(), 1e-12))
        scaled = series / self.scale_
        xs_all, ys_all = scaled[:-1], scaled[1:]

        rng = np.random.default_rng(self.seed)
        params = init_lstm(n_cells, self.hidden, n_cells, rng)
        opt = AdamState.for_params(params.param_list(), lr=self.lr)
        n_chunks = len(xs_all) // self.window
        if n_chunks == 0:
            raise ValueError("trace too short for one training window")

        self.loss_curve_ = []
        for _ in range(self.epochs):
            total, count = 0.0, 0
            for chunk in range(n_chunks):
                sl = slice(chunk * self.window, (chunk + 1) * self.window)
                xs, ys = xs_all[sl], ys_all[sl]
                preds, caches, _, _ = lstm_forward_seq(params, xs)
                err = preds - ys
                total += float((err ** 2).sum())
                count += err.size
                grads = lstm_backward_seq(params, caches, 2.0 * err / err.size)
                adam_step(params.param_list(), grads, opt)
            self.loss_curve_.append(total / count)
        self.params_ = params
        self.n_cells_ = n_cells
        return self

    # -- inference ---------------------------------------------------------

    def reset(self):
        """Fresh hidden state for a stateful rollout."""
        check_fitted(self, "params_")
        return (np.zeros(self.hidden), np.zeros(self.hidden))

    def step(self, last_arrivals: np.ndarray, state=None):
        """Predict next-slot arrivals from the previous slot's actuals."""
        check_fitted(self, "params_")
        if state is None:
            state = self.reset()
        h, c = state
        x = np.asarray(last_arrivals, dtype=float) / self.scale_
        h, c, y, _ = lstm_step(self.params_, x, h, c)
        return np.maximum(y * self.scale_, 0.0), (h, c)

    def predict(self, history: np.ndarray) -> np.ndarray:
        """One-step-ahead predictions for slots 1..T-1 of `history`.

        Row t of the result is the forecast of history[t] given slots < t.
        Row 0 is the zero-state output before any observation.
        """
        check_fitted(self, "params_")
        history = np.asarray(history, dtype=float)
        out = np.zeros_like(history)
        state = self.reset()
        pred, state = self.step(np.zeros(self.n_cells_), state)
        out[0] = pred
        for t in range(1, len(history)):
            pred, state = self.step(history[t - 1], state)
            out[t] = pred
        return out

    def mse(self, history: np.ndarray, start: int = 1) -> float:
        preds = self.predict(history)
        return float(np.mean((preds[start:] - history[start:]) ** 2))

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        check_fitted(self, "params_")
        p = self.params_
        arrays = {f"w_{g}": p.w[g] for g in GATES}
        arrays.update({f"u_{g}": p.u[g] for g in GATES})
        arrays.update({f"b_{g}": p.b[g] for g in GATES})
        arrays.update({"w_h": p.w_h, "b_h": p.b_h})
        meta = {"kind": "traffic_predictor", "scale": self.scale_,
                "params": {k: (v if not isinstance(v, np.generic) else v.item())
                           for k, v in self.get_params().items()}}
        save_checkpoint(path, arrays, meta)

    @classmethod
    def load(cls, path) -> "TrafficPredictor":
        meta, arrays = load_checkpoint(path)
        if meta.get("kind") != "traffic_predictor":
            raise ValueError(f"{path} is not a traffic predictor checkpoint")
        est = cls(**meta["params"])
        est.params_ = LstmParams(
            w={g: arrays[f"w_{g}"] for g in GATES},
            u={g: arrays[f"u_{g}"] for g in GATES},
            b={g: arrays[f"b_{g}"] for g in GATES},
            w_h=arrays["w_h"], b_h=arrays["b_h"])
        est.scale_ = float(meta["scale"])
        est.n_cells_ = est.params_.in_dim
        return est


def persistence_mse(history: np.ndarray, start: int = 1) -> float:
    """Mean squared error of the persistence forecast on `history`."""
    history = np.asarray(history, dtype=float)
    return float(np.mean((history[start:] - history[start - 1:-1]) ** 2))


class PredictorBank:
    """Per-satellite arrival estimators over satellite-local cell indices."""

    def __init__(self, models: list):
        self.models = models
        self._states = [None] * len(models)

    def save(self, path) -> None:
        arrays, metas = {}, []
        for n, model in enumerate(self.models):
            check_fitted(model, "params_")
            p = model.params_
            for g in GATES:
                arrays[f"sat{n}_w_{g}"] = p.w[g]
                arrays[f"sat{n}_u_{g}"] = p.u[g]
                arrays[f"sat{n}_b_{g}"] = p.b[g]
            arrays[f"sat{n}_w_h"] = p.w_h
            arrays[f"sat{n}_b_h"] = p.b_h
            metas.append({"scale": model.scale_, "params": model.get_params()})
        save_checkpoint(path, arrays, {"kind": "predictor_bank", "models": metas})

    @classmethod
    def load(cls, path) -> "PredictorBank":
        meta, arrays = load_checkpoint(path)
        if meta.get("kind") != "predictor_bank":
            raise ValueError(f"{path} is not a predictor bank checkpoint")
        models = []
        for n, m in enumerate(meta["models"]):
            est = TrafficPredictor(**m["params"])
            est.params_ = LstmParams(
                w={g: arrays[f"sat{n}_w_{g}"] for g in GATES},
                u={g: arrays[f"sat{n}_u_{g}"] for g in GATES},
                b={g: arrays[f"sat{n}_b_{g}"] for g in GATES},
                w_h=arrays[f"sat{n}_w_h"], b_h=arrays[f"sat{n}_b_h"])
            est.scale_ = float(m["scale"])
            est.n_cells_ = est.params_.in_dim
            models.append(est)
        return cls(models)

    @classmethod
    def fit_from_trace(cls, arrivals: np.ndarray, coverage: CoverageMap,
                       **predictor_params) -> "PredictorBank":
        models = []
        for n in range(coverage.n_sats):
            local = arrivals[:, coverage.covered[n]]
            models.append(TrafficPredictor(**predictor_params).fit(local))
        return cls(models)

    @classmethod
    def persistence(cls, n_sats: int) -> "PredictorBank":
        return cls([PersistencePredictor() for _ in range(n_sats)])

    def reset(self) -> None:
        self._states = [None] * len(self.models)

    def estimate(self, last_local_arrivals: np.ndarray) -> np.ndarray:
        """(N, C) previous-slot arrivals -> (N, C) next-slot estimates."""
        out = np.zeros_like(last_local_arrivals, dtype=float)
        for n, model in enumerate(self.models):
            out[n], self._states[n] = model.step(last_local_arrivals[n],
                                                 self._states[n])
        return out
