"""Minimal sklearn-style estimator plumbing.

Learners expose __init__ hyperparameters, fit/predict, and get_params /
set_params with sklearn semantics, so they clone and grid-search cleanly
without pulling in scikit-learn as a dependency.
"""

from __future__ import annotations

import inspect


class EstimatorMixin:
    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [p.name for p in sig.parameters.values()
                if p.name != "self" and p.kind != p.VAR_KEYWORD]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class NotFittedError(RuntimeError):
    pass


def check_fitted(est, attribute: str) -> None:
    if not hasattr(est, attribute):
        raise NotFittedError(
            f"{type(est).__name__} is not fitted yet; call fit() first")
