"""Base regression learners: intercept-only, OLS, boosted trees and k-NN."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import DataError, EmptyData, FeatureCountMismatch, NonFiniteInput
from . import _trees

KINDS = ("intercept_only", "ols", "gbt", "knn")

_GBT_DEFAULTS = {"learning_rate": 0.1, "max_depth": 3, "n_trees": 100, "min_leaf": 10}
_KNN_DEFAULTS = {"k": 5}


@dataclass(frozen=True)
class LearnerSpec:
    """One library candidate: a learner kind plus its hyperparameters.

    Hyperparameters are stored as a sorted tuple of (name, value) pairs so
    specs are hashable and compare by value.
    """

    kind: str
    hyperparameters: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown learner kind {self.kind!r}")
        hp = dict(self.hyperparameters)
        if self.kind == "gbt":
            hp = {**_GBT_DEFAULTS, **hp}
            if not 0.0 < float(hp["learning_rate"]) <= 1.0:
                raise DataError("gbt learning_rate must lie in (0, 1]")
            for key in ("max_depth", "n_trees", "min_leaf"):
                if int(hp[key]) < 1 or int(hp[key]) != hp[key]:
                    raise DataError(f"gbt {key} must be a positive integer")
                hp[key] = int(hp[key])
            hp["learning_rate"] = float(hp["learning_rate"])
        elif self.kind == "knn":
            hp = {**_KNN_DEFAULTS, **hp}
            if int(hp["k"]) < 1:
                raise DataError("knn k must be >= 1")
            hp["k"] = int(hp["k"])
        elif hp:
            raise DataError(f"{self.kind} takes no hyperparameters")
        unknown = set(hp) - set(_GBT_DEFAULTS if self.kind == "gbt" else
                                _KNN_DEFAULTS if self.kind == "knn" else ())
        if unknown:
            raise DataError(f"unknown {self.kind} hyperparameters: {sorted(unknown)}")
        object.__setattr__(self, "hyperparameters", tuple(sorted(hp.items())))

    @classmethod
    def intercept_only(cls):
        return cls("intercept_only")

    @classmethod
    def ols(cls):
        return cls("ols")

    @classmethod
    def gbt(cls, n_trees=100, learning_rate=0.1, max_depth=3, min_leaf=10):
        return cls("gbt", (("learning_rate", learning_rate), ("max_depth", max_depth),
                           ("min_leaf", min_leaf), ("n_trees", n_trees)))

    @classmethod
    def knn(cls, k=5):
        return cls("knn", (("k", k),))

    @property
    def params(self) -> dict:
        return dict(self.hyperparameters)

    def label(self) -> str:
        if not self.hyperparameters:
            return self.kind
        return self.kind + "(" + ",".join(f"{k}={v}" for k, v in self.hyperparameters) + ")"


@dataclass(frozen=True, eq=False)
class FittedLearner:
    spec: LearnerSpec
    state: dict[str, Any] = field(repr=False)
    n_features: int

    def predict(self, X) -> np.ndarray:
        return predict(self, X)


def _as_xy(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DataError(f"X must be 2-d, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("X contains non-finite values")
    if y is None:
        return X
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("y contains non-finite values")
    return X, y


def _ols_state(X, y):
    # centre, then minimum-norm least squares on the slopes
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    if X.shape[1] == 0:
        beta = np.zeros(0)
    else:
        beta = np.linalg.lstsq(Xc, y - ym, rcond=None)[0]
    return {"coef": beta, "intercept": float(ym - xm @ beta)}


def _knn_state(X, y, k):
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    keep = sd > 0
    Z = (X[:, keep] - mean[keep]) / sd[keep]
    return {"mean": mean, "sd": sd, "keep": keep, "Z": Z, "y": y.copy(),
            "k": min(k, X.shape[0])}


def fit_learner(spec: LearnerSpec, X, y) -> FittedLearner:
    X, y = _as_xy(X, y)
    m, q = X.shape
    if m < 2:
        raise EmptyData(f"need at least 2 rows to fit, got {m}")
    if q == 0 and spec.kind != "intercept_only":
        raise EmptyData(f"{spec.kind} needs at least one feature")
    if spec.kind == "intercept_only":
        state = {"mean": float(y.mean())}
    elif spec.kind == "ols":
        state = _ols_state(X, y)
    elif spec.kind == "gbt":
        state = fit_gbt_staged(spec, X, y, [spec.params["n_trees"]])[0]
    else:
        state = _knn_state(X, y, spec.params["k"])
    return FittedLearner(spec, state, q)


def fit_gbt_staged(spec: LearnerSpec, X, y, checkpoints):
    """Fit boosted trees once to ``max(checkpoints)`` rounds.

    Returns ``(state, train_staged, losses)``; the model truncated after
    ``checkpoints[c]`` rounds is exactly the model a separate fit with that
    many trees would produce.
    """
    hp = spec.params
    cps = np.array(sorted(set(int(c) for c in checkpoints)), dtype=np.int64)
    train = np.empty((len(cps), X.shape[0]))
    init = float(y.mean())
    feat, thr, val, losses = _trees.fit_boosted(
        np.ascontiguousarray(X), y, int(cps[-1]), hp["learning_rate"],
        hp["max_depth"], hp["min_leaf"], init, cps, train)
    state = {"feature": feat, "threshold": thr, "value": val, "init": init,
             "learning_rate": hp["learning_rate"]}
    return state, train, losses


def truncate_gbt(model: FittedLearner, n_trees: int) -> FittedLearner:
    st = model.state
    spec = LearnerSpec.gbt(n_trees=n_trees, learning_rate=st["learning_rate"],
                           max_depth=model.spec.params["max_depth"],
                           min_leaf=model.spec.params["min_leaf"])
    state = {**st, "feature": st["feature"][:n_trees],
             "threshold": st["threshold"][:n_trees], "value": st["value"][:n_trees]}
    return FittedLearner(spec, state, model.n_features)


def predict_gbt_staged(state, X, checkpoints) -> np.ndarray:
    cps = np.array(sorted(set(int(c) for c in checkpoints)), dtype=np.int64)
    out = np.empty((len(cps), X.shape[0]))
    _trees.predict_staged(np.ascontiguousarray(X), state["feature"], state["threshold"],
                          state["value"], state["learning_rate"], state["init"], cps, out)
    return out


def predict(model: FittedLearner, X) -> np.ndarray:
    X = _as_xy(X)
    if X.shape[1] != model.n_features:
        raise FeatureCountMismatch(
            f"model expects {model.n_features} features, got {X.shape[1]}")
    st = model.state
    kind = model.spec.kind
    if kind == "intercept_only":
        return np.full(X.shape[0], st["mean"])
    if kind == "ols":
        return st["intercept"] + X @ st["coef"]
    if kind == "gbt":
        n_trees = st["feature"].shape[0]
        return predict_gbt_staged(st, X, [n_trees])[0]
    keep = st["keep"]
    Z = (X[:, keep] - st["mean"][keep]) / st["sd"][keep]
    d2 = ((Z[:, None, :] - st["Z"][None, :, :]) ** 2).sum(axis=2)
    k = st["k"]
    # stable sort: equidistant neighbours resolved by training row order
    nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return st["y"][nn].mean(axis=1)
