"""Discrete super learner: V-fold CV selection of a single library member."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..dataset import make_folds
from ..errors import DataError, TooFewRows
from .base import (
    FittedLearner,
    LearnerSpec,
    _as_xy,
    fit_gbt_staged,
    fit_learner,
    predict,
    predict_gbt_staged,
)

PROFILES = ("full", "fast")


def default_library(profile: str = "full") -> tuple[LearnerSpec, ...]:
    """Simulation library: intercept floor, OLS and a boosted-tree grid.

    ``full`` crosses learning rate 0.1 / depth 3 with 25..500 trees by 25;
    ``fast`` keeps only 50, 100 and 200 trees.
    """
    if profile == "full":
        grid = range(25, 501, 25)
    elif profile == "fast":
        grid = (50, 100, 200)
    else:
        raise DataError(f"unknown learner profile {profile!r}")
    return (LearnerSpec.intercept_only(), LearnerSpec.ols(),
            *(LearnerSpec.gbt(n_trees=t) for t in grid))


def default_v_folds(n_rows: int) -> int:
    return 5 if n_rows >= 1000 else 10


@dataclass(frozen=True)
class SuperLearnerConfig:
    library: tuple[LearnerSpec, ...]
    v_folds: int | None = None  # None: 5 for >= 1000 rows, else 10
    seed: int = 0

    def __post_init__(self):
        lib = tuple(self.library)
        if not lib:
            raise DataError("super learner library must be non-empty")
        if self.v_folds is not None and int(self.v_folds) < 2:
            raise DataError("v_folds must be >= 2")
        object.__setattr__(self, "library", lib)

    @classmethod
    def from_profile(cls, profile: str = "fast", seed: int = 0, v_folds=None):
        return cls(default_library(profile), v_folds, seed)

    def folds_for(self, n_rows: int) -> int:
        return int(self.v_folds) if self.v_folds is not None else default_v_folds(n_rows)

    def with_seed(self, seed: int) -> "SuperLearnerConfig":
        return SuperLearnerConfig(self.library, self.v_folds, int(seed))


@dataclass(frozen=True, eq=False)
class SelectionReport:
    candidates: tuple[LearnerSpec, ...]
    cv_mse: np.ndarray
    winner: int
    v_folds: int
    cv_predictions: np.ndarray = field(repr=False)

    @property
    def winner_spec(self) -> LearnerSpec:
        return self.candidates[self.winner]

    def rows(self) -> list[dict]:
        return [{"kind": spec.kind,
                 "hyperparameters": ";".join(f"{k}={v}" for k, v in spec.hyperparameters),
                 "cv_mse": float(mse),
                 "selected": int(i == self.winner)}
                for i, (spec, mse) in enumerate(zip(self.candidates, self.cv_mse))]

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            out = csv.DictWriter(fh, ["kind", "hyperparameters", "cv_mse", "selected"],
                                 lineterminator="\n")
            out.writeheader()
            for row in self.rows():
                out.writerow({**row, "cv_mse": format(row["cv_mse"], ".17g")})


def _gbt_groups(library: Sequence[LearnerSpec]) -> dict:
    """Group boosted-tree candidates differing only in n_trees."""
    groups: dict = {}
    for i, spec in enumerate(library):
        if spec.kind == "gbt":
            hp = spec.params
            key = (hp["learning_rate"], hp["max_depth"], hp["min_leaf"])
            groups.setdefault(key, []).append(i)
    return groups


def cross_validated_predictions(library, X, y, fold_of, V) -> np.ndarray:
    """Out-of-fold predictions, one row per library member.

    Boosted-tree candidates that share all settings but the tree count are
    fitted once per fold and read off at each requested count.
    """
    m = X.shape[0]
    preds = np.empty((len(library), m))
    groups = _gbt_groups(library)
    for v in range(V):
        test = fold_of == v
        train = ~test
        Xtr, ytr, Xte = X[train], y[train], X[test]
        for idx in groups.values():
            counts = [library[i].params["n_trees"] for i in idx]
            state, _, _ = fit_gbt_staged(library[idx[0]], Xtr, ytr, counts)
            staged = predict_gbt_staged(state, Xte, counts)
            order = sorted(set(counts))
            for i, c in zip(idx, counts):
                preds[i, test] = staged[order.index(c)]
        for i, spec in enumerate(library):
            if spec.kind != "gbt":
                preds[i, test] = predict(fit_learner(spec, Xtr, ytr), Xte)
    return preds


def fit_discrete_super_learner(cfg: SuperLearnerConfig, X, y
                               ) -> tuple[FittedLearner, SelectionReport]:
    """Select the library member with the smallest V-fold CV mean squared error.

    All candidates see the same fold assignment (seeded by ``cfg.seed``); ties
    go to the earlier library entry. The winner is refitted on every row.
    """
    X, y = _as_xy(X, y)
    m = X.shape[0]
    V = cfg.folds_for(m)
    if m < V:
        raise TooFewRows(f"{m} rows cannot be split into {V} CV folds")
    folds = make_folds(m, V, cfg.seed)
    preds = cross_validated_predictions(cfg.library, X, y, folds.fold_of, V)
    cv_mse = ((preds - y) ** 2).mean(axis=1)
    winner = int(np.argmin(cv_mse))
    spec = cfg.library[winner]
    model = fit_learner(spec, X, y)
    return model, SelectionReport(cfg.library, cv_mse, winner, V, preds)


__all__ = [
    "PROFILES",
    "SelectionReport",
    "SuperLearnerConfig",
    "cross_validated_predictions",
    "default_library",
    "default_v_folds",
    "fit_discrete_super_learner",
]
