"""Prognostic models: fit on historical controls, score and augment a trial."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .dataset import HistoricalDataset, TrialDataset
from .errors import (
    CovariateNameMismatch,
    DataError,
    DuplicateName,
    LengthMismatch,
    ModelCovariateMismatch,
)
from .learners import (
    FittedLearner,
    LearnerSpec,
    SelectionReport,
    SuperLearnerConfig,
    fit_discrete_super_learner,
    predict,
)

SOURCES = ("fitted_from_history", "oracle", "none")
BLOB_FORMAT = "progadjust.prognostic/1"
SCORE_COLUMN = "prog_score"


@dataclass(frozen=True, eq=False)
class PrognosticModel:
    """Maps covariates (by name, in a fixed order) to a predicted control outcome.

    ``fitted`` is either a :class:`FittedLearner` or any object exposing
    ``predict(X)`` and ``to_dict()`` (the simulation oracle).
    """

    fitted: Any
    covariate_names: tuple[str, ...]
    source: str = "fitted_from_history"
    selection: SelectionReport | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise DataError(f"unknown prognostic source {self.source!r}")
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))

    def _predict(self, X) -> np.ndarray:
        if self.source == "none" or self.fitted is None:
            raise DataError("this prognostic model carries no predictor")
        if isinstance(self.fitted, FittedLearner):
            return predict(self.fitted, X)
        return np.asarray(self.fitted.predict(X), dtype=float)


def fit_prognostic_model(hist: HistoricalDataset,
                         cfg: SuperLearnerConfig) -> PrognosticModel:
    """Super-learner regression of outcome on covariates, historical rows only."""
    model, report = fit_discrete_super_learner(cfg, hist.w, hist.y)
    return PrognosticModel(model, hist.covariate_names, "fitted_from_history", report)


def score(model: PrognosticModel, W, names: Sequence[str]) -> np.ndarray:
    if tuple(names) != model.covariate_names:
        raise CovariateNameMismatch(
            f"model expects covariates {list(model.covariate_names)}, got {list(names)}")
    r = model._predict(np.asarray(W, dtype=float))
    if not np.all(np.isfinite(r)):
        raise DataError("prognostic score produced non-finite values")
    return r


def score_trial(model: PrognosticModel, trial: TrialDataset) -> np.ndarray:
    """Score a trial, picking the model's covariates out of the trial by name."""
    absent = [c for c in model.covariate_names if c not in trial.covariate_names]
    if absent:
        raise ModelCovariateMismatch(
            f"trial lacks covariates required by the prognostic model: {absent}")
    return score(model, trial.columns(model.covariate_names), model.covariate_names)


def augment(trial: TrialDataset, r, column_name: str = SCORE_COLUMN) -> TrialDataset:
    r = np.asarray(r, dtype=float).ravel()
    if r.shape[0] != trial.n:
        raise LengthMismatch(f"score has {r.shape[0]} values for {trial.n} rows")
    if column_name in trial.covariate_names:
        raise DuplicateName(f"covariate {column_name!r} already present")
    w = np.column_stack([trial.w, r])
    return TrialDataset(trial.y, trial.a, w, (*trial.covariate_names, column_name),
                        trial.pi1)


def score_only(trial: TrialDataset, r, column_name: str = SCORE_COLUMN) -> TrialDataset:
    """Trial whose only covariate is the score (diagnostic variant)."""
    r = np.asarray(r, dtype=float).reshape(-1, 1)
    if r.shape[0] != trial.n:
        raise LengthMismatch(f"score has {r.shape[0]} values for {trial.n} rows")
    return TrialDataset(trial.y, trial.a, r, (column_name,), trial.pi1)


# --- export / import ------------------------------------------------------

def _encode(value):
    if isinstance(value, np.ndarray):
        return {"__ndarray__": value.dtype.str, "shape": list(value.shape),
                "data": value.ravel().tolist()}
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def _decode(value):
    if isinstance(value, dict) and "__ndarray__" in value:
        arr = np.array(value["data"], dtype=np.dtype(value["__ndarray__"]))
        return arr.reshape(value["shape"])
    return value


def model_to_dict(model: PrognosticModel) -> dict:
    out = {"format": BLOB_FORMAT, "source": model.source,
           "covariate_names": list(model.covariate_names)}
    if isinstance(model.fitted, FittedLearner):
        f = model.fitted
        out["learner"] = {
            "kind": f.spec.kind,
            "hyperparameters": [[k, v] for k, v in f.spec.hyperparameters],
            "n_features": f.n_features,
            "state": {k: _encode(v) for k, v in f.state.items()},
        }
    elif model.fitted is not None:
        out["oracle"] = model.fitted.to_dict()
    return out


def model_from_dict(blob: dict) -> PrognosticModel:
    if blob.get("format") != BLOB_FORMAT:
        raise DataError(f"not a prognostic model blob (format={blob.get('format')!r})")
    names = tuple(blob["covariate_names"])
    if "learner" in blob:
        lb = blob["learner"]
        spec = LearnerSpec(lb["kind"], tuple(tuple(kv) for kv in lb["hyperparameters"]))
        state = {k: _decode(v) for k, v in lb["state"].items()}
        fitted = FittedLearner(spec, state, int(lb["n_features"]))
    elif "oracle" in blob:
        from .simulation.dgp import OracleControlMean
        fitted = OracleControlMean.from_dict(blob["oracle"])
    else:
        fitted = None
    return PrognosticModel(fitted, names, blob["source"])


def save_model(model: PrognosticModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1))


def load_model(path) -> PrognosticModel:
    try:
        blob = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read prognostic model {path}: {exc}") from exc
    return model_from_dict(blob)
