"""CSV schemas for raw results, metrics tables and learner selections."""
from __future__ import annotations

import csv
import math
from pathlib import Path

from ..errors import SchemaError
from .metrics import METRIC_FIELDS, MetricsTable

RAW_COLUMNS = ("scenario_id", "rep", "estimator_id", "psi_hat", "se_hat",
               "ci_low", "ci_high", "p_value", "mean_if")
SCENARIO_COLUMNS = ("scenario_id", "effect_kind", "shift", "n", "n_hist", "reps", "true_ate")
METRICS_COLUMNS = SCENARIO_COLUMNS + ("estimator_id",) + METRIC_FIELDS
SELECTION_COLUMNS = ("scenario_id", "rep", "fit", "kind", "hyperparameters",
                     "cv_mse", "selected")

_INT_COLUMNS = {"rep", "n", "n_hist", "reps", "selected"}
_STR_COLUMNS = {"scenario_id", "estimator_id", "effect_kind", "shift", "fit", "kind",
                "hyperparameters"}


def _cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write(path, columns, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(columns)
        for row in rows:
            out.writerow([_cell(row[c]) for c in columns])
    return path


def _read(path, columns) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path} is empty")
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path} lacks columns {missing}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} cells")
            rec = dict(zip(header, raw))
            row = {}
            for c in columns:
                try:
                    if c in _STR_COLUMNS:
                        row[c] = rec[c]
                    elif c in _INT_COLUMNS:
                        row[c] = int(rec[c])
                    else:
                        row[c] = float(rec[c])
                except ValueError:
                    raise SchemaError(f"{path}:{lineno}: bad value {rec[c]!r} "
                                      f"in column {c}") from None
            rows.append(row)
    return rows


def write_raw_csv(rows, path) -> Path:
    return _write(path, RAW_COLUMNS, rows)


def read_raw_csv(path) -> list[dict]:
    return _read(path, RAW_COLUMNS)


def metrics_rows(table: MetricsTable, scenario: dict) -> list[dict]:
    """Flatten a metrics table; ``scenario`` supplies the SCENARIO_COLUMNS."""
    base = {c: scenario[c] for c in SCENARIO_COLUMNS if c not in ("reps", "true_ate")}
    rows = []
    for est in table.estimators():
        m = table[est]
        rows.append({**base, "reps": m.reps, "true_ate": float(table.true_ate),
                     "estimator_id": est,
                     **{f: float(getattr(m, f)) for f in METRIC_FIELDS}})
    return rows


def write_metrics_csv(rows, path) -> Path:
    return _write(path, METRICS_COLUMNS, rows)


def read_metrics_csv(path) -> list[dict]:
    rows = _read(path, METRICS_COLUMNS)
    if not rows:
        raise SchemaError(f"{path} has no metric rows")
    for r in rows:
        for f in ("power", "coverage"):
            if not (math.isnan(r[f]) or 0.0 <= r[f] <= 1.0):
                raise SchemaError(f"{path}: {f}={r[f]} outside [0, 1]")
    return rows


def write_selection_csv(rows, path) -> Path:
    return _write(path, SELECTION_COLUMNS, rows)


def read_selection_csv(path) -> list[dict]:
    return _read(path, SELECTION_COLUMNS)
