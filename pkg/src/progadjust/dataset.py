"""Trial and historical samples, CSV ingestion and fold assignment."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadFoldCount,
    DataError,
    DegenerateArm,
    DuplicateName,
    EmptyCovariateOverlap,
    LengthMismatch,
    MissingColumn,
    NonBinaryTreatment,
    ParseError,
)

log = logging.getLogger(__name__)


def _frozen(a, dtype=float, ndim=1) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    if ndim == 2 and arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != ndim:
        raise DataError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_names(names, p):
    names = tuple(str(s) for s in names)
    if len(names) != p:
        raise LengthMismatch(f"{len(names)} covariate names for {p} columns")
    if len(set(names)) != len(names):
        dupes = sorted({s for s in names if names.count(s) > 1})
        raise DuplicateName(f"duplicate covariate names: {dupes}")
    return names


@dataclass(frozen=True, eq=False)
class TrialDataset:
    """Randomized sample: outcome ``y``, treatment ``a`` and covariates ``w``.

    ``pi1`` is the known probability of assignment to treatment. Arrays are
    copied and made read-only on construction.
    """

    y: np.ndarray
    a: np.ndarray
    w: np.ndarray
    covariate_names: tuple[str, ...]
    pi1: float = 0.5

    def __post_init__(self):
        y = _frozen(self.y)
        a_raw = np.asarray(self.a, dtype=float)
        if a_raw.ndim != 1:
            raise DataError("treatment must be a vector")
        if not np.all((a_raw == 0) | (a_raw == 1)):
            raise NonBinaryTreatment("treatment values must be 0 or 1")
        a = _frozen(a_raw.astype(np.int8), dtype=np.int8)
        w = _frozen(self.w, ndim=2)
        n = y.shape[0]
        if a.shape[0] != n or w.shape[0] != n:
            raise LengthMismatch(
                f"row counts differ: y={n}, a={a.shape[0]}, w={w.shape[0]}")
        if n < 2:
            raise DataError("a trial needs at least 2 rows")
        n1 = int(a.sum())
        if n1 == 0 or n1 == n:
            raise DegenerateArm("both treatment arms must be represented")
        pi1 = float(self.pi1)
        if not 0.0 < pi1 < 1.0:
            raise DataError(f"pi1 must lie in (0, 1), got {pi1}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "pi1", pi1)
        object.__setattr__(self, "covariate_names",
                           _check_names(self.covariate_names, w.shape[1]))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.w.shape[1]

    @property
    def pi0(self) -> float:
        return 1.0 - self.pi1

    def arm_sizes(self) -> tuple[int, int]:
        n1 = int(self.a.sum())
        return self.n - n1, n1

    def columns(self, names: Sequence[str]) -> np.ndarray:
        idx = [self.covariate_names.index(s) for s in names]
        return self.w[:, idx]

    def with_outcome(self, y) -> "TrialDataset":
        return TrialDataset(y, self.a, self.w, self.covariate_names, self.pi1)


@dataclass(frozen=True, eq=False)
class HistoricalDataset:
    """All-control external sample (outcome and covariates only)."""

    y: np.ndarray
    w: np.ndarray
    covariate_names: tuple[str, ...]
    missing_covariates: tuple[str, ...] = field(default=())

    def __post_init__(self):
        y = _frozen(self.y)
        w = _frozen(self.w, ndim=2)
        if w.shape[0] != y.shape[0]:
            raise LengthMismatch(
                f"row counts differ: y={y.shape[0]}, w={w.shape[0]}")
        if y.shape[0] < 2:
            raise DataError("historical data needs at least 2 rows")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "covariate_names",
                           _check_names(self.covariate_names, w.shape[1]))
        object.__setattr__(self, "missing_covariates",
                           tuple(self.missing_covariates))

    @property
    def n(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray
    K: int

    def __post_init__(self):
        object.__setattr__(self, "fold_of", _frozen(self.fold_of, dtype=np.int64))

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.K)

    def test_mask(self, v: int) -> np.ndarray:
        return self.fold_of == v


def make_folds(n: int, K: int, seed: int) -> FoldAssignment:
    """Balanced labels ``0..K-1`` shuffled by a generator seeded with ``seed``."""
    n, K = int(n), int(K)
    if K < 2 or K > n:
        raise BadFoldCount(f"need 2 <= K <= n, got K={K}, n={n}")
    labels = np.arange(n, dtype=np.int64) % K
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return FoldAssignment(rng.permutation(labels), K)


# --- CSV ------------------------------------------------------------------

def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file; a header row is required") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DuplicateName(f"duplicate header names in {path}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} cells, found {len(row)}", row=lineno)
            rows.append((lineno, row))
    return header, rows


def _parse_matrix(header, rows, wanted):
    """Parse the ``wanted`` columns of ``rows`` into a float matrix."""
    idx = [header.index(c) for c in wanted]
    out = np.empty((len(rows), len(idx)))
    for i, (lineno, row) in enumerate(rows):
        for j, k in enumerate(idx):
            cell = row[k].strip()
            try:
                val = float(cell)
            except ValueError:
                raise ParseError(f"cannot parse {cell!r} as a number",
                                 row=lineno, column=header[k]) from None
            if not math.isfinite(val):
                raise ParseError(f"non-finite value {cell!r}",
                                 row=lineno, column=header[k])
            out[i, j] = val
    return out


def load_trial_csv(path, outcome_col: str, treatment_col: str,
                   pi1: float = 0.5) -> TrialDataset:
    header, rows = _read_rows(path)
    for col in (outcome_col, treatment_col):
        if col not in header:
            raise MissingColumn(f"column {col!r} not found in {path}")
    covs = [h for h in header if h not in (outcome_col, treatment_col)]
    y = _parse_matrix(header, rows, [outcome_col])[:, 0]
    a = _parse_matrix(header, rows, [treatment_col])[:, 0]
    bad = np.flatnonzero((a != 0) & (a != 1))
    if bad.size:
        lineno = rows[bad[0]][0]
        raise NonBinaryTreatment(
            f"treatment value {a[bad[0]]!r} at row {lineno} is not 0/1")
    w = _parse_matrix(header, rows, covs)
    n1 = int(a.sum())
    if min(n1, len(a) - n1) < 2:
        raise DegenerateArm(
            f"each arm needs at least 2 units (treated={n1}, control={len(a) - n1})")
    return TrialDataset(y, a, w, tuple(covs), pi1)


def load_historical_csv(path, outcome_col: str,
                        required_covariates: Sequence[str]) -> HistoricalDataset:
    """Load external control data restricted to covariates shared with the trial.

    Columns keep the order of ``required_covariates``. Trial covariates that
    the file lacks are logged and recorded on ``missing_covariates``.
    """
    header, rows = _read_rows(path)
    if outcome_col not in header:
        raise MissingColumn(f"column {outcome_col!r} not found in {path}")
    available = set(header) - {outcome_col}
    keep = [c for c in required_covariates if c in available]
    missing = tuple(c for c in required_covariates if c not in available)
    if not keep:
        raise EmptyCovariateOverlap(
            f"{path} shares no covariates with the trial")
    ignored = sorted(available - set(required_covariates))
    log.info("historical_load path=%s kept=%s missing=%s ignored=%s",
             path, ",".join(keep), ",".join(missing), ",".join(ignored))
    y = _parse_matrix(header, rows, [outcome_col])[:, 0]
    w = _parse_matrix(header, rows, keep)
    return HistoricalDataset(y, w, tuple(keep), missing)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_trial_csv(trial: TrialDataset, path, outcome_col: str = "y",
                    treatment_col: str = "a") -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow([outcome_col, treatment_col, *trial.covariate_names])
        for i in range(trial.n):
            out.writerow([_fmt(trial.y[i]), str(int(trial.a[i])),
                          *(_fmt(v) for v in trial.w[i])])


def write_historical_csv(hist: HistoricalDataset, path,
                         outcome_col: str = "y") -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow([outcome_col, *hist.covariate_names])
        for i in range(hist.n):
            out.writerow([_fmt(hist.y[i]), *(_fmt(v) for v in hist.w[i])])
