"""Monte Carlo performance metrics over repeated estimates."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import TooFewReps

METRIC_FIELDS = ("bias", "var", "se_bias", "se_var", "rmse", "power", "coverage", "mean_se")


@dataclass(frozen=True)
class EstimatorMetrics:
    bias: float
    var: float          # population variance of the point estimates
    se_bias: float      # mean(se) - sample sd of the point estimates
    se_var: float       # sample variance of the estimated standard errors
    rmse: float
    power: float
    coverage: float
    mean_se: float
    reps: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricsTable:
    by_estimator: dict
    true_ate: float
    reps: int

    def __getitem__(self, estimator_id) -> EstimatorMetrics:
        return self.by_estimator[estimator_id]

    def __contains__(self, estimator_id) -> bool:
        return estimator_id in self.by_estimator

    def estimators(self) -> list[str]:
        return list(self.by_estimator)


def summarize(psi, se, ci_low, ci_high, p_value, true_ate: float,
              alpha: float = 0.05, min_reps: int = 2) -> EstimatorMetrics:
    psi = np.asarray(psi, dtype=float)
    se = np.asarray(se, dtype=float)
    R = psi.size
    if R < min_reps or R == 0:
        raise TooFewReps(f"need >= {max(min_reps, 1)} successful reps, got {R}")
    err = psi - true_ate
    sd_emp = psi.std(ddof=1) if R > 1 else math.nan
    return EstimatorMetrics(
        bias=float(err.mean()),
        var=float(psi.var(ddof=0)),
        se_bias=float(se.mean() - sd_emp),
        se_var=float(se.var(ddof=1)) if R > 1 else math.nan,
        rmse=float(math.sqrt(np.mean(err ** 2))),
        power=float(np.mean(np.asarray(p_value) < alpha)),
        coverage=float(np.mean((np.asarray(ci_low) <= true_ate)
                               & (true_ate <= np.asarray(ci_high)))),
        mean_se=float(se.mean()),
        reps=int(R),
    )


def aggregate(raw, true_ate: float, alpha: float = 0.05, min_reps: int = 2) -> MetricsTable:
    """Per-estimator metrics from raw result rows, reduced in rep order."""
    rows = sorted(raw.rows if hasattr(raw, "rows") else raw,
                  key=lambda r: (r["rep"],))
    ids: list[str] = []
    for r in rows:
        if r["estimator_id"] not in ids:
            ids.append(r["estimator_id"])
    out = {}
    reps = 0
    for est in ids:
        sel = [r for r in rows if r["estimator_id"] == est]
        cols = {k: [r[k] for r in sel] for k in ("psi_hat", "se_hat", "ci_low", "ci_high",
                                                 "p_value")}
        out[est] = summarize(cols["psi_hat"], cols["se_hat"], cols["ci_low"],
                             cols["ci_high"], cols["p_value"], true_ate, alpha, min_reps)
        reps = max(reps, len(sel))
    if not out:
        raise TooFewReps("no successful reps to aggregate")
    return MetricsTable(out, float(true_ate), reps)
