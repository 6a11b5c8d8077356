"""Scenario runner: repeated draws, estimation and bookkeeping.

Each rep is a pure function of ``(config, rep index)``: its historical
draw, trial draw, cross-fit folds and super-learner seeds all come from
seeds derived from ``(master_seed, rep, stream label)``. Reps can therefore
run on any number of worker processes and still produce identical results.
"""
from __future__ import annotations

import logging
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, ProgAdjustError, ScenarioFailed
from ..estimators import (
    EstimateReport,
    crossfit_outcome_regressions,
    estimate_aipw,
    estimate_ancova_hc3,
    estimate_tmle,
    estimate_unadjusted,
)
from ..learners import PROFILES, SuperLearnerConfig
from ..prognostic import augment, fit_prognostic_model, score_trial
from ..seeding import derive_seed
from .dgp import DgpSpec, ShiftSpec, oracle_prognostic_score, sample_historical, sample_trial, true_ate

log = logging.getLogger(__name__)

ESTIMATORS = ("unadjusted", "ancova", "ancova_prog", "ancova_oracle",
              "tmle", "tmle_prog", "tmle_oracle", "aipw", "aipw_prog")
TABLE5_ROSTER = ("tmle", "tmle_prog", "tmle_oracle", "ancova", "ancova_prog",
                 "ancova_oracle", "unadjusted")
MAX_FAILED_FRACTION = 0.01


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str = "scenario"
    dgp: DgpSpec = field(default_factory=DgpSpec)
    shift: ShiftSpec = field(default_factory=ShiftSpec)
    n: int = 250
    n_hist: int = 1000
    reps: int = 200
    master_seed: int = 20240611
    estimators: tuple[str, ...] = TABLE5_ROSTER
    sl_profile: str = "fast"
    crossfit_folds: int = 5
    alpha: float = 0.05

    def __post_init__(self):
        if isinstance(self.shift, str):
            object.__setattr__(self, "shift", ShiftSpec(self.shift))
        ests = tuple(self.estimators)
        unknown = [e for e in ests if e not in ESTIMATORS]
        if unknown:
            raise ConfigError(f"unknown estimators {unknown}; choose from {ESTIMATORS}")
        if not ests or len(set(ests)) != len(ests):
            raise ConfigError("estimators must be a non-empty list without repeats")
        object.__setattr__(self, "estimators", ests)
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.n < 20:
            raise ConfigError("n must be >= 20")
        if self.sl_profile not in PROFILES:
            raise ConfigError(f"sl_profile must be one of {PROFILES}")
        if self.crossfit_folds < 2:
            raise ConfigError("crossfit_folds must be >= 2")
        if any(e.endswith("_prog") for e in ests):
            v = SuperLearnerConfig.from_profile(self.sl_profile).folds_for(self.n_hist)
            if self.n_hist < v:
                raise ConfigError(f"n_hist={self.n_hist} is below the {v} CV folds "
                                  "of the prognostic super learner")

    def with_reps(self, reps: int) -> "ScenarioConfig":
        return replace(self, reps=reps)


@dataclass
class RawResults:
    scenario_id: str
    rows: list = field(default_factory=list)        # one dict per (rep, estimator)
    selections: list = field(default_factory=list)  # super-learner selection rows
    failures: list = field(default_factory=list)    # (rep, message)
    true_ate: float = float("nan")

    def for_estimator(self, est: str) -> list:
        return [r for r in self.rows if r["estimator_id"] == est]


def _selection_rows(scenario_id, rep, fit_label, report):
    return [{"scenario_id": scenario_id, "rep": rep, "fit": fit_label, **row}
            for row in report.rows()]


def run_rep(cfg: ScenarioConfig, rep: int) -> tuple[list, list]:
    """Run every requested estimator on one simulated (historical, trial) pair."""
    ests = cfg.estimators
    sl = SuperLearnerConfig.from_profile(cfg.sl_profile)
    trial, _latent = sample_trial(cfg.dgp, cfg.n, derive_seed(cfg.master_seed, rep, "trial"))
    datasets = {"plain": trial}
    selections = []
    if any(e.endswith("_prog") for e in ests):
        hist = sample_historical(cfg.dgp, cfg.shift, cfg.n_hist,
                                 derive_seed(cfg.master_seed, rep, "historical"))
        model = fit_prognostic_model(hist, sl.with_seed(
            derive_seed(cfg.master_seed, rep, "prognostic")))
        selections += _selection_rows(cfg.scenario_id, rep, "prognostic", model.selection)
        datasets["prog"] = augment(trial, score_trial(model, trial))
    if any(e.endswith("_oracle") for e in ests):
        oracle = oracle_prognostic_score(cfg.dgp)
        datasets["oracle"] = augment(trial, score_trial(oracle, trial))

    cf_seed = derive_seed(cfg.master_seed, rep, "crossfit")
    crossfits = {}
    reports: list[EstimateReport] = []
    for est in ests:
        family, _, variant = est.partition("_")
        data = datasets[variant or "plain"]
        if family == "unadjusted":
            reports.append(estimate_unadjusted(data, cfg.alpha, est))
        elif family == "ancova":
            reports.append(estimate_ancova_hc3(data, cfg.alpha, est))
        else:
            key = variant or "plain"
            if key not in crossfits:
                crossfits[key] = crossfit_outcome_regressions(
                    data, sl.with_seed(cf_seed), cfg.crossfit_folds)
                for v, arm, report in crossfits[key].selections:
                    selections += _selection_rows(cfg.scenario_id, rep,
                                                  f"{key}/v{v}/a{arm}", report)
            fn = estimate_tmle if family == "tmle" else estimate_aipw
            reports.append(fn(data, crossfit=crossfits[key], alpha=cfg.alpha,
                              estimator_id=est))
    rows = [{"scenario_id": cfg.scenario_id, "rep": rep, "estimator_id": r.estimator_id,
             "psi_hat": r.psi_hat, "se_hat": r.se_hat, "ci_low": r.ci_low,
             "ci_high": r.ci_high, "p_value": r.p_value, "mean_if": r.mean_if}
            for r in reports]
    return rows, selections


def _safe_rep(args):
    cfg, rep = args
    try:
        rows, sel = run_rep(cfg, rep)
        return rep, rows, sel, None
    except (ProgAdjustError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return rep, [], [], f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # recorded, then counted against the failure cap
        return rep, [], [], f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}"


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def run_scenario(cfg: ScenarioConfig, workers: int | None = 1,
                 progress=None) -> RawResults:
    """Run ``cfg.reps`` reps; results are ordered by rep whatever the worker count."""
    workers = default_workers() if workers is None else max(1, int(workers))
    jobs = [(cfg, r) for r in range(cfg.reps)]
    if workers == 1 or cfg.reps == 1:
        outcomes = []
        for job in jobs:
            outcomes.append(_safe_rep(job))
            if progress:
                progress(len(outcomes), cfg.reps)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = []
            for out in pool.map(_safe_rep, jobs, chunksize=max(1, cfg.reps // (4 * workers))):
                outcomes.append(out)
                if progress:
                    progress(len(outcomes), cfg.reps)
    outcomes.sort(key=lambda o: o[0])
    raw = RawResults(cfg.scenario_id, true_ate=true_ate(cfg.dgp))
    for rep, rows, sel, err in outcomes:
        if err is not None:
            log.warning("scenario %s rep %d failed: %s", cfg.scenario_id, rep, err)
            raw.failures.append((rep, err))
            continue
        raw.rows.extend(rows)
        raw.selections.extend(sel)
    if len(raw.failures) > MAX_FAILED_FRACTION * cfg.reps:
        raise ScenarioFailed(
            f"scenario {cfg.scenario_id}: {len(raw.failures)}/{cfg.reps} reps failed; "
            f"first error: {raw.failures[0][1]}")
    return raw
