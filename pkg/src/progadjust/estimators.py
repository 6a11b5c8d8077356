"""ATE estimators for a randomized trial with known assignment probability.

All four estimators return an :class:`EstimateReport` with a normal-reference
Wald interval and two-sided p-value for ``ATE = 0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .dataset import FoldAssignment, TrialDataset, make_folds
from .errors import DegenerateArm, RankDeficientDesign, TooFewRows
from .learners import SelectionReport, SuperLearnerConfig, fit_discrete_super_learner, predict
from .seeding import derive_seed

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("estimator_id", "psi_hat", "se_hat", "ci_low", "ci_high", "p_value",
                  "n", "mean_if", "epsilon", "winners")


@dataclass(frozen=True)
class EstimateReport:
    estimator_id: str
    psi_hat: float
    se_hat: float
    ci_low: float
    ci_high: float
    p_value: float
    n: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def mean_if(self) -> float:
        return self.diagnostics.get("mean_estimated_if", math.nan)

    def row(self) -> dict:
        winners = self.diagnostics.get("winners", ())
        return {"estimator_id": self.estimator_id, "psi_hat": self.psi_hat,
                "se_hat": self.se_hat, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "p_value": self.p_value, "n": self.n, "mean_if": self.mean_if,
                "epsilon": self.diagnostics.get("epsilon", math.nan),
                "winners": ";".join(winners)}


def wald_inference(psi: float, se: float, alpha: float = 0.05,
                   null_value: float = 0.0) -> tuple[float, float, float]:
    if se < 0 or not 0 < alpha < 1:
        raise ValueError("need se >= 0 and alpha in (0, 1)")
    z = stats.norm.ppf(1 - alpha / 2)
    if se == 0:
        return psi, psi, (1.0 if psi == null_value else 0.0)
    p = 2 * stats.norm.sf(abs(psi - null_value) / se)
    return psi - z * se, psi + z * se, float(min(1.0, p))


def _report(estimator_id, psi, se, n, alpha, diagnostics=None) -> EstimateReport:
    lo, hi, p = wald_inference(psi, se, alpha)
    return EstimateReport(estimator_id, float(psi), float(se), float(lo), float(hi),
                          float(p), int(n), diagnostics or {})


def estimate_unadjusted(trial: TrialDataset, alpha: float = 0.05,
                        estimator_id: str = "unadjusted") -> EstimateReport:
    y, a = trial.y, trial.a
    y1, y0 = y[a == 1], y[a == 0]
    if min(len(y1), len(y0)) < 2:
        raise DegenerateArm("difference in means needs >= 2 units per arm")
    psi = y1.mean() - y0.mean()
    se = math.sqrt(y1.var(ddof=1) / len(y1) + y0.var(ddof=1) / len(y0))
    return _report(estimator_id, psi, se, trial.n, alpha)


# --- linear adjustment ----------------------------------------------------

def _independent_columns(M: np.ndarray, tol: float = 1e-9) -> list[int]:
    """Greedy left-to-right selection of linearly independent columns."""
    basis = []
    keep = []
    for j in range(M.shape[1]):
        v = M[:, j].astype(float)
        norm = np.linalg.norm(v)
        if norm == 0:
            continue
        u = v / norm
        for b in basis:
            u = u - (b @ u) * b
        for b in basis:  # second pass for numerical orthogonality
            u = u - (b @ u) * b
        res = np.linalg.norm(u)
        if res > tol:
            basis.append(u / res)
            keep.append(j)
    return keep


def hc3_covariance(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """OLS coefficients and the HC3 sandwich covariance, via thin QR."""
    Q, R = np.linalg.qr(X)
    beta = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    h = np.einsum("ij,ij->i", Q, Q)
    denom = 1.0 - h
    omega = np.zeros_like(resid)
    ok = denom > 1e-12
    omega[ok] = resid[ok] ** 2 / denom[ok] ** 2
    Rinv = linalg.solve_triangular(R, np.eye(R.shape[0]))
    meat = (Q * omega[:, None]).T @ Q
    return beta, Rinv @ meat @ Rinv.T


def estimate_ancova_hc3(trial: TrialDataset, alpha: float = 0.05,
                        estimator_id: str = "ancova") -> EstimateReport:
    """OLS of Y on intercept, A and all covariates (main effects), HC3 SE."""
    n = trial.n
    base = np.column_stack([np.ones(n), trial.w])
    keep = _independent_columns(base)
    if 0 not in keep:
        raise RankDeficientDesign("intercept column vanished")  # pragma: no cover
    dropped = [trial.covariate_names[j - 1] for j in range(1, base.shape[1]) if j not in keep]
    if dropped:
        log.warning("ancova: dropping collinear covariates %s", dropped)
    kept = base[:, keep]
    a = trial.a.astype(float)
    if len(_independent_columns(np.column_stack([kept, a]))) <= kept.shape[1]:
        raise RankDeficientDesign("treatment is collinear with the covariates")
    X = np.column_stack([kept[:, :1], a, kept[:, 1:]])
    if n <= X.shape[1]:
        raise TooFewRows(f"{n} rows for a {X.shape[1]}-column design")
    beta, V = hc3_covariance(X, trial.y)
    se = math.sqrt(max(V[1, 1], 0.0))
    return _report(estimator_id, beta[1], se, n, alpha,
                   {"dropped_covariates": tuple(dropped)})


# --- cross-fit outcome regressions ----------------------------------------

@dataclass(frozen=True, eq=False)
class CrossFit:
    """Cross-fit predictions of E[Y | A=a, W] for every unit and both arms."""

    mu0: np.ndarray
    mu1: np.ndarray
    folds: FoldAssignment | None = None
    selections: tuple = ()  # ((fold, arm, SelectionReport), ...)

    def winners(self) -> tuple[str, ...]:
        return tuple(f"v{v}a{a}={rep.winner_spec.label()}"
                     for v, a, rep in self.selections)


def crossfit_outcome_regressions(trial: TrialDataset, sl_cfg: SuperLearnerConfig,
                                 K: int = 5) -> CrossFit:
    """Per-arm super-learner regressions, each unit predicted out of fold.

    Folds are seeded by ``sl_cfg.seed``. The inner super learner for fold
    ``v`` uses a seed derived from ``(sl_cfg.seed, v)`` only, so relabelling
    the arms swaps the two fits exactly.
    """
    n = trial.n
    n0, n1 = trial.arm_sizes()
    if min(n0, n1) < K:
        raise DegenerateArm(f"each arm needs >= {K} units for {K}-fold cross-fitting")
    if n < 2 * K:
        raise TooFewRows(f"n={n} is too small for {K}-fold cross-fitting")
    folds = make_folds(n, K, sl_cfg.seed)
    mu = np.empty((2, n))
    selections = []
    for v in range(K):
        test = folds.fold_of == v
        inner = sl_cfg.with_seed(derive_seed(sl_cfg.seed, "crossfit", v))
        for arm in (0, 1):
            train = ~test & (trial.a == arm)
            if train.sum() < 2:
                raise DegenerateArm(f"arm {arm} has <2 training units outside fold {v}")
            model, report = fit_discrete_super_learner(inner, trial.w[train], trial.y[train])
            mu[arm, test] = predict(model, trial.w[test])
            selections.append((v, arm, report))
    return CrossFit(mu[0], mu[1], folds, tuple(selections))


def _as_crossfit(trial, sl_cfg, K, crossfit):
    if crossfit is None:
        return crossfit_outcome_regressions(trial, sl_cfg, K)
    if isinstance(crossfit, CrossFit):
        return crossfit
    mu0, mu1 = crossfit
    return CrossFit(np.asarray(mu0, float), np.asarray(mu1, float))


def clever_covariate(a: np.ndarray, pi1: float) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a / pi1 - (1 - a) / (1 - pi1)


def tmle_targeting(trial: TrialDataset, mu0, mu1):
    """Linear fluctuation along the clever covariate.

    Returns ``(psi, epsilon, mu0_star, mu1_star, influence)``.
    """
    y, a = trial.y, trial.a
    H = clever_covariate(a, trial.pi1)
    mu_obs = np.where(a == 1, mu1, mu0)
    eps = float(np.sum(H * (y - mu_obs)) / np.sum(H * H))
    mu1_s = mu1 + eps / trial.pi1
    mu0_s = mu0 - eps / trial.pi0
    psi = float(np.mean(mu1_s - mu0_s))
    mu_obs_s = np.where(a == 1, mu1_s, mu0_s)
    phi = H * (y - mu_obs_s) + mu1_s - mu0_s - psi
    return psi, eps, mu0_s, mu1_s, phi


def aipw_scores(trial: TrialDataset, mu0, mu1):
    """Return ``(psi, influence)`` for the one-step estimator."""
    y, a = trial.y, trial.a
    H = clever_covariate(a, trial.pi1)
    mu_obs = np.where(a == 1, mu1, mu0)
    contrib = mu1 - mu0 + H * (y - mu_obs)
    psi = float(np.mean(contrib))
    return psi, contrib - psi


def _if_se(phi: np.ndarray) -> float:
    return math.sqrt(np.mean(phi ** 2) / len(phi))


def estimate_tmle(trial: TrialDataset, sl_cfg: SuperLearnerConfig | None = None,
                  K: int = 5, *, crossfit=None, alpha: float = 0.05,
                  estimator_id: str = "tmle") -> EstimateReport:
    """Cross-fit TMLE of the ATE.

    ``crossfit`` may carry precomputed outcome predictions (a :class:`CrossFit`
    or a ``(mu0, mu1)`` pair), in which case no learners are fitted.
    """
    cf = _as_crossfit(trial, sl_cfg, K, crossfit)
    psi, eps, _, _, phi = tmle_targeting(trial, cf.mu0, cf.mu1)
    return _report(estimator_id, psi, _if_se(phi), trial.n, alpha, {
        "mean_estimated_if": float(np.mean(phi)),
        "epsilon": eps,
        "winners": cf.winners(),
        "influence": phi,
    })


def estimate_aipw(trial: TrialDataset, sl_cfg: SuperLearnerConfig | None = None,
                  K: int = 5, *, crossfit=None, alpha: float = 0.05,
                  estimator_id: str = "aipw") -> EstimateReport:
    cf = _as_crossfit(trial, sl_cfg, K, crossfit)
    psi, phi = aipw_scores(trial, cf.mu0, cf.mu1)
    return _report(estimator_id, psi, _if_se(phi), trial.n, alpha, {
        "mean_estimated_if": float(np.mean(phi)),
        "winners": cf.winners(),
        "influence": phi,
    })


__all__ = [
    "CrossFit",
    "EstimateReport",
    "REPORT_COLUMNS",
    "SelectionReport",
    "aipw_scores",
    "clever_covariate",
    "crossfit_outcome_regressions",
    "estimate_aipw",
    "estimate_ancova_hc3",
    "estimate_tmle",
    "estimate_unadjusted",
    "hc3_covariance",
    "tmle_targeting",
    "wald_inference",
]
