"""Structural simulation model for trial and historical samples.

Twenty observed covariates plus one latent ``u``. The control mean depends on
``w1`` through ``10 sin(|w1| pi)`` and on ``u`` through step terms that only
switch on for ``u > 1``, i.e. never in the trial (``u ~ Unif(0, 1)``) but
possibly in a shifted historical population.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dataset import HistoricalDataset, TrialDataset
from ..errors import DataError
from ..seeding import rng_for

EFFECT_KINDS = ("heterogeneous", "constant")

# kind -> (variable, low, high) of the historical law
SHIFTS = {
    "none": None,
    "observed_small": ("w1", -5.0, -2.0),
    "observed_large": ("w1", -7.0, -4.0),
    "unobserved_small": ("u", 0.5, 1.5),
    "unobserved_large": ("u", 1.0, 2.0),
}

TRIAL_W1 = (-2.0, 1.0)
TRIAL_U = (0.0, 1.0)

# (threshold, jump) step terms of the control mean, per effect kind
_STEPS = {
    "heterogeneous": ((1.01, 8.0), (1.55, 15.0)),
    "constant": ((1.21, 20.0), (1.55, 15.0)),
}
CONSTANT_EFFECT = -0.8


@dataclass(frozen=True)
class DgpSpec:
    effect_kind: str = "heterogeneous"
    pi1: float = 0.5
    noise_sd: float = 2.0
    n_covariates: int = 20
    w2_sd: float = 3.0
    w3_rate: float = 0.8
    w4_shape: float = 2.0
    w4_scale: float = 1.0

    def __post_init__(self):
        if self.effect_kind not in EFFECT_KINDS:
            raise DataError(f"effect_kind must be one of {EFFECT_KINDS}")
        if not 0 < self.pi1 < 1:
            raise DataError("pi1 must lie in (0, 1)")
        if self.n_covariates < 4:
            raise DataError("the model needs at least 4 covariates")
        if self.noise_sd < 0 or self.w2_sd < 0 or self.w3_rate <= 0:
            raise DataError("invalid distribution parameters")

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return tuple(f"w{j}" for j in range(1, self.n_covariates + 1))


@dataclass(frozen=True)
class ShiftSpec:
    kind: str = "none"

    def __post_init__(self):
        if self.kind not in SHIFTS:
            raise DataError(f"shift must be one of {sorted(SHIFTS)}")

    def w1_range(self) -> tuple[float, float]:
        s = SHIFTS[self.kind]
        return (s[1], s[2]) if s and s[0] == "w1" else TRIAL_W1

    def u_range(self) -> tuple[float, float]:
        s = SHIFTS[self.kind]
        return (s[1], s[2]) if s and s[0] == "u" else TRIAL_U


@dataclass(frozen=True, eq=False)
class Latent:
    u: np.ndarray
    y1: np.ndarray
    y0: np.ndarray


def outcome_means(effect_kind: str, w1, u) -> tuple[np.ndarray, np.ndarray]:
    """Conditional means ``(m0, m1)`` given ``w1`` and the latent ``u``."""
    w1 = np.asarray(w1, dtype=float)
    u = np.asarray(u, dtype=float)
    base = 10.0 * np.sin(np.abs(w1) * np.pi)
    steps = sum(jump * (u > thr) for thr, jump in _STEPS[effect_kind])
    m0 = base + steps
    if effect_kind == "heterogeneous":
        m1 = base ** 2 + steps - 42.0
    else:
        m1 = base + steps + CONSTANT_EFFECT
    return m0, m1


def _covariates(dgp: DgpSpec, n: int, rng, w1_range, u_range):
    W = np.empty((n, dgp.n_covariates))
    W[:, 0] = rng.uniform(*w1_range, size=n)
    W[:, 1] = rng.normal(0.0, dgp.w2_sd, size=n)
    W[:, 2] = rng.exponential(1.0 / dgp.w3_rate, size=n)
    W[:, 3] = rng.gamma(dgp.w4_shape, dgp.w4_scale, size=n)
    W[:, 4:] = rng.uniform(0.0, 1.0, size=(n, dgp.n_covariates - 4))
    u = rng.uniform(*u_range, size=n)
    return W, u


def sample_trial(dgp: DgpSpec, n: int, seed: int) -> tuple[TrialDataset, Latent]:
    if n < 1:
        raise DataError("n must be >= 1")
    rng = rng_for(seed, "trial")
    W, u = _covariates(dgp, n, rng, TRIAL_W1, TRIAL_U)
    a = (rng.uniform(size=n) < dgp.pi1).astype(np.int8)
    m0, m1 = outcome_means(dgp.effect_kind, W[:, 0], u)
    y1 = m1 + rng.normal(0.0, dgp.noise_sd, size=n)
    y0 = m0 + rng.normal(0.0, dgp.noise_sd, size=n)
    y = np.where(a == 1, y1, y0)
    trial = TrialDataset(y, a, W, dgp.covariate_names, dgp.pi1)
    return trial, Latent(u, y1, y0)


def sample_historical(dgp: DgpSpec, shift: ShiftSpec | str, n_hist: int,
                      seed: int) -> HistoricalDataset:
    if n_hist < 1:
        raise DataError("n_hist must be >= 1")
    shift = ShiftSpec(shift) if isinstance(shift, str) else shift
    rng = rng_for(seed, "historical")
    W, u = _covariates(dgp, n_hist, rng, shift.w1_range(), shift.u_range())
    m0, _ = outcome_means(dgp.effect_kind, W[:, 0], u)
    y = m0 + rng.normal(0.0, dgp.noise_sd, size=n_hist)
    return HistoricalDataset(y, W, dgp.covariate_names)


def step_offset(effect_kind: str, u_range: tuple[float, float]) -> float:
    """E of the step terms when ``u ~ Unif(u_range)``: sum of jump * P(u > thr)."""
    lo, hi = u_range
    total = 0.0
    for thr, jump in _STEPS[effect_kind]:
        total += jump * min(1.0, max(0.0, (hi - thr) / (hi - lo)))
    return total


class OracleControlMean:
    """Trial control mean ``E[Y | W, A=0, D=1] = 10 sin(|w1| pi)``.

    The step terms vanish because the trial latent never exceeds 1.
    """

    def __init__(self, effect_kind: str = "heterogeneous", w1_index: int = 0):
        self.effect_kind = effect_kind
        self.w1_index = w1_index

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        w1 = X[:, self.w1_index]
        return 10.0 * np.sin(np.abs(w1) * np.pi) + step_offset(self.effect_kind, TRIAL_U)

    def to_dict(self) -> dict:
        return {"effect_kind": self.effect_kind, "w1_index": self.w1_index}

    @classmethod
    def from_dict(cls, d):
        return cls(d["effect_kind"], int(d["w1_index"]))


def oracle_prognostic_score(dgp: DgpSpec):
    from ..prognostic import PrognosticModel
    return PrognosticModel(OracleControlMean(dgp.effect_kind), dgp.covariate_names, "oracle")


def true_ate(dgp: DgpSpec) -> float:
    """Closed-form trial ATE.

    Over ``w1 ~ Unif(-2, 1)``, ``|w1| pi`` sweeps whole half-periods, giving
    ``E[sin^2] = 1/2`` and ``E[sin] = 2 / (3 pi)``.
    """
    if dgp.effect_kind == "constant":
        return CONSTANT_EFFECT
    return 100.0 * 0.5 - 42.0 - 10.0 * 2.0 / (3.0 * math.pi)


def monte_carlo_ate(dgp: DgpSpec, draws: int, seed: int, chunk: int = 1_000_000,
                    stratified: bool = False) -> tuple[float, float]:
    """Brute-force ATE: mean and standard error of ``m1 - m0`` over draws.

    With ``stratified`` the ``w1`` range is cut into ``draws // 2`` equal
    strata holding two uniform draws each; the standard error then comes
    from the within-stratum pair differences.
    """
    rng = rng_for(seed, "ate-oracle")
    lo, hi = TRIAL_W1
    if stratified:
        H = draws // 2
        total = 0.0
        pair_sq = 0.0
        for start in range(0, H, chunk):
            h = np.arange(start, min(start + chunk, H))
            w1 = lo + (hi - lo) * (h[:, None] + rng.uniform(size=(len(h), 2))) / H
            u = rng.uniform(*TRIAL_U, size=w1.shape)
            m0, m1 = outcome_means(dgp.effect_kind, w1, u)
            d = m1 - m0
            total += d.sum()
            pair_sq += ((d[:, 0] - d[:, 1]) ** 2).sum()
        return total / (2 * H), math.sqrt(pair_sq / 4) / H
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < draws:
        m = min(chunk, draws - done)
        w1 = rng.uniform(lo, hi, size=m)
        u = rng.uniform(*TRIAL_U, size=m)
        m0, m1 = outcome_means(dgp.effect_kind, w1, u)
        d = m1 - m0
        total += d.sum()
        total_sq += (d * d).sum()
        done += m
    mean = total / draws
    var = max(total_sq / draws - mean * mean, 0.0)
    return mean, math.sqrt(var / draws)
