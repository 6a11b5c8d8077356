"""Acceptance criteria, one test per criterion.

Each test prints ``ACCEPTANCE <id> PASS|FAIL <detail>``; the lines are also
collected into the terminal summary. Criteria 8-12 run 200-rep Monte Carlo
scenarios (marked ``slow``); criterion 13 is long-running and only runs when
PROGADJUST_RUN_OPTIONAL=1. Scenario output is cached under pytest's cache
directory, keyed by configuration digest and package source hash.

Run standalone with ``python3 tests/test_acceptance.py``.
"""
import dataclasses
import hashlib
import math
import os
import sys
from pathlib import Path

import numpy as np
import pytest

import progadjust
from progadjust.config import config_digest
from progadjust.dataset import HistoricalDataset, TrialDataset
from progadjust.estimators import (
    crossfit_outcome_regressions,
    estimate_aipw,
    estimate_tmle,
    hc3_covariance,
)
from progadjust.learners import (
    LearnerSpec,
    SuperLearnerConfig,
    cross_validated_predictions,
    fit_discrete_super_learner,
)
from progadjust.prognostic import fit_prognostic_model, score_trial
from progadjust.dataset import make_folds
from progadjust.simulation import (
    DgpSpec,
    aggregate,
    default_workers,
    monte_carlo_ate,
    preset,
    read_raw_csv,
    run_scenario,
    sample_historical,
    sample_trial,
    true_ate,
    write_raw_csv,
)

from conftest import ACCEPTANCE_LINES

REPS = 200
COVERAGE_BAND = (0.915, 0.985)
RUN_OPTIONAL = os.environ.get("PROGADJUST_RUN_OPTIONAL") == "1"


def record(cid: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {cid:>3s} {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _source_hash() -> str:
    h = hashlib.sha256()
    root = Path(progadjust.__file__).parent
    for p in sorted(root.rglob("*.py")):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


@pytest.fixture(scope="session")
def scenario_metrics(request):
    cache_dir = Path(request.config.cache.mkdir("progadjust-acceptance"))
    src = _source_hash()
    memo = {}

    def get(cfg):
        key = f"{cfg.scenario_id}-{config_digest([cfg])[:16]}-{src}"
        if key not in memo:
            path = cache_dir / f"{key}.csv"
            if path.is_file():
                rows = read_raw_csv(path)
            else:
                raw = run_scenario(cfg, workers=default_workers())
                if raw.failures:
                    print(f"{cfg.scenario_id}: {len(raw.failures)} failed reps")
                write_raw_csv(raw.rows, path)
                rows = read_raw_csv(path)
            memo[key] = aggregate(rows, true_ate(cfg.dgp), cfg.alpha)
        return memo[key]

    return get


def base(name, **kw):
    (cfg,) = preset(name)
    return dataclasses.replace(cfg, reps=REPS, sl_profile="fast", **kw)


def bias_ok(m, reps=REPS):
    return abs(m.bias) <= 3 * math.sqrt(m.var / reps)


# --- exact / analytic -------------------------------------------------------

def _hc3_literal(X, y):
    XtX_inv = np.linalg.inv(X.T @ X)
    e = y - X @ (XtX_inv @ X.T @ y)
    h = np.diag(X @ XtX_inv @ X.T)
    return XtX_inv @ (X.T @ np.diag(e ** 2 / (1 - h) ** 2) @ X) @ XtX_inv


def test_c01_hc3_matches_literal_oracle():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        n, p = int(rng.integers(10, 61)), int(rng.integers(1, 6))
        X = np.column_stack([np.ones(n), rng.integers(0, 2, size=n), rng.normal(size=(n, p))])
        y = X @ rng.normal(size=p + 2) + rng.normal(size=n) * rng.uniform(0.2, 3, size=n)
        _, V = hc3_covariance(X, y)
        worst = max(worst, float(np.max(np.abs(V - _hc3_literal(X, y)))))
    record("1", worst <= 1e-9, f"max |HC3 - literal| over 100 designs = {worst:.2e} (<= 1e-9)")


def test_c02_tmle_eif_mean_zero():
    rng = np.random.default_rng(2)
    lib = SuperLearnerConfig((LearnerSpec.intercept_only(), LearnerSpec.ols(),
                              LearnerSpec.gbt(n_trees=40, min_leaf=5)), v_folds=3)
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(40, 120))
        pi1 = float(rng.choice([0.3, 0.5, 0.7]))
        w = rng.normal(size=(n, 3))
        a = (rng.uniform(size=n) < pi1).astype(int)
        a[:5], a[5:10] = 1, 0
        y = 3 * a + np.sin(3 * w[:, 0]) * 4 + w[:, 1] + rng.normal(size=n)
        r = estimate_tmle(TrialDataset(y, a, w, ("x", "y", "z"), pi1), lib.with_seed(i))
        worst = max(worst, abs(r.mean_if) / (1 + abs(r.psi_hat)))
    record("2", worst <= 1e-8, f"max |mean phi|/(1+|psi|) over 50 datasets = {worst:.2e}")


def test_c03_ipw_closed_forms():
    t = TrialDataset([2.0, 4.0, 1.0, 1.0], [1, 1, 0, 0], np.zeros((4, 0)), ())
    zero = (np.zeros(4), np.zeros(4))
    tm = estimate_tmle(t, crossfit=zero).psi_hat
    ai = estimate_aipw(t, crossfit=zero).psi_hat
    ok = abs(tm - 2) <= 1e-10 and abs(ai - 2) <= 1e-10
    record("3", ok, f"zero-regression TMLE={tm!r}, AIPW={ai!r} (IPW value 2)")


def test_c04_true_ate():
    const = true_ate(DgpSpec("constant"))
    het = true_ate(DgpSpec("heterogeneous"))
    # plain sampling has se ~0.011 at 1e7 draws, above the tolerance, so the
    # oracle stratifies w1; the plain estimate is reported alongside
    mc, se = monte_carlo_ate(DgpSpec("heterogeneous"), 10_000_000, 4, stratified=True)
    plain, plain_se = monte_carlo_ate(DgpSpec("heterogeneous"), 10_000_000, 4)
    ok = const == -0.8 and abs(het - (8 - 20 / (3 * math.pi))) <= 1e-12 and abs(mc - het) <= 0.01
    record("4", ok, f"constant={const}, heterogeneous={het:.6f}, stratified 1e7-draw MC="
                    f"{mc:.6f} (se {se:.1e}, |diff|={abs(mc - het):.1e} <= 0.01); "
                    f"plain MC={plain:.4f} (se {plain_se:.3f})")


def test_c05_super_learner_selection():
    rng = np.random.default_rng(5)
    x = rng.uniform(size=(80, 1))
    y_line = 2 * x[:, 0] + 1 + rng.normal(0, 0.01, size=80)
    pair = SuperLearnerConfig((LearnerSpec.intercept_only(), LearnerSpec.ols()))
    picks_ols = fit_discrete_super_learner(pair, x, y_line)[1].winner_spec.kind == "ols"
    twin = SuperLearnerConfig((LearnerSpec.intercept_only(), LearnerSpec.intercept_only(),
                               LearnerSpec.ols()))
    y_noise = rng.normal(size=80)
    _, tw = fit_discrete_super_learner(twin, rng.normal(size=(80, 1)) * 0 + 1, y_noise)
    tie_first = tw.cv_mse[0] == tw.cv_mse[1] and tw.winner == 0
    minimal = True
    for s in range(10):
        X = rng.normal(size=(150, 3))
        y = np.sin(2 * X[:, 0]) * 3 + rng.normal(size=150)
        _, rep = fit_discrete_super_learner(SuperLearnerConfig.from_profile("fast", seed=s),
                                            X, y)
        minimal &= bool(np.all(rep.cv_mse[rep.winner] <= rep.cv_mse))
    record("5", picks_ols and tie_first and minimal,
           f"ols on line={picks_ols}, tie->first={tie_first}, winner minimal CV-MSE={minimal}")


def test_c06_isolation_by_label_poisoning():
    rng = np.random.default_rng(6)
    dgp = DgpSpec()
    trial, _ = sample_trial(dgp, 100, 6)
    sl = SuperLearnerConfig.from_profile("fast", seed=3)
    # super-learner CV folds
    X, y = trial.w, trial.y
    folds = make_folds(trial.n, 10, 3).fold_of
    base_cv = cross_validated_predictions(sl.library, X, y, folds, 10)
    cv_ok = True
    for v in range(10):
        yp = y.copy()
        yp[folds == v] += 1e3 * rng.normal(size=(folds == v).sum())
        again = cross_validated_predictions(sl.library, X, yp, folds, 10)
        cv_ok &= np.array_equal(again[:, folds == v], base_cv[:, folds == v])
    # cross-fit folds
    cf = crossfit_outcome_regressions(trial, sl, 5)
    cf_ok = True
    for v in range(5):
        m = cf.folds.fold_of == v
        yp = trial.y.copy()
        yp[m] += 1e3 * rng.normal(size=m.sum())
        again = crossfit_outcome_regressions(trial.with_outcome(yp), sl, 5)
        cf_ok &= np.array_equal(again.mu0[m], cf.mu0[m]) and np.array_equal(again.mu1[m],
                                                                             cf.mu1[m])
    # history / trial separation
    hist = sample_historical(dgp, "none", 300, 7)
    r0 = score_trial(fit_prognostic_model(hist, sl), trial)
    poisoned = trial.with_outcome(trial.y * -50 + 1e4)
    r1 = score_trial(fit_prognostic_model(hist, sl), poisoned)
    sep_ok = np.array_equal(r0, r1)
    hp = HistoricalDataset(hist.y + 1.0, hist.w, hist.covariate_names)
    moved = not np.array_equal(score_trial(fit_prognostic_model(hp, sl), trial), r0)
    record("6", cv_ok and cf_ok and sep_ok and moved,
           f"SL CV isolation={cv_ok}, cross-fit isolation={cf_ok}, "
           f"history/trial separation={sep_ok} (score responds to history: {moved})")


def test_c07_determinism_across_workers(tmp_path):
    (cfg,) = preset("het_base")
    cfg = dataclasses.replace(cfg, scenario_id="det", reps=4, n=80, n_hist=200,
                              estimators=("unadjusted", "ancova_prog", "tmle", "tmle_prog",
                                          "tmle_oracle", "aipw_prog"))
    blobs = []
    for workers in (1, 2, 3):
        path = tmp_path / f"raw_{workers}.csv"
        write_raw_csv(run_scenario(cfg, workers=workers).rows, path)
        blobs.append(path.read_bytes())
    ok = len(set(blobs)) == 1
    digest = hashlib.sha256(blobs[0]).hexdigest()[:12]
    record("7", ok, f"raw CSV identical for workers 1/2/3: {ok} (sha256 {digest})")


# --- Monte Carlo ------------------------------------------------------------

@pytest.mark.slow
def test_c08_heterogeneous_baseline(scenario_metrics):
    m = scenario_metrics(base("het_base"))
    cov = {e: m[e].coverage for e in m.estimators()}
    a = all(COVERAGE_BAND[0] <= c <= COVERAGE_BAND[1] for c in cov.values())
    ratio = m["tmle_prog"].var / m["tmle"].var
    b = ratio <= 0.95
    c = all(bias_ok(m[e]) for e in m.estimators())
    d = m["tmle_oracle"].var <= 1.10 * m["tmle_prog"].var
    cov_txt = ", ".join(f"{e}={v:.3f}" for e, v in cov.items())
    bias_txt = ", ".join(f"{e}={m[e].bias:+.3f}/{3 * math.sqrt(m[e].var / REPS):.3f}"
                         for e in m.estimators())
    print(f"  coverage: {cov_txt}\n  bias/bound: {bias_txt}")
    record("8", a and b and c and d,
           f"(a) coverage in band={a} [{min(cov.values()):.3f}, {max(cov.values()):.3f}]; "
           f"(b) Var ratio tmle_prog/tmle={ratio:.3f} <= 0.95; (c) bias bound={c}; "
           f"(d) Var oracle/prog={m['tmle_oracle'].var / m['tmle_prog'].var:.3f} <= 1.10")


@pytest.mark.slow
def test_c09_constant_effect(scenario_metrics):
    m = scenario_metrics(base("const_base"))
    ratio = m["tmle_prog"].var / m["tmle"].var
    lin = m["ancova_prog"].var / m["tmle_prog"].var
    ok = ratio <= 0.85 and 1 / 1.3 <= lin <= 1.3
    record("9", ok, f"Var ratio tmle_prog/tmle={ratio:.3f} <= 0.85; "
                    f"Var ancova_prog/tmle_prog={lin:.3f} within [0.769, 1.3]")


@pytest.mark.slow
def test_c10_small_trial_benefit(scenario_metrics):
    small = scenario_metrics(base("small_trial"))
    big = scenario_metrics(base("het_base"))
    r100 = small["tmle_prog"].var / small["tmle"].var
    r250 = big["tmle_prog"].var / big["tmle"].var
    record("10", r100 < r250, f"Var ratio n=100: {r100:.3f} < n=250: {r250:.3f}")


@pytest.mark.slow
def test_c11_se_of_se(scenario_metrics):
    m = scenario_metrics(base("het_base"))
    a, b = m["tmle_prog"].se_var, m["tmle"].se_var
    record("11", a <= 0.5 * b, f"se_var tmle_prog={a:.4f} <= 0.5 * tmle={b:.4f}")


@pytest.mark.slow
@pytest.mark.parametrize("name", ["obs_large", "unobs_large"])
def test_c12_shift_robustness(scenario_metrics, name):
    m = scenario_metrics(base(name))
    p, t = m["tmle_prog"], m["tmle"]
    cov = COVERAGE_BAND[0] <= p.coverage <= COVERAGE_BAND[1]
    bias = bias_ok(p)
    sev = p.se_var <= 1.2 * t.se_var
    record(f"12{'a' if name == 'obs_large' else 'b'}", cov and bias and sev,
           f"{name}: coverage={p.coverage:.3f}, bias={p.bias:+.3f} "
           f"(bound {3 * math.sqrt(p.var / REPS):.3f}), se_var={p.se_var:.4f} "
           f"<= 1.2 * {t.se_var:.4f}")


@pytest.mark.slow
@pytest.mark.optional
@pytest.mark.skipif(not RUN_OPTIONAL, reason="long-running; set PROGADJUST_RUN_OPTIONAL=1")
def test_c13_fig2_flattening(scenario_metrics):
    scaled = {}
    for cfg in preset("fig2"):
        m = scenario_metrics(dataclasses.replace(cfg, reps=REPS, sl_profile="fast"))
        scaled[cfg.n] = (cfg.n * m["tmle_prog"].se_var, cfg.n * m["tmle"].se_var)
    prog = [v[0] for v in scaled.values()]
    spread = max(prog) / min(prog)
    below = all(p < t for p, t in scaled.values())
    txt = ", ".join(f"n={n}: {p:.3f} vs {t:.3f}" for n, (p, t) in scaled.items())
    record("13", spread < 3 and below,
           f"n*se_var tmle_prog vs tmle: {txt}; spread {spread:.2f} < 3")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s", *sys.argv[1:]]))
