import numpy as np
import pytest

from progadjust.dataset import HistoricalDataset, TrialDataset
from progadjust.errors import (
    CovariateNameMismatch,
    DataError,
    DuplicateName,
    LengthMismatch,
    ModelCovariateMismatch,
)
from progadjust.learners import LearnerSpec, SuperLearnerConfig
from progadjust.prognostic import (
    augment,
    fit_prognostic_model,
    load_model,
    save_model,
    score,
    score_only,
    score_trial,
)
from progadjust.simulation import DgpSpec, oracle_prognostic_score, sample_historical, sample_trial

LINEAR = SuperLearnerConfig((LearnerSpec.intercept_only(), LearnerSpec.ols()))


def test_exact_linear_recovery(rng):
    w = rng.normal(size=(50, 1))
    model = fit_prognostic_model(HistoricalDataset(3 * w[:, 0], w, ("w1",)), LINEAR)
    Wt = rng.normal(size=(10, 1))
    np.testing.assert_allclose(score(model, Wt, ["w1"]), 3 * Wt[:, 0], atol=1e-10)
    assert model.source == "fitted_from_history"


def test_fitted_score_tracks_control_outcome():
    dgp = DgpSpec()
    hist = sample_historical(dgp, "none", 1000, 1)
    model = fit_prognostic_model(hist, SuperLearnerConfig.from_profile("fast", seed=2))
    trial, latent = sample_trial(dgp, 500, 3)
    r = score_trial(model, trial)
    assert np.corrcoef(r, latent.y0)[0, 1] > 0.5


def test_oracle_values():
    oracle = oracle_prognostic_score(DgpSpec())
    W = np.zeros((3, 20))
    W[:, 0] = [0.5, 0.0, -0.5]
    np.testing.assert_allclose(score(oracle, W, oracle.covariate_names), [10, 0, 10],
                               atol=1e-12)
    W[0, 0] = 1.0
    assert abs(score(oracle, W[:1], oracle.covariate_names)[0]) <= 1e-12


def test_score_name_check(rng):
    w = rng.normal(size=(20, 2))
    model = fit_prognostic_model(HistoricalDataset(w[:, 0], w, ("a", "b")), LINEAR)
    with pytest.raises(CovariateNameMismatch):
        score(model, w, ["b", "a"])


def test_score_trial_selects_columns_by_name(rng):
    w = rng.normal(size=(30, 1))
    model = fit_prognostic_model(HistoricalDataset(2 * w[:, 0], w, ("w2",)), LINEAR)
    trial = TrialDataset(rng.normal(size=6), [0, 1] * 3, rng.normal(size=(6, 2)), ("w1", "w2"))
    np.testing.assert_allclose(score_trial(model, trial), 2 * trial.w[:, 1], atol=1e-10)


def test_model_needs_missing_covariate(rng):
    w = rng.normal(size=(30, 2))
    model = fit_prognostic_model(HistoricalDataset(w.sum(1), w, ("w1", "w2")), LINEAR)
    trial = TrialDataset(rng.normal(size=4), [0, 1, 0, 1], rng.normal(size=(4, 1)), ("w1",))
    with pytest.raises(ModelCovariateMismatch):
        score_trial(model, trial)


def test_augment(small_trial, rng):
    r = rng.normal(size=small_trial.n)
    aug = augment(small_trial, r)
    assert aug.p == small_trial.p + 1 and aug.covariate_names[-1] == "prog_score"
    np.testing.assert_array_equal(aug.w[:, -1], r)
    np.testing.assert_array_equal(aug.w[:, :-1], small_trial.w)
    assert small_trial.p == 3
    twice = augment(aug, np.ones(small_trial.n), "const")
    assert twice.p == small_trial.p + 2
    with pytest.raises(LengthMismatch):
        augment(small_trial, r[:-1])
    with pytest.raises(DuplicateName):
        augment(aug, r)
    only = score_only(small_trial, r)
    assert only.covariate_names == ("prog_score",)


def test_history_trial_separation(rng):
    dgp = DgpSpec()
    hist = sample_historical(dgp, "none", 300, 5)
    cfg = SuperLearnerConfig.from_profile("fast", seed=1)
    model = fit_prognostic_model(hist, cfg)
    trial, _ = sample_trial(dgp, 80, 6)
    before = score_trial(model, trial)
    poisoned = trial.with_outcome(trial.y + 1e6)
    refit = fit_prognostic_model(hist, cfg)
    np.testing.assert_array_equal(score_trial(refit, poisoned), before)


def test_oracle_ignores_history():
    dgp = DgpSpec()
    trial, _ = sample_trial(dgp, 50, 1)
    a = score_trial(oracle_prognostic_score(dgp), trial)
    b = score_trial(oracle_prognostic_score(DgpSpec("heterogeneous")), trial)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(a, 10 * np.sin(np.abs(trial.w[:, 0]) * np.pi))


@pytest.mark.parametrize("library", [
    (LearnerSpec.ols(),), (LearnerSpec.gbt(n_trees=30),), (LearnerSpec.knn(3),),
    (LearnerSpec.intercept_only(),)])
def test_export_import_round_trip(tmp_path, rng, library):
    w = rng.normal(size=(40, 2))
    hist = HistoricalDataset(w[:, 0] ** 2 + rng.normal(size=40), w, ("w1", "w2"))
    model = fit_prognostic_model(hist, SuperLearnerConfig(library, v_folds=4))
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    Wt = rng.normal(size=(15, 2))
    assert back.covariate_names == ("w1", "w2")
    np.testing.assert_array_equal(score(back, Wt, ["w1", "w2"]), score(model, Wt, ["w1", "w2"]))


def test_oracle_export(tmp_path):
    oracle = oracle_prognostic_score(DgpSpec())
    save_model(oracle, tmp_path / "o.json")
    back = load_model(tmp_path / "o.json")
    W = np.full((1, 20), 0.5)
    assert back.source == "oracle"
    np.testing.assert_allclose(score(back, W, back.covariate_names), [10.0])


def test_bad_blob(tmp_path):
    (tmp_path / "x.json").write_text('{"format": "other"}')
    with pytest.raises(DataError):
        load_model(tmp_path / "x.json")
    with pytest.raises(DataError):
        load_model(tmp_path / "missing.json")
