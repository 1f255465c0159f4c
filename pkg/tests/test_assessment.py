import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procscore.activity import Event, build_curve
from procscore.assessment import (
    AssessmentReport,
    GroundTruth,
    ProjectFeatures,
    RegressorModel,
    RegressorSpec,
    assess,
    brier_score,
    build_features,
    fit_regressor,
    loocv,
    permutation_importance,
    predict,
    read_feature_matrix,
    read_ground_truth,
    report_from_scores,
    rmse,
    smote_regression,
    weighted_scores,
    write_feature_matrix,
)
from procscore.deviations import Segment, default_feature_defs
from procscore.errors import (
    InputError,
    InvalidConfig,
    LengthMismatch,
    MissingActivity,
    MissingTransform,
    SingularSystem,
    TooFewInstances,
)
from procscore.scoring import CalibrationConfig, calibrate_features
from procscore.synthetic import example_process_model, linear_projects

TABLE_SCORES = (0.28010, 0.02479, 0.41277)
TABLE_IMPORTANCES = (0.3009, 0.5625, 0.1366)
TABLE_NAMES = ("corr", "jsd", "area")

QUARTERS = [Segment(0.0, 0.25), Segment(0.25, 0.5), Segment(0.5, 0.75), Segment(0.75, 1.0)]


def _curves():
    rng = np.random.default_rng(0)
    return {a: build_curve([Event(t) for t in rng.beta(b1, b2, 30)]) for a, b1, b2 in
            (("req", 2, 5), ("dev", 4, 2), ("desc", 1, 1))}


# --- features -------------------------------------------------------------------

def test_build_features_combinatorics_and_partition():
    feats = build_features(_curves(), QUARTERS, ["req", "dev", "desc"])
    assert len(feats.names) == 24
    assert feats.names[0] == "mass:req:0-0.25"
    assert feats.names[12] == "div:req-dev:0-0.25"
    masses = feats.values[:12].reshape(3, 4)
    np.testing.assert_allclose(masses.sum(axis=1), 1.0, atol=1e-6)


def test_build_features_identical_curves_zero_divergence():
    c = _curves()["req"]
    feats = build_features({"a": c, "b": c, "c": c}, QUARTERS, ["a", "b", "c"])
    assert np.all(feats.values[12:] == 0.0)


def test_build_features_extras_and_errors():
    pm = example_process_model()
    feats = build_features(_curves(), QUARTERS[:1], ["req", "dev"], default_feature_defs(), pm)
    assert feats.names[-3:] == tuple(fd.name for fd in default_feature_defs())
    with pytest.raises(MissingActivity):
        build_features(_curves(), QUARTERS, ["req", "nope"])
    with pytest.raises(InputError):
        ProjectFeatures("p", ("a", "a"), [1, 2])


def test_feature_matrix_and_truth_io(tmp_path):
    projects = [ProjectFeatures(f"p{i}", ("x1", "x2"), [i, 2.5 * i]) for i in range(3)]
    write_feature_matrix(projects, tmp_path / "m.csv", comment="seed=0")
    back = read_feature_matrix(tmp_path / "m.csv")
    assert [p.project_id for p in back] == ["p0", "p1", "p2"]
    assert back[2].values.tolist() == [2.0, 5.0]
    (tmp_path / "gt.csv").write_text("project_id,severity\np0,1\np1,10\n")
    truths = read_ground_truth(tmp_path / "gt.csv")
    assert truths[0].scaled == pytest.approx(0.1)
    with pytest.raises(InputError):
        GroundTruth("x", 11)


# --- SMOTE --------------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 12), st.integers(1, 3))
def test_smote_convexity(seed, n, k):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    y = rng.normal(size=n)
    xa, ya = smote_regression(x, y, k=min(k, n - 1), n_new=20, seed=seed)
    assert xa.shape == (n + 20, 3) and np.array_equal(xa[:n], x)
    # every synthetic point sits on a segment between two originals, target included
    for xs, ys in zip(xa[n:], ya[n:]):
        found = False
        for i in range(n):
            for j in range(n):
                d = x[j] - x[i]
                if i == j or not np.any(d):
                    continue
                u = np.dot(xs - x[i], d) / np.dot(d, d)
                if -1e-9 <= u <= 1 + 1e-9 and np.allclose(x[i] + u * d, xs, atol=1e-9):
                    found = found or abs(y[i] + u * (y[j] - y[i]) - ys) < 1e-9
        assert found


def test_smote_identical_parents_and_determinism():
    x = np.array([[1.0, 2.0], [1.0, 2.0], [5.0, 5.0]])
    y = np.array([3.0, 3.0, 9.0])
    xa, ya = smote_regression(x, y, k=1, n_new=10, seed=4)
    # the nearest neighbour of each duplicate is its twin
    for xs, ys in zip(xa[3:], ya[3:]):
        if np.allclose(xs, [1.0, 2.0]):
            assert ys == 3.0
    xb, yb = smote_regression(x, y, k=1, n_new=10, seed=4)
    assert np.array_equal(xa, xb) and np.array_equal(ya, yb)
    with pytest.raises(TooFewInstances):
        smote_regression(x, y, k=3)


# --- regressors -----------------------------------------------------------------------

def test_ridge_exact_linear_fit():
    x = np.random.default_rng(1).normal(size=(12, 3))
    y = 5 + x @ np.array([1.0, -0.5, 0.25])
    model = fit_regressor(RegressorSpec("ridge", lam=0.0), x, y)
    assert rmse(predict(model, x), y) < 1e-8
    with pytest.raises(SingularSystem):
        fit_regressor(RegressorSpec("ridge", lam=0.0), np.column_stack([x[:, 0], 2 * x[:, 0]]), y)


def test_zero_rule_and_knn():
    x = np.array([[0.0], [1.0], [2.0]])
    zr = fit_regressor(RegressorSpec("zero_rule"), x, [2, 4, 6])
    assert predict(zr, np.array([[100.0], [-3.0]])).tolist() == [4.0, 4.0]
    knn = fit_regressor(RegressorSpec.parse("knn(1)"), x, [2, 4, 6])
    assert predict(knn, x).tolist() == [2.0, 4.0, 6.0]


def test_predictions_clamped():
    x = np.arange(5.0)[:, None]
    model = fit_regressor(RegressorSpec("ridge", lam=0.0), x, 3 * x[:, 0])
    assert predict(model, np.array([[100.0], [-100.0]])).tolist() == [10.0, 0.0]


def test_spec_parsing_and_model_roundtrip():
    assert RegressorSpec.parse("ridge(0.5)").lam == 0.5
    assert RegressorSpec.parse("knn(7)").k == 7
    with pytest.raises(InvalidConfig):
        RegressorSpec.parse("forest")
    with pytest.raises(InvalidConfig):
        RegressorSpec("knn", k=0)
    x, y = linear_projects(15, 0.5, seed=2)
    for spec in ("ridge(0.1)", "knn(3)", "zero_rule"):
        model = fit_regressor(RegressorSpec.parse(spec), x, y)
        again = RegressorModel.from_dict(model.to_dict())
        assert np.array_equal(predict(again, x), predict(model, x))


# --- LOOCV and importance ---------------------------------------------------------------

def test_loocv_zero_rule_alternating_targets():
    result = loocv(np.zeros((4, 1)), [0.0, 10.0, 0.0, 10.0], RegressorSpec("zero_rule"))
    # holding out either value leaves a mean 20/3 away from it
    assert result.mean_rmse == pytest.approx(20 / 3, rel=1e-12)


def test_loocv_zero_rule_two_instance_case_by_hand():
    # with {0, 10} each fold trains on the other instance alone
    y = np.array([0.0, 10.0])
    preds = [y[1], y[0]]
    assert rmse(preds, y) == 10.0
    assert np.sqrt(2 / 1) * np.std(y, ddof=1) == pytest.approx(10.0)
    with pytest.raises(TooFewInstances):
        loocv(np.zeros((2, 1)), y, RegressorSpec("zero_rule"))


@pytest.mark.parametrize("seed", range(5))
def test_loocv_zero_rule_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 21))
    y = rng.uniform(0, 10, n)
    brute = np.sqrt(np.mean([(y[i] - np.delete(y, i).mean()) ** 2 for i in range(n)]))
    result = loocv(np.zeros((n, 1)), y, RegressorSpec("zero_rule"), repeats=3)
    assert result.mean_rmse == pytest.approx(brute, rel=1e-12)
    # closed form: LOO residuals are n/(n-1) times the residuals about the full mean
    assert brute == pytest.approx(np.sqrt(n / (n - 1)) * np.std(y, ddof=1), rel=1e-12)
    assert result.sd == 0.0
    lo, hi = result.bands[3]
    assert lo == hi == result.mean_rmse


def test_loocv_smote_repeats_vary_but_are_seeded():
    x, y = linear_projects(10, 0.5, seed=3)
    spec = RegressorSpec("ridge", lam=0.01, smote_new=10)
    a = loocv(x, y, spec, repeats=4, seed=9)
    b = loocv(x, y, spec, repeats=4, seed=9)
    assert a == b and a.sd > 0


def test_permutation_importance():
    rng = np.random.default_rng(5)
    n = 60
    x = np.column_stack([rng.normal(size=n), rng.normal(size=n), np.full(n, 3.0)])
    y = 5 + 3 * x[:, 0] * 0.5 + rng.normal(0, 0.3, n)
    model = fit_regressor(RegressorSpec("ridge", lam=0.01), x, y)
    imp = permutation_importance(model, x, y, repeats=20, seed=1)
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.argmax(imp) == 0
    assert imp[2] < 0.02
    zr = fit_regressor(RegressorSpec("zero_rule"), x, y)
    assert permutation_importance(zr, x, y, repeats=3).tolist() == pytest.approx([1 / 3] * 3)


def test_noise_importance_shrinks_with_repeats():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(40, 2))
    y = 5 + 2 * x[:, 0] + rng.normal(0, 0.1, 40)
    model = fit_regressor(RegressorSpec("ridge", lam=0.01), x, y)
    few = permutation_importance(model, x, y, repeats=2, seed=0)[1]
    many = permutation_importance(model, x, y, repeats=200, seed=0)[1]
    assert many <= 0.01 and many <= few + 1e-3


# --- scoring arithmetic and reports ----------------------------------------------------

def test_weighted_scores_table_values():
    weighted, dot, avg = weighted_scores(TABLE_SCORES, TABLE_IMPORTANCES)
    np.testing.assert_allclose(weighted, [0.08428, 0.01395, 0.05638], atol=5e-5)
    assert dot == pytest.approx(0.155, abs=1e-3)
    assert avg == pytest.approx(0.239, abs=1e-3)


def test_weighted_scores_special_cases():
    s = [0.1, 0.5, 0.9]
    _, dot, avg = weighted_scores(s, [1 / 3] * 3)
    assert dot == pytest.approx(avg)
    assert weighted_scores(s, [0, 1, 0])[1] == 0.5
    with pytest.raises(LengthMismatch):
        weighted_scores(s, [0.5, 0.5])
    with pytest.raises(InputError):
        weighted_scores(s, [0.5, 0.5, 0.5])


def test_brier():
    assert brier_score([0, 1, 1], [0, 1, 1]) == 0.0
    assert brier_score([1, 1], [0, 0]) == 1.0
    assert brier_score([0, 1, 1, 0, 1], [0.5] * 5) == 0.25
    with pytest.raises(LengthMismatch):
        brier_score([0, 1], [0.5])


def test_report_orderings_and_roundtrip():
    rep = report_from_scores(TABLE_NAMES, [0.6, 4.1, 0.07], TABLE_SCORES, TABLE_IMPORTANCES, severity=1.234)
    assert rep.order_by_score == ("area", "corr", "jsd")
    assert rep.order_by_weighted == ("corr", "area", "jsd")
    assert AssessmentReport.from_json(rep.to_json()) == rep
    table = rep.table()
    assert table.splitlines()[0].split() == ["feature", "raw", "z", "score", "weighted_score", "importance"]
    assert "predicted severity: 1.23 / 10" in table


def test_report_ties_keep_declaration_order():
    rep = report_from_scores(["b", "a", "c"], [1, 2, 3], [0.4] * 3, [1 / 3] * 3)
    assert rep.order_by_score == ("b", "a", "c") == rep.order_by_weighted


def test_assess_end_to_end():
    pm = example_process_model()
    defs = default_feature_defs()
    transforms = calibrate_features(CalibrationConfig(n_processes=40, seed=2), pm, defs)
    rng = np.random.default_rng(3)
    projects = [{"req": build_curve([Event(t) for t in rng.random(20)])} for _ in range(6)]
    from procscore.deviations import compute_all
    x = np.array([[dv.value for dv in compute_all(pm, p, defs)] for p in projects])
    y = rng.uniform(0, 10, 6)
    model = fit_regressor(RegressorSpec("ridge", lam=1.0), x, y)
    rep = assess(projects[0], pm, model, transforms, [0.3, 0.5, 0.2], defs, project_id="p0")
    assert 0 <= rep.severity <= 10
    assert [f.feature for f in rep.features] == [fd.name for fd in defs]
    assert all(0 < f.score < 1 for f in rep.features)
    with pytest.raises(MissingTransform):
        assess(projects[0], pm, model, {}, [0.3, 0.5, 0.2], defs)
