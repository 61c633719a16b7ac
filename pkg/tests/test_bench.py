import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sigadmm.bench import (
    BinarizeRule,
    OutsideDomainWarning,
    TabularParseError,
    TargetFunction,
    eval_grid,
    eval_target,
    load_tabular,
    make_dataset,
    metrics,
    save_tabular,
    wendland,
    zscore,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.mark.parametrize(
    "kind, x, y",
    [
        ("square", [0.5], 0.25),
        ("square", [-1.0], 1.0),
        ("product", [0.5, -0.4], -0.2),
        ("l1_radial", [0.75, 0.75], 0.5),
        ("l1_radial", [1.125, 1.0], 1.125),
        ("l2_radial_wendland", [0.0, 0.0], 1.0),
        ("l2_radial_wendland", [0.3, 0.4], 0.171875),
        ("l2_radial_wendland", [0.6, 0.8], 0.0),
    ],
)
def test_spot_values(kind, x, y):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert eval_target(kind, x) == pytest.approx(y, abs=1e-15)


def test_wendland_support_and_smoothness():
    assert wendland(1.0) == 0.0 and wendland(1.7) == 0.0
    # first derivative vanishes at the edge of the support
    h = 1e-6
    assert abs(wendland(1 - h) - wendland(1 - 2 * h)) <= 1e-20


def test_outside_domain_warns_and_wrong_dim_raises():
    with pytest.warns(OutsideDomainWarning):
        assert eval_target("square", [2.0]) == 4.0
    with pytest.warns(OutsideDomainWarning):
        eval_target("l1_radial", [0.0, 0.0])
    with pytest.raises(ValueError):
        eval_target("product", [0.1])
    with pytest.raises(ValueError):
        TargetFunction("cube")


def test_column_evaluation():
    X = np.array([[0.1, -0.5, 0.9], [0.2, 0.5, -1.0]])
    np.testing.assert_allclose(eval_target("product", X), [0.02, -0.25, -0.9])


def test_dataset_shapes_and_grid():
    ds = make_dataset("product", 100, 400, noise_std=0.1, seed=0)
    assert ds.X_train.shape == (2, 100) and ds.Y_train.shape == (1, 100)
    assert ds.X_test.shape == (2, 400)
    np.testing.assert_allclose(ds.Y_test, eval_target("product", ds.X_test)[None])
    assert np.all(TargetFunction("product").contains(ds.X_train))
    g = eval_grid(TargetFunction("l1_radial"), 25)
    assert g.shape == (2, 25) and g.min() == 0.75 and g.max() == 1.125


def test_label_noise_std():
    ds = make_dataset("square", 100_000, 10, noise_std=0.1, seed=3)
    r = ds.Y_train - eval_target("square", ds.X_train)
    assert abs(r.std() - 0.1) <= 0.001
    assert abs(r.mean()) <= 5 * 0.1 / np.sqrt(1e5)


def test_dataset_seed_determinism():
    a = make_dataset("square", 30, 5, 0.1, seed=4)
    b = make_dataset("square", 30, 5, 0.1, seed=4)
    np.testing.assert_array_equal(a.Y_train, b.Y_train)
    assert not np.array_equal(a.Y_train, make_dataset("square", 30, 5, 0.1, seed=5).Y_train)


def test_zscore_example():
    Z, rec = zscore(np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_allclose(Z, [[-np.sqrt(1.5), 0.0, np.sqrt(1.5)]], rtol=1e-14)


def test_zscore_constant_feature_centered_with_warning():
    with pytest.warns(UserWarning):
        Z, rec = zscore(np.array([[5.0, 5.0, 5.0], [0.0, 1.0, 2.0]]))
    np.testing.assert_array_equal(Z[0], 0.0)
    assert rec.constant.tolist() == [True, False]


@settings(max_examples=30)
@given(arrays(float, (3, 12), elements=st.floats(-1e3, 1e3)))
def test_zscore_moments(X):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        Z, rec = zscore(X)
    for k in range(3):
        if rec.constant[k]:
            continue
        if X[k].std() < 1e-6 * max(1.0, np.abs(X[k]).max()):
            continue  # cancellation dominates near-constant rows
        assert abs(Z[k].mean()) <= 1e-9
        assert Z[k].std() == pytest.approx(1.0, rel=1e-9)


def test_metrics_examples():
    assert metrics([[0.0, 1.0]], [[0.0, 3.0]])["mse"] == 2.0
    m = metrics([[0.7, 0.2, 0.5, 0.49]], [[1.0, 0.0, 0.0, 1.0]], "binary")
    assert m["accuracy"] == 0.5
    with pytest.raises(ValueError):
        metrics([[1.0]], [[1.0, 2.0]])


def test_binarize_rule():
    r = BinarizeRule.parse("1-4")
    assert (r(1), r(4), r(5), r(12)) == (1.0, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        r(13)
    assert BinarizeRule.parse("0-0/0-1") == BinarizeRule((0, 0), (0, 1))


class TestTabular:
    def test_missing_labels_dropped(self):
        ds = load_tabular(FIXTURES / "small_missing.csv", "grade", "1-4")
        assert ds.meta["rows_read"] == 20 and ds.meta["rows_dropped"] == 2
        assert ds.n_train == 18 and ds.X_train.shape == (3, 18)
        assert set(np.unique(ds.Y_train)) <= {0.0, 1.0}
        assert ds.task == "binary"
        np.testing.assert_allclose(ds.X_train.mean(axis=1), 0.0, atol=1e-12)

    def test_split_uses_training_statistics(self):
        ds = load_tabular(FIXTURES / "separable.csv", "grade", "1-4", test_fraction=0.25, seed=0)
        assert ds.n_test == round(0.25 * ds.meta["rows_kept"])
        np.testing.assert_allclose(ds.X_train.std(axis=1), 1.0, rtol=1e-12)
        assert not np.allclose(ds.X_test.std(axis=1), 1.0, rtol=1e-12)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        X, Y = rng.normal(size=(3, 7)), rng.normal(size=(1, 7))
        save_tabular(tmp_path / "d.csv", X, Y)
        ds = load_tabular(tmp_path / "d.csv", "label", None, standardize=False)
        np.testing.assert_array_equal(ds.X_train, X)
        np.testing.assert_array_equal(ds.Y_train, Y)
        assert ds.task == "regression"

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("", "empty file"),
            ("a,b\n1,2\n", "no column"),
            ("a,y\n1,2\n3\n", ":3:"),
            ("a,y\n1,2\nfoo,3\n", ":3:"),
            ("a,y\n1,13\n", "outside"),
            ("a,y\n1,?\n", "no labelled rows"),
        ],
    )
    def test_parse_errors_carry_location(self, tmp_path, text, fragment):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        with pytest.raises(TabularParseError, match=fragment) as exc:
            load_tabular(p, "y", "1-4")
        assert str(p) in str(exc.value)


def test_bias_row_appended_after_labels():
    plain = make_dataset("l1_radial", 50, 16, noise_std=0.1, seed=2)
    ds = make_dataset("l1_radial", 50, 16, noise_std=0.1, seed=2, bias_row=True)
    assert ds.X_train.shape == (3, 50) and ds.X_test.shape == (3, 16)
    np.testing.assert_array_equal(ds.X_train[:2], plain.X_train)
    np.testing.assert_array_equal(ds.X_train[2], 1.0)
    np.testing.assert_array_equal(ds.Y_train, plain.Y_train)
    np.testing.assert_array_equal(ds.Y_test, plain.Y_test)
    assert ds.meta["bias_row"] == 1
