import numpy as np
import pytest

from ccn.dependency import (
    ExperimentConfig,
    conditional_dependency,
    dependency_report,
    label_density,
    label_dependency,
    measure_validation_experiment,
    spearman,
    unconditional_dependency,
)
from ccn.errors import ValidationError
from ccn.model import Dataset, ModelParams
from ccn.numkit import spawn_rng
from ccn.simgen import SimDesign, builtin_design, generate
from ccn.tuning import GridSpec
from oracles import brute_force_label_dependency


def independent_design():
    # labels depend on x only: conditionally independent by construction
    params = ModelParams(
        np.array([0.5, -0.5, 0.0]),
        np.array([[1.5, 0.0, 0.0], [-1.0, 0.5, 0.0], [0.0, 1.0, -0.5]]),
        np.zeros((3, 3)),
    )
    return SimDesign("independent", params, builtin_design("strong").sigma)


class TestLabelDensity:
    def test_all_ones(self):
        assert label_density(np.ones((4, 3))) == 1.0

    def test_all_zeros(self):
        assert label_density(np.zeros((4, 3))) == 0.0

    def test_half(self):
        assert label_density(np.array([[1, 0], [0, 1]])) == 0.5

    def test_negation(self, rng):
        Y = (rng.random((30, 4)) < 0.3).astype(float)
        assert label_density(1 - Y) == pytest.approx(1 - label_density(Y))

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            label_density(np.zeros((0, 3)))


class TestLabelDependency:
    def test_identical_columns(self):
        col = (np.arange(10) < 4).astype(float)
        assert label_dependency(np.column_stack([col, col])) == pytest.approx(1.0)

    def test_zero_cooccurrence_undefined(self):
        a = np.array([1.0, 1.0, 0.0, 0.0])
        b = np.array([0.0, 0.0, 1.0, 1.0])
        assert label_dependency(np.column_stack([a, b])) is None

    def test_constant_pair_skipped(self):
        col = (np.arange(10) < 4).astype(float)
        const = np.ones(10)
        Y = np.column_stack([col, const])
        assert label_dependency(Y) is None

    def test_matches_brute_force(self, rng):
        Y = (rng.random((40, 5)) < 0.4).astype(float)
        assert label_dependency(Y) == pytest.approx(
            brute_force_label_dependency(Y), abs=1e-12)

    def test_needs_two_labels(self):
        with pytest.raises(ValidationError):
            label_dependency(np.ones((5, 1)))


class TestUnconditionalDependency:
    def test_perfect_dependence(self):
        col = (np.arange(200) < 90).astype(float)
        assert unconditional_dependency(np.column_stack([col, col])) == 1.0

    def test_constant_pair_not_flagged(self):
        col = (np.arange(200) < 90).astype(float)
        Y = np.column_stack([col, np.ones(200)])
        assert unconditional_dependency(Y) == 0.0

    def test_null_calibration(self):
        r = np.random.default_rng(7)
        flags = []
        for _ in range(150):
            Y = (r.random((10_000, 2)) < 0.5).astype(float)
            flags.append(unconditional_dependency(Y))
        rate = float(np.mean(flags))
        assert rate <= 0.04

    def test_negation_invariance(self, rng):
        Y = (rng.random((300, 4)) < 0.4).astype(float)
        assert unconditional_dependency(1 - Y) == unconditional_dependency(Y)


class TestConditionalDependency:
    def test_null_design_near_zero(self):
        scores = []
        for s in range(3):
            ds, _ = generate(independent_design(), spawn_rng(31, s), n=500)
            scores.append(conditional_dependency(ds, metric="hamming",
                                                 rng=spawn_rng(32, s)))
        # each draw sits inside CV noise and the average collapses to zero
        assert max(abs(v) for v in scores) <= 0.02
        assert abs(float(np.mean(scores))) <= 0.01

    def test_probabilistic_realization_is_conditionally_independent(self):
        # probabilistic draws make labels independent given the features,
        # so even the strong design carries no Hamming-usable dependence;
        # the measure must stay at noise level (population-level oracle: the
        # with-labels logistic family gains nothing on thresholded error)
        scores = []
        for s in range(3):
            ds, _ = generate(builtin_design("strong"), spawn_rng(33, s), n=500)
            scores.append(conditional_dependency(ds, metric="hamming",
                                                 rng=spawn_rng(34, s)))
        assert abs(float(np.mean(scores))) <= 0.015

    def test_sequential_realization_detected(self):
        # sequential draws propagate realized outcomes: genuine conditional
        # dependence the measure must flag decisively
        base = builtin_design("strong")
        seq = SimDesign("strong-seq", base.params, base.sigma,
                        realization="sequential")
        ds, _ = generate(seq, spawn_rng(70), n=500)
        score = conditional_dependency(ds, metric="hamming",
                                       rng=spawn_rng(71))
        assert score > 0.02

    def test_raw_orientation_for_loss_metric(self):
        ds, _ = generate(builtin_design("strong"), spawn_rng(35), n=300)
        oriented, raw = conditional_dependency(ds, metric="hamming",
                                               rng=spawn_rng(36),
                                               return_raw=True)
        assert oriented == pytest.approx(-raw)

    def test_negation_invariance_within_noise(self):
        ds, _ = generate(builtin_design("strong"), spawn_rng(37), n=400)
        flipped = Dataset(ds.X, 1.0 - ds.Y)
        a = conditional_dependency(ds, rng=spawn_rng(38))
        b = conditional_dependency(flipped, rng=spawn_rng(38))
        assert abs(a - b) <= 0.01

    def test_validation(self, rng):
        ds = Dataset(rng.normal(size=(50, 2)),
                     (rng.random((50, 1)) < 0.5).astype(float))
        with pytest.raises(ValidationError):
            conditional_dependency(ds)


class TestReport:
    def test_single_label_reports_na(self, rng):
        ds = Dataset(rng.normal(size=(30, 2)),
                     (rng.random((30, 1)) < 0.5).astype(float))
        report = dependency_report(ds)
        assert report.label_dependency is None
        assert report.conditional_dependency is None
        assert 0.0 <= report.label_density <= 1.0
        doc = report.to_dict()
        assert doc["cv"]["outer_folds"] == 10

    def test_full_report(self):
        ds, _ = generate(builtin_design("strong"), spawn_rng(40), n=150)
        report = dependency_report(ds, seed=3)
        assert report.conditional_dependency is not None
        assert report.unconditional_dependency is not None


class TestSpearman:
    def test_self_correlation(self):
        v = np.array([3.0, 1.0, 4.0, 1.5, 9.0])
        rho, _ = spearman(v, v)
        assert rho == pytest.approx(1.0)

    def test_reverse_correlation(self):
        v = np.array([3.0, 1.0, 4.0, 1.5, 9.0])
        rho, _ = spearman(v, -v)
        assert rho == pytest.approx(-1.0)

    def test_too_short(self):
        assert spearman(np.array([1.0, 2.0]), np.array([2.0, 1.0])) is None


class TestExperiment:
    def test_single_dgp_not_computable(self):
        config = ExperimentConfig(
            train_n=60, validation_n=100,
            grid=GridSpec(q_values=(1.0,), lambda_values=(0.01,),
                          k_folds=2, scoring="hamming"),
            outer_folds=4, inner_folds=2, lambda_grid=(0.01,),
            n_random_starts=0,
        )
        rows, correlations = measure_validation_experiment(
            1, 1, seed=5, config=config)
        assert len(rows) == 1
        assert rows[0]["excess_hamming"] is not None
        assert all(v is None for v in correlations.values())

    def test_budget_validation(self):
        with pytest.raises(ValidationError):
            measure_validation_experiment(0, 1)
