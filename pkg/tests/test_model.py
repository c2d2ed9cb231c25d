import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccn.errors import ValidationError
from ccn.model import (
    Dataset,
    LossSpec,
    ModelParams,
    forward,
    gradient,
    loss,
    n_free_params,
    pack_params,
    per_label_loss,
    predict,
    unpack_params,
)
from conftest import random_params, spec_battery
from oracles import central_differences, literal_loss, sigmoid


def params_to_lists(params):
    L = params.n_labels
    return (params.b.tolist(), params.W.tolist(), params.C.tolist())


class TestForward:
    def test_zero_params_give_half(self, rng):
        params = ModelParams.zeros(3, 2)
        cache = forward(params, rng.normal(size=(5, 2)), "sigmoid")
        assert np.array_equal(cache.p, np.full((5, 3), 0.5))
        assert np.array_equal(cache.theta, np.zeros((5, 3)))

    def test_two_label_chain(self, rng):
        params = ModelParams(np.zeros(2), np.zeros((2, 3)),
                             np.array([[0.0, 0.0], [2.0, 0.0]]))
        cache = forward(params, rng.normal(size=(4, 3)), "sigmoid")
        assert np.allclose(cache.p[:, 0], 0.5)
        assert np.allclose(cache.p[:, 1], 0.7310585786300049)

    def test_strong_design_composition_at_origin(self):
        b = np.array([1.0, 3.0, 0.5])
        W = np.array([[2.0, 0, 0], [1.0, 0, 0], [-0.5, 0, 0]])
        C = np.zeros((3, 3))
        C[1, 0], C[2, 0], C[2, 1] = -6.0, 2.0, -4.0
        cache = forward(ModelParams(b, W, C), np.zeros((1, 3)), "sigmoid")
        p1 = sigmoid(1.0)
        p2 = sigmoid(3.0 - 6.0 * p1)
        p3 = sigmoid(0.5 + 2.0 * p1 - 4.0 * p2)
        assert np.allclose(cache.p[0], [p1, p2, p3], rtol=0, atol=1e-15)

    def test_identity_activation(self, rng):
        params = random_params(rng, 3, 2)
        cache = forward(params, rng.normal(size=(6, 2)), "identity")
        assert np.array_equal(cache.p, cache.theta)

    def test_dependency_locality(self, rng):
        # perturbing C[k, l] must not move any column before k
        params = random_params(rng, 4, 3)
        X = rng.normal(size=(8, 3))
        base = forward(params, X, "sigmoid").p
        bumped = params.copy()
        bumped.C[2, 1] += 0.7
        moved = forward(bumped, X, "sigmoid").p
        assert np.array_equal(base[:, :2], moved[:, :2])
        assert not np.array_equal(base[:, 2], moved[:, 2])

    def test_zero_c_equals_independent_models(self, rng):
        params = random_params(rng, 4, 3)
        params.C[:] = 0.0
        X = rng.normal(size=(10, 3))
        joint = forward(params, X, "sigmoid").p
        for l in range(4):
            single = ModelParams(params.b[l : l + 1], params.W[l : l + 1],
                                 np.zeros((1, 1)))
            alone = forward(single, X, "sigmoid").p[:, 0]
            assert np.array_equal(joint[:, l], alone)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValidationError):
            forward(random_params(rng, 2, 3), rng.normal(size=(4, 2)), "sigmoid")


class TestPerLabelLoss:
    def test_bce_symmetric_point(self):
        assert per_label_loss(LossSpec(kind="bce"), 1, 0.5) == pytest.approx(
            math.log(2.0), abs=1e-15)

    def test_focal_substitution(self):
        spec = LossSpec(kind="focal", xi_plus=2.0, xi_minus=2.0)
        assert per_label_loss(spec, 1, 0.5) == pytest.approx(
            0.25 * math.log(2.0), abs=1e-15)

    def test_asymmetric_uses_each_side(self):
        spec = LossSpec(kind="asymmetric", xi_plus=1.0, xi_minus=3.0)
        assert per_label_loss(spec, 1, 0.25) == pytest.approx(
            0.75 * -math.log(0.25))
        assert per_label_loss(spec, 0, 0.25) == pytest.approx(
            0.25**3 * -math.log(0.75))

    def test_huber_hinge_zero_region(self):
        spec = LossSpec(kind="huber-hinge", kappa=1.0)
        assert per_label_loss(spec, 1, 3.0) == 0.0

    def test_huber_hinge_linear_region(self):
        spec = LossSpec(kind="huber-hinge", kappa=0.5)
        # margin u = -2 <= -kappa: linear branch
        assert per_label_loss(spec, 1, -2.0) == pytest.approx(
            1.0 + 2.0 - 0.75, abs=1e-15)

    def test_huber_hinge_continuity_at_kink(self):
        spec = LossSpec(kind="huber-hinge", kappa=0.7)
        left = per_label_loss(spec, 1, -0.7 - 1e-10)
        right = per_label_loss(spec, 1, -0.7 + 1e-10)
        assert abs(left - right) <= 1e-9

    def test_nonnegative(self, rng):
        for spec, _ in spec_battery():
            for _ in range(50):
                y = int(rng.integers(2))
                p = rng.uniform(-3, 3) if spec.kind == "huber-hinge" \
                    else rng.uniform(0, 1)
                assert per_label_loss(spec, y, p) >= 0.0


class TestLoss:
    def test_zero_params_q1(self, rng):
        params = ModelParams.zeros(3, 2)
        X = rng.normal(size=(7, 2))
        Y = (rng.random((7, 3)) < 0.5).astype(float)
        spec = LossSpec(kind="bce", q=1.0, lam=0.0)
        assert loss(params, X, Y, spec, "sigmoid") == pytest.approx(
            math.log(2.0), abs=1e-14)

    def test_zero_params_q2_constant_losses(self, rng):
        params = ModelParams.zeros(3, 2)
        X = rng.normal(size=(7, 2))
        Y = (rng.random((7, 3)) < 0.5).astype(float)
        spec = LossSpec(kind="bce", q=2.0, lam=0.0)
        assert loss(params, X, Y, spec, "sigmoid") == pytest.approx(
            math.log(2.0), abs=1e-14)

    def test_matches_literal_oracle(self, rng):
        for trial in range(25):
            L = int(rng.integers(1, 5))
            m = int(rng.integers(1, 4))
            n = int(rng.integers(1, 15))
            params = random_params(rng, L, m)
            X = rng.normal(size=(n, m))
            Y = (rng.random((n, L)) < 0.5).astype(float)
            spec, act = spec_battery()[trial % 4]
            q = [1.0, 1.5, 2.0, 3.0, 5.0][trial % 5]
            spec = LossSpec(kind=spec.kind, xi_plus=spec.xi_plus,
                            xi_minus=spec.xi_minus, kappa=spec.kappa,
                            q=q, lam=0.01)
            expected = literal_loss(
                params.b.tolist(), params.W.tolist(), params.C.tolist(),
                X.tolist(), Y.tolist(), spec.kind, q, 0.01,
                spec.xi_plus, spec.xi_minus, spec.kappa, act)
            got = loss(params, X, Y, spec, act)
            assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_q1_is_plain_mean(self, rng):
        L, m, n = 3, 2, 9
        params = random_params(rng, L, m)
        X = rng.normal(size=(n, m))
        Y = (rng.random((n, L)) < 0.5).astype(float)
        spec = LossSpec(kind="bce", q=1.0, lam=0.0)
        p = forward(params, X, "sigmoid").p
        mean_h = np.mean([[per_label_loss(spec, Y[i, l], p[i, l])
                           for l in range(L)] for i in range(n)])
        assert loss(params, X, Y, spec, "sigmoid") == pytest.approx(mean_h)

    def test_lq_aggregate_monotone_and_max_limit(self, rng):
        params = random_params(rng, 4, 2)
        X = rng.normal(size=(1, 2))
        Y = (rng.random((1, 4)) < 0.5).astype(float)
        p = forward(params, X, "sigmoid").p
        hmax = max(per_label_loss(LossSpec(kind="bce"), Y[0, l], p[0, l])
                   for l in range(4))
        aggregates = []
        for q in [1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 16.0, 32.0, 64.0]:
            spec = LossSpec(kind="bce", q=q, lam=0.0)
            value = loss(params, X, Y, spec, "sigmoid") * 4 ** (1.0 / q)
            aggregates.append(value)
        assert np.all(np.diff(aggregates) <= 1e-12)
        assert abs(aggregates[-1] - hmax) <= 0.05 * hmax

    def test_row_permutation_invariance(self, rng):
        params = random_params(rng, 3, 2)
        X = rng.normal(size=(11, 2))
        Y = (rng.random((11, 3)) < 0.5).astype(float)
        spec = LossSpec(kind="bce", q=1.5, lam=0.01)
        perm = rng.permutation(11)
        a = loss(params, X, Y, spec, "sigmoid")
        b = loss(params, X[perm], Y[perm], spec, "sigmoid")
        assert a == pytest.approx(b, rel=1e-12)

    def test_pairing_enforced(self, rng):
        params = random_params(rng, 2, 2)
        X = rng.normal(size=(4, 2))
        Y = (rng.random((4, 2)) < 0.5).astype(float)
        with pytest.raises(ValidationError):
            loss(params, X, Y, LossSpec(kind="bce"), "identity")
        with pytest.raises(ValidationError):
            loss(params, X, Y, LossSpec(kind="huber-hinge"), "sigmoid")


class TestGradient:
    def test_balanced_labels_zero_bias_gradient(self):
        params = ModelParams.zeros(2, 2)
        X = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.5], [0.5, -1.0]])
        Y = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        spec = LossSpec(kind="bce", q=1.0, lam=0.0)
        db, _, _ = gradient(params, X, Y, spec, "sigmoid")
        assert np.abs(db).max() <= 1e-15

    def test_matches_finite_differences(self, rng):
        for trial in range(24):
            L = int(rng.integers(1, 5))
            m = int(rng.integers(1, 4))
            n = int(rng.integers(2, 20))
            params = random_params(rng, L, m)
            X = rng.normal(size=(n, m))
            Y = (rng.random((n, L)) < 0.5).astype(float)
            base_spec, act = spec_battery()[trial % 4]
            q = [1.0, 1.5, 2.0, 3.0, 5.0][trial % 5]
            lam = [0.0, 0.01][trial % 2]
            spec = LossSpec(kind=base_spec.kind, xi_plus=base_spec.xi_plus,
                            xi_minus=base_spec.xi_minus, kappa=base_spec.kappa,
                            q=q, lam=lam)
            db, dW, dC = gradient(params, X, Y, spec, act)
            analytic = pack_params(ModelParams(db, dW, np.tril(dC, -1)))
            fun = lambda x: loss(unpack_params(x, L, m), X, Y, spec, act)
            numeric = central_differences(fun, pack_params(params))
            err = np.abs(analytic - numeric) / np.maximum(
                1.0, np.abs(analytic) + np.abs(numeric))
            assert err.max() <= 1e-5

    def test_zero_c_matches_per_label_fits(self, rng):
        # with no dependencies the joint gradient splits by label
        L, m, n = 3, 2, 12
        params = random_params(rng, L, m)
        params.C[:] = 0.0
        X = rng.normal(size=(n, m))
        Y = (rng.random((n, L)) < 0.5).astype(float)
        spec = LossSpec(kind="bce", q=1.0, lam=0.03)
        db, dW, _ = gradient(params, X, Y, spec, "sigmoid")
        r = L * m + L * (L - 1) // 2
        for l in range(L):
            single = ModelParams(params.b[l : l + 1], params.W[l : l + 1],
                                 np.zeros((1, 1)))
            def fl(x):
                p = unpack_params(x, 1, m)
                value = loss(p, X, Y[:, l : l + 1],
                             LossSpec(kind="bce", q=1.0, lam=0.0), "sigmoid")
                return value / L + spec.lam / r * float(np.sum(p.W**2))
            g = central_differences(fl, pack_params(single))
            assert abs(g[0] - db[l]) <= 1e-7
            assert np.abs(g[1 : 1 + m] - dW[l]).max() <= 1e-7


class TestPredict:
    def test_tie_goes_positive(self):
        params = ModelParams.zeros(2, 1)
        yhat = predict(params, np.zeros((3, 1)), "sigmoid")
        assert np.array_equal(yhat, np.ones((3, 2), dtype=np.int64))

    def test_just_below_threshold(self, rng):
        params = ModelParams(np.array([-0.0004]), np.zeros((1, 1)),
                             np.zeros((1, 1)))
        yhat = predict(params, np.zeros((1, 1)), "sigmoid")
        assert yhat[0, 0] == 0

    def test_identity_threshold_at_zero(self):
        params = ModelParams(np.array([0.0, -0.1]), np.zeros((2, 1)),
                             np.zeros((2, 2)))
        yhat = predict(params, np.zeros((2, 1)), "identity")
        assert np.array_equal(yhat, np.array([[1, 0], [1, 0]]))


class TestPacking:
    def test_round_trip(self, rng):
        params = random_params(rng, 4, 3)
        again = unpack_params(pack_params(params), 4, 3)
        assert np.array_equal(params.b, again.b)
        assert np.array_equal(params.W, again.W)
        assert np.array_equal(params.C, again.C)

    def test_without_c(self, rng):
        params = random_params(rng, 3, 2)
        x = pack_params(params, include_c=False)
        assert x.shape == (9,)
        again = unpack_params(x, 3, 2, include_c=False)
        assert np.array_equal(again.C, np.zeros((3, 3)))

    def test_free_param_count(self):
        assert n_free_params(3, 3) == 15
        assert n_free_params(6, 3) == 39
        assert n_free_params(9, 3) == 72


class TestValidation:
    def test_upper_triangular_c_rejected(self):
        C = np.zeros((2, 2))
        C[0, 1] = 1.0
        with pytest.raises(ValidationError):
            ModelParams(np.zeros(2), np.zeros((2, 1)), C)

    def test_spec_invariants(self):
        with pytest.raises(ValidationError):
            LossSpec(kind="bce", q=0.5)
        with pytest.raises(ValidationError):
            LossSpec(kind="bce", lam=-1.0)
        with pytest.raises(ValidationError):
            LossSpec(kind="huber-hinge", kappa=-1.0)
        with pytest.raises(ValidationError):
            LossSpec(kind="focal", xi_plus=1.0, xi_minus=2.0)
        with pytest.raises(ValidationError):
            LossSpec(kind="nope")

    def test_dataset_validation(self, rng):
        with pytest.raises(ValidationError):
            Dataset(rng.normal(size=(3, 2)), np.array([[0.0, 2.0]] * 3))
        with pytest.raises(ValidationError):
            Dataset(rng.normal(size=(3, 2)), np.zeros((4, 2)))


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 2**31 - 1), st.sampled_from([1.0, 1.5, 2.0, 3.0, 5.0]))
def test_gradient_property(seed, q):
    r = np.random.default_rng(seed)
    L = int(r.integers(1, 5))
    m = int(r.integers(1, 4))
    n = int(r.integers(2, 15))
    params = random_params(r, L, m)
    X = r.normal(size=(n, m))
    Y = (r.random((n, L)) < 0.5).astype(float)
    spec = LossSpec(kind="bce", q=q, lam=0.01)
    db, dW, dC = gradient(params, X, Y, spec, "sigmoid")
    analytic = pack_params(ModelParams(db, dW, np.tril(dC, -1)))
    fun = lambda x: loss(unpack_params(x, L, m), X, Y, spec, "sigmoid")
    numeric = central_differences(fun, pack_params(params))
    err = np.abs(analytic - numeric) / np.maximum(
        1.0, np.abs(analytic) + np.abs(numeric))
    assert err.max() <= 1e-5
