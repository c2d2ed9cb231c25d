import numpy as np
import pytest

from ccn.errors import ValidationError
from ccn.estimators import (
    FitConfig,
    entropy_label_order,
    fit_br,
    fit_cc,
    fit_ccn,
    informed_init,
    random_init,
)
from ccn.model import Dataset, LossSpec, ModelParams, forward, loss
from ccn.numkit import make_rng, spawn_rng
from ccn.optimizer import OptimizerConfig
from ccn.simgen import builtin_design, generate
from oracles import irls_logistic

TIGHT = OptimizerConfig(eps_c=1e-12)


def bce_config(q=1.0, lam=0.001, **kw):
    return FitConfig(loss_spec=LossSpec(kind="bce", q=q, lam=lam), **kw)


def strong_data(seed, n=120):
    return generate(builtin_design("strong"), spawn_rng(seed), n=n)[0]


class TestEntropyOrder:
    def test_frequency_example(self):
        rng = make_rng(0)
        n = 2000
        freqs = (0.5, 0.99, 0.8)
        Y = np.column_stack([(rng.random(n) < f).astype(float) for f in freqs])
        # exact frequencies so the entropies are the intended ones
        Y[:, 0] = (np.arange(n) < n // 2).astype(float)
        Y[:, 1] = (np.arange(n) < int(n * 0.99)).astype(float)
        Y[:, 2] = (np.arange(n) < int(n * 0.8)).astype(float)
        assert entropy_label_order(Y).tolist() == [1, 2, 0]

    def test_constant_column_first(self):
        Y = np.column_stack([
            (np.arange(10) < 5).astype(float),
            np.ones(10),
        ])
        assert entropy_label_order(Y).tolist() == [1, 0]

    def test_identical_frequencies_keep_order(self):
        Y = np.column_stack([
            (np.arange(10) < 5).astype(float),
            (np.arange(10) >= 5).astype(float),
            (np.arange(10) % 2).astype(float),
        ])
        assert entropy_label_order(Y).tolist() == [0, 1, 2]


class TestRandomInit:
    def test_reproducible(self):
        a = random_init(spawn_rng(5), 3, 2)
        b = random_init(spawn_rng(5), 3, 2)
        assert np.array_equal(a.b, b.b)
        assert np.array_equal(a.W, b.W)
        assert np.array_equal(a.C, b.C)

    def test_seeds_differ(self):
        a = random_init(spawn_rng(5), 3, 2)
        b = random_init(spawn_rng(6), 3, 2)
        assert not np.array_equal(a.b, b.b)

    def test_range_and_structure(self):
        p = random_init(spawn_rng(1), 5, 4)
        for arr in (p.b, p.W, p.C):
            assert np.abs(arr).max() <= 0.5
        assert np.array_equal(np.triu(p.C), np.zeros((5, 5)))


class TestFitBr:
    def test_matches_frozen_ccn(self, rng):
        for seed in range(4):
            ds = strong_data(seed, n=80)
            cfg = bce_config(optimizer=TIGHT, seed=seed)
            br = fit_br(ds, cfg)
            frozen = fit_ccn(ds, bce_config(optimizer=TIGHT, seed=seed,
                                            freeze_c=True, n_random_starts=2))
            assert np.abs(br.params.b - frozen.params.b).max() <= 1e-6
            assert np.abs(br.params.W - frozen.params.W).max() <= 1e-6
            assert np.array_equal(br.predict(ds.X), frozen.predict(ds.X))

    def test_single_label_matches_irls(self, rng):
        n, m = 90, 3
        X = rng.normal(size=(n, m))
        y = (rng.random(n) < 0.4).astype(float)
        ds = Dataset(X, y[:, None])
        lam = 0.01
        fm = fit_br(ds, bce_config(lam=lam, optimizer=TIGHT))
        # single label: loss scale 1/n, ridge lam / m
        beta = irls_logistic(X, y, 1.0 / n, lam / m)
        assert abs(fm.params.b[0] - beta[0]) <= 1e-6
        assert np.abs(fm.params.W[0] - beta[1:]).max() <= 1e-6

    def test_constant_label_stays_finite(self, rng):
        X = rng.normal(size=(40, 2))
        Y = np.column_stack([np.ones(40), (rng.random(40) < 0.5)])
        fm = fit_br(Dataset(X, Y), bce_config(lam=0.01))
        assert np.all(np.isfinite(fm.params.b))
        assert np.all(np.isfinite(fm.params.W))

    def test_constant_label_without_penalty_flagged(self, rng):
        X = rng.normal(size=(30, 2))
        Y = np.column_stack([np.ones(30), (rng.random(30) < 0.5)])
        fm = fit_br(Dataset(X, Y), bce_config(lam=0.0))
        assert "constant-label-without-regularization" in fm.flags


class TestFitCc:
    def test_single_label_equals_br(self, rng):
        X = rng.normal(size=(50, 2))
        Y = (rng.random((50, 1)) < 0.5).astype(float)
        ds = Dataset(X, Y)
        cc = fit_cc(ds, bce_config(optimizer=TIGHT), propagation="probability")
        br = fit_br(ds, bce_config(optimizer=TIGHT))
        assert np.abs(cc.params.b - br.params.b).max() <= 1e-12
        assert np.abs(cc.params.W - br.params.W).max() <= 1e-12

    def test_probability_mode_is_informed_init(self):
        ds = strong_data(3)
        cfg = bce_config(seed=3)
        cc = fit_cc(ds, cfg, propagation="probability")
        init = informed_init(ds, cfg)
        assert np.array_equal(cc.params.b, init.b)
        assert np.array_equal(cc.params.W, init.W)
        assert np.array_equal(cc.params.C, init.C)

    def test_binary_mode_propagates_thresholded(self, rng):
        ds = strong_data(11)
        fm = fit_cc(ds, bce_config(), propagation="binary")
        # binary-chain prediction by hand
        X = ds.X
        z = np.empty((X.shape[0], 3))
        p = np.empty_like(z)
        for l in range(3):
            t = fm.params.b[l] + X @ fm.params.W[l]
            if l:
                t = t + z[:, :l] @ fm.params.C[l, :l]
            p[:, l] = 1.0 / (1.0 + np.exp(-t))
            z[:, l] = p[:, l] >= 0.5
        assert np.array_equal(fm.predict(X), z.astype(np.int64))

    def test_rejects_margin_loss(self, rng):
        ds = strong_data(0, n=40)
        with pytest.raises(ValidationError):
            fit_cc(ds, FitConfig(loss_spec=LossSpec(kind="huber-hinge")))


class TestInformedInit:
    def test_l1_has_empty_dependencies(self, rng):
        X = rng.normal(size=(40, 2))
        Y = (rng.random((40, 1)) < 0.5).astype(float)
        init = informed_init(Dataset(X, Y), bce_config())
        assert np.array_equal(init.C, np.zeros((1, 1)))

    def test_conditionally_independent_labels_give_small_c(self):
        # logistic labels depending on x only: chain coefficients vanish
        rng = spawn_rng(77)
        n = 5000
        X = rng.normal(size=(n, 3))
        P = 1.0 / (1.0 + np.exp(-(X @ np.array([[1.0, 0.5], [0.0, -1.0],
                                                [0.5, 0.0]]))))
        Y = (rng.random((n, 2)) < P).astype(float)
        init = informed_init(Dataset(X, Y), bce_config(lam=0.001))
        assert abs(init.C[1, 0]) <= 0.12

    def test_beats_zero_init_on_strong_data(self):
        wins = 0
        for seed in range(40):
            ds = strong_data(seed, n=100)
            cfg = bce_config(seed=seed)
            init = informed_init(ds, cfg)
            spec = cfg.loss_spec
            informed_loss = loss(init, ds.X, ds.Y, spec, "sigmoid")
            zero_loss = loss(ModelParams.zeros(3, 3), ds.X, ds.Y, spec,
                             "sigmoid")
            wins += informed_loss <= zero_loss
        assert wins >= 38


class TestFitCcn:
    def test_no_random_starts_is_seed_independent(self):
        ds = strong_data(21)
        a = fit_ccn(ds, bce_config(seed=1, n_random_starts=0))
        b = fit_ccn(ds, bce_config(seed=999, n_random_starts=0))
        assert np.array_equal(a.params.b, b.params.b)
        assert np.array_equal(a.params.W, b.params.W)
        assert np.array_equal(a.params.C, b.params.C)

    def test_more_starts_never_worse(self):
        ds = strong_data(8)
        losses = []
        for k in (0, 2, 4):
            fm = fit_ccn(ds, bce_config(seed=4, n_random_starts=k))
            losses.append(fm.training_loss)
        assert losses[1] <= losses[0] + 1e-15
        assert losses[2] <= losses[1] + 1e-15

    def test_recovers_strong_sign_pattern(self):
        hits = 0
        for seed in range(20):
            ds = generate(builtin_design("strong"), spawn_rng(seed, 50),
                          n=200)[0]
            fm = fit_ccn(ds, bce_config(lam=0.001, seed=seed))
            C = fm.params.C
            hits += (C[1, 0] < 0) and (C[2, 0] > 0) and (C[2, 1] < 0)
        assert hits >= 18

    def test_dependencies_shrink_with_penalty(self):
        # deterministic labels from X alone: C is pure overfit, so the
        # penalty should pull it toward zero
        rng = spawn_rng(5)
        X = rng.normal(size=(150, 3))
        W = np.array([[1.5, 0.0, 0.0], [0.0, 1.5, 0.0], [0.0, 0.0, 1.5]])
        Y = (X @ W.T >= 0).astype(float)
        ds = Dataset(X, Y)
        norms = []
        for lam in (0.0001, 0.01, 0.25):
            fm = fit_ccn(ds, bce_config(lam=lam, seed=2, n_random_starts=2))
            norms.append(np.abs(fm.params.C).sum())
        assert norms[2] < norms[1] < norms[0]

    def test_label_order_round_trip(self):
        # an order-independent method must predict identically whatever
        # chain order it was given
        ds = strong_data(13)
        given = fit_br(ds, bce_config(optimizer=TIGHT))
        reversed_cfg = bce_config(optimizer=TIGHT, label_order=[2, 1, 0])
        rev = fit_br(ds, reversed_cfg)
        assert np.abs(given.predict_proba(ds.X)
                      - rev.predict_proba(ds.X)).max() <= 1e-9
        assert np.array_equal(given.predict(ds.X), rev.predict(ds.X))
        assert rev.label_order.tolist() == [2, 1, 0]

    def test_entropy_order_applied(self):
        ds = strong_data(9)
        fm = fit_ccn(ds, bce_config(label_order="entropy", n_random_starts=0))
        assert fm.label_order.tolist() == entropy_label_order(ds.Y).tolist()

    def test_invalid_order_rejected(self):
        ds = strong_data(0, n=30)
        with pytest.raises(ValidationError):
            fit_ccn(ds, bce_config(label_order=[0, 0, 2]))

    def test_needs_two_observations(self, rng):
        ds = Dataset(rng.normal(size=(1, 2)), np.zeros((1, 2)))
        with pytest.raises(ValidationError):
            fit_ccn(ds, bce_config())

    def test_huber_hinge_fit_runs(self, rng):
        ds = strong_data(2, n=60)
        cfg = FitConfig(loss_spec=LossSpec(kind="huber-hinge", kappa=0.5,
                                           q=2.0, lam=0.01),
                        n_random_starts=3, seed=0)
        fm = fit_ccn(ds, cfg)
        assert fm.activation == "identity"
        yhat = fm.predict(ds.X)
        assert set(np.unique(yhat)).issubset({0, 1})


class TestPredictionPaths:
    def test_network_predictions_match_forward(self):
        ds = strong_data(17)
        fm = fit_ccn(ds, bce_config(seed=1, n_random_starts=1))
        cache = forward(fm.params, ds.X, "sigmoid")
        assert np.array_equal(fm.predict_proba(ds.X), cache.p)
        assert np.array_equal(fm.predict(ds.X), (cache.p >= 0.5).astype(int))
