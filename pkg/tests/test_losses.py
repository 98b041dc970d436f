import numpy as np
import pytest

from htdp.core import Dataset
from htdp.losses import (
    LossModel,
    empirical_risk,
    gradient_rows,
    loss_value,
    mean_gradient,
    per_sample_gradient,
)

from oracles import central_difference_gradient

ALL_MODELS = [
    LossModel.squared(),
    LossModel.logistic(0.05),
    LossModel.biweight(1.3),
    LossModel.mean_squared(),
]


def random_point(model, gen, d=4):
    w = gen.normal(size=d) * 0.5
    x = gen.normal(size=d)
    if model.kind == "logistic_l2":
        y = 1.0 if gen.random() < 0.5 else -1.0
    else:
        y = float(gen.normal())
    if model.kind == "biweight":
        # keep away from the curvature kink at |residual| = c where finite
        # differences of a C^1 function are not informative
        while abs(abs(x @ w - y) - model.biweight_c) < 1e-3:
            y = float(gen.normal())
    return w, x, y


class TestGradients:
    def test_squared_zero_residual(self):
        g = per_sample_gradient(LossModel.squared(), np.zeros(2), np.array([1.0, 2.0]), 0.0)
        np.testing.assert_array_equal(g, np.zeros(2))

    def test_squared_direct_formula(self):
        g = per_sample_gradient(
            LossModel.squared(), np.array([1.0, 0.0]), np.array([1.0, 1.0]), 0.0
        )
        np.testing.assert_allclose(g, [2.0, 2.0])

    @pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.kind)
    def test_finite_difference(self, model):
        gen = np.random.default_rng(42)
        for _ in range(100):
            w, x, y = random_point(model, gen)
            g = per_sample_gradient(model, w, x, y)
            fd = central_difference_gradient(lambda v: loss_value(model, v, x, y), w)
            np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-7)

    def test_logistic_label_validation(self):
        with pytest.raises(ValueError):
            per_sample_gradient(LossModel.logistic(), np.ones(2), np.ones(2), 0.5)
        with pytest.raises(ValueError):
            loss_value(LossModel.logistic(), np.ones(2), np.ones(2), 2.0)

    def test_gradient_rows_match_single(self):
        gen = np.random.default_rng(1)
        X = gen.normal(size=(6, 3))
        for model in ALL_MODELS:
            y = (
                np.where(gen.random(6) < 0.5, -1.0, 1.0)
                if model.kind == "logistic_l2"
                else gen.normal(size=6)
            )
            w = gen.normal(size=3) * 0.3
            rows = gradient_rows(model, w, X, y)
            for i in range(6):
                np.testing.assert_allclose(
                    rows[i], per_sample_gradient(model, w, X[i], y[i]), atol=1e-14
                )
            np.testing.assert_allclose(
                mean_gradient(model, w, X, y), rows.mean(axis=0), atol=1e-12
            )


class TestLossValues:
    def test_squared_perfect_fit(self):
        w = np.array([0.5, -1.0])
        x = np.array([2.0, 1.0])
        assert loss_value(LossModel.squared(), w, x, float(x @ w)) == 0.0

    def test_biweight_saturation(self):
        model = LossModel.biweight(2.0)
        cap = 2.0**2 / 6.0
        for t in (2.0, 2.5, 10.0, -3.0):
            x = np.array([1.0])
            w = np.array([0.0])
            assert loss_value(model, w, x, -t) == pytest.approx(cap, abs=1e-15)

    def test_biweight_continuity_at_threshold(self):
        model = LossModel.biweight(1.7)
        x = np.array([1.0])
        w = np.array([0.0])
        inner = loss_value(model, w, x, -(1.7 - 1e-9))
        outer = loss_value(model, w, x, -(1.7 + 1e-9))
        assert inner == pytest.approx(outer, abs=1e-12)

    def test_biweight_derivative_odd_and_bounded(self):
        from htdp.losses import _biweight_dpsi

        c = 1.0
        ts = np.linspace(-3, 3, 2001)
        vals = _biweight_dpsi(ts, c)
        np.testing.assert_allclose(vals, -_biweight_dpsi(-ts, c), atol=1e-15)
        # max of t (1 - t^2)^2 on [0, 1] sits at t = 1/sqrt(5)
        peak = (1 / np.sqrt(5)) * (1 - 0.2) ** 2
        assert np.abs(vals).max() <= peak + 1e-12
        assert np.all(vals[np.abs(ts) > c] == 0.0)

    def test_convexity(self):
        gen = np.random.default_rng(3)
        for model in (LossModel.squared(), LossModel.logistic(0.1)):
            x = gen.normal(size=4)
            y = 1.0 if model.kind == "logistic_l2" else float(gen.normal())
            for _ in range(1000):
                w1 = gen.normal(size=4)
                w2 = gen.normal(size=4)
                alpha = float(gen.random())
                lhs = loss_value(model, alpha * w1 + (1 - alpha) * w2, x, y)
                rhs = alpha * loss_value(model, w1, x, y) + (1 - alpha) * loss_value(
                    model, w2, x, y
                )
                assert lhs <= rhs + 1e-10


class TestEmpiricalRisk:
    def test_single_row_reduces_to_loss(self):
        gen = np.random.default_rng(4)
        X = gen.normal(size=(1, 3))
        y = gen.normal(size=1)
        w = gen.normal(size=3)
        data = Dataset(X, y)
        model = LossModel.squared()
        assert empirical_risk(model, w, data) == pytest.approx(
            loss_value(model, w, X[0], y[0])
        )

    def test_duplication_invariant(self):
        gen = np.random.default_rng(5)
        X = gen.normal(size=(7, 2))
        y = gen.normal(size=7)
        w = gen.normal(size=2)
        model = LossModel.squared()
        single = empirical_risk(model, w, Dataset(X, y))
        doubled = empirical_risk(model, w, Dataset(np.vstack([X, X]), np.hstack([y, y])))
        assert single == pytest.approx(doubled, rel=1e-12)

    def test_exact_fit_zero_risk(self):
        gen = np.random.default_rng(6)
        X = gen.normal(size=(10, 3))
        w = gen.normal(size=3)
        data = Dataset(X, X @ w)
        assert empirical_risk(LossModel.squared(), w, data) == pytest.approx(0.0, abs=1e-20)


def test_model_validation():
    with pytest.raises(ValueError):
        LossModel("huber")
    with pytest.raises(ValueError):
        LossModel("logistic_l2", reg_lambda=-1.0)
    with pytest.raises(ValueError):
        LossModel("biweight", biweight_c=0.0)
