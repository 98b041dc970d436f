import math

import numpy as np
import pytest

from htdp.core import Dataset, L1BallDomain, PrivacyBudget, RandomStream
from htdp.fw_polytope import (
    FWConfig,
    analysis_schedule_fw,
    analysis_schedule_robust_regression,
    default_fw_schedule,
    default_lasso_schedule,
    ht_dp_fw,
    nonprivate_fw,
    trunc_dp_fw_lasso,
)
from htdp.losses import LossModel, empirical_risk
from htdp.robust_mean import CatoniParams

from oracles import quadratic_min_over_l1_ball_2d


def linear_data(n, d, w_star, seed=0, noise=0.1, scale=1.0):
    gen = np.random.default_rng(seed)
    X = gen.normal(size=(n, d)) * scale
    y = X @ w_star + noise * gen.normal(size=n)
    return Dataset(X, y)


class TestSchedules:
    def test_fw_defaults(self):
        cfg = default_fw_schedule(1000, 1.0)
        assert cfg.iterations == 10
        assert cfg.catoni.scale == 1000.0
        assert cfg.catoni.beta == 1.0
        assert cfg.step_schedule == "harmonic"

    def test_fw_defaults_larger(self):
        assert default_fw_schedule(10_000, 1.0).iterations == 21

    def test_fw_floor_clamp(self):
        cfg = default_fw_schedule(8, 0.125)
        assert cfg.iterations == 1

    def test_fw_rejects_tiny_budget(self):
        with pytest.raises(ValueError):
            default_fw_schedule(3, 0.1)

    def test_lasso_defaults(self):
        cfg = default_lasso_schedule(10_000, 1.0)
        assert cfg.iterations == 39
        assert cfg.truncation_K == pytest.approx(10_000**0.25 / 39**0.125, rel=1e-12)
        assert cfg.truncation_K == pytest.approx(6.32, abs=0.01)

    def test_lasso_threshold_monotone_in_budget(self):
        k1 = default_lasso_schedule(5000, 0.5).truncation_K
        k2 = default_lasso_schedule(5000, 1.0).truncation_K
        assert k2 > k1

    def test_lasso_minimal(self):
        cfg = default_lasso_schedule(1, 1.0)
        assert cfg.iterations == 1
        assert cfg.truncation_K == pytest.approx(1.0)

    def test_harmonic_step_values(self):
        cfg = FWConfig(iterations=3)
        assert cfg.step(1) == pytest.approx(2.0 / 3.0)
        assert cfg.step(2) == pytest.approx(0.5)

    def test_analysis_schedules_run(self):
        cfg = analysis_schedule_fw(10_000, 1.0, alpha=2.0, tau=1.0, n_vertices=200, d=100)
        assert cfg.iterations >= 1 and cfg.catoni.scale > 0
        cfg2 = analysis_schedule_robust_regression(10_000, 1.0, d=100)
        assert cfg2.step_schedule == "constant"
        assert cfg2.step_constant == pytest.approx(1.0 / math.sqrt(cfg2.iterations))


class TestHtDpFw:
    def test_single_step_affine_form(self):
        d = 3
        w_star = np.array([1.0, 0.0, 0.0])
        data = linear_data(30, d, w_star, seed=1)
        domain = L1BallDomain(d, 1.0)
        w0 = np.array([0.3, -0.2, 0.1])
        cfg = FWConfig(iterations=1, catoni=CatoniParams(1e6), exact_selection=True)
        run = ht_dp_fw(data, LossModel.squared(), domain, PrivacyBudget(1.0), cfg, w0, RandomStream(0))
        g = run.iterates  # w0, w1
        assert len(g) == 2
        # w1 = w0/3 + (2/3) v for some vertex v
        v = (g[1] - g[0] / 3.0) / (2.0 / 3.0)
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        assert nz.size == 1 and abs(abs(v[nz[0]]) - 1.0) < 1e-12

    def test_nonprivate_mode_converges_to_vertex_optimum(self):
        d = 5
        w_star = np.zeros(d)
        w_star[0] = 1.0  # optimum is a vertex of the unit l1 ball
        # 20 rows per part keep the per-part gradient estimates informative
        data = linear_data(4000, d, w_star, seed=2, noise=0.0)
        domain = L1BallDomain(d, 1.0)
        cfg = FWConfig(iterations=200, catoni=CatoniParams(1e8), exact_selection=True)
        run = ht_dp_fw(
            data, LossModel.squared(), domain, PrivacyBudget(1.0), cfg,
            np.zeros(d), RandomStream(1),
        )
        model = LossModel.squared()
        excess = empirical_risk(model, run.w, data) - empirical_risk(model, w_star, data)
        assert excess <= 1e-2
        assert run.accountant.non_private

    def test_iterates_stay_in_ball(self):
        d = 6
        data = linear_data(60, d, np.ones(d) / d, seed=3)
        domain = L1BallDomain(d, 1.0)
        cfg = FWConfig(iterations=10, catoni=CatoniParams(50.0))
        run = ht_dp_fw(
            data, LossModel.squared(), domain, PrivacyBudget(1.0), cfg,
            np.zeros(d), RandomStream(2),
        )
        for w in run.iterates:
            assert np.abs(w).sum() <= 1.0 + 1e-9

    def test_deterministic_given_stream(self):
        d = 4
        data = linear_data(40, d, np.ones(d) / d, seed=4)
        domain = L1BallDomain(d, 1.0)
        cfg = FWConfig(iterations=8, catoni=CatoniParams(20.0))
        runs = [
            ht_dp_fw(data, LossModel.squared(), domain, PrivacyBudget(0.7), cfg,
                     np.zeros(d), RandomStream(9, 3))
            for _ in range(2)
        ]
        for a, b in zip(runs[0].iterates, runs[1].iterates):
            np.testing.assert_array_equal(a, b)

    def test_budget_charged_once_and_parts_disjoint(self):
        d = 3
        data = linear_data(50, d, np.ones(d) / d, seed=5)
        cfg = FWConfig(iterations=5, catoni=CatoniParams(30.0))
        run = ht_dp_fw(
            data, LossModel.squared(), L1BallDomain(d, 1.0), PrivacyBudget(0.9, 0.0),
            cfg, np.zeros(d), RandomStream(3),
        )
        assert run.accountant.spent == (0.9, 0.0)
        assert len(run.part_rows) == 5
        covered = set()
        for lo, hi in run.part_rows:
            rows = set(range(lo, hi))
            assert not rows & covered
            covered |= rows

    def test_pure_dp_allows_zero_delta(self):
        d = 2
        data = linear_data(20, d, np.array([0.5, -0.5]), seed=6)
        cfg = FWConfig(iterations=2, catoni=CatoniParams(10.0))
        run = ht_dp_fw(
            data, LossModel.squared(), L1BallDomain(d, 1.0), PrivacyBudget(1.0, 0.0),
            cfg, np.zeros(d), RandomStream(4),
        )
        assert run.accountant.spent[1] == 0.0

    def test_start_point_outside_ball_rejected(self):
        d = 2
        data = linear_data(20, d, np.array([0.5, -0.5]), seed=7)
        cfg = FWConfig(iterations=2, catoni=CatoniParams(10.0))
        with pytest.raises(ValueError):
            ht_dp_fw(
                data, LossModel.squared(), L1BallDomain(d, 1.0), PrivacyBudget(1.0),
                cfg, np.array([2.0, 0.0]), RandomStream(5),
            )

    def test_too_many_iterations_rejected(self):
        d = 2
        data = linear_data(5, d, np.array([0.5, -0.5]), seed=8)
        cfg = FWConfig(iterations=6, catoni=CatoniParams(10.0))
        with pytest.raises(ValueError):
            ht_dp_fw(data, LossModel.squared(), L1BallDomain(d, 1.0),
                     PrivacyBudget(1.0), cfg, np.zeros(d), RandomStream(6))

    def test_biweight_constant_step_structural(self):
        d = 4
        data = linear_data(64, d, np.ones(d) / d, seed=9, noise=0.5)
        T = 8
        cfg = FWConfig(
            iterations=T, catoni=CatoniParams(25.0),
            step_schedule="constant", step_constant=1.0 / math.sqrt(T),
        )
        run = ht_dp_fw(
            data, LossModel.biweight(1.0), L1BallDomain(d, 1.0), PrivacyBudget(1.0),
            cfg, np.zeros(d), RandomStream(7),
        )
        for w in run.iterates:
            assert np.abs(w).sum() <= 1.0 + 1e-9


class TestTruncDpFwLasso:
    def test_identity_shrink_equivalence(self):
        d = 3
        data = linear_data(30, d, np.array([0.4, -0.3, 0.3]), seed=10)
        from htdp.core import shrink_dataset

        K = float(max(np.abs(data.features).max(), np.abs(data.responses).max()) + 1.0)
        pre_shrunk = shrink_dataset(data, K)
        cfg = FWConfig(iterations=4, truncation_K=K)
        domain = L1BallDomain(d, 1.0)
        budget = PrivacyBudget(0.8, 1e-4)
        r1 = trunc_dp_fw_lasso(data, domain, budget, cfg, np.zeros(d), RandomStream(11))
        r2 = trunc_dp_fw_lasso(pre_shrunk, domain, budget, cfg, np.zeros(d), RandomStream(11))
        for a, b in zip(r1.iterates, r2.iterates):
            np.testing.assert_array_equal(a, b)

    def test_single_step_affine_form(self):
        d = 3
        data = linear_data(30, d, np.array([0.4, -0.3, 0.3]), seed=12)
        cfg = FWConfig(iterations=1, truncation_K=5.0)
        run = trunc_dp_fw_lasso(
            data, L1BallDomain(d, 1.0), PrivacyBudget(0.8, 1e-4), cfg,
            np.full(d, 0.1), RandomStream(13),
        )
        w0, w1 = run.iterates
        v = (w1 - w0 / 3.0) / (2.0 / 3.0)
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        assert nz.size == 1 and abs(abs(v[nz[0]]) - 1.0) < 1e-12

    def test_zero_delta_rejected(self):
        d = 2
        data = linear_data(10, d, np.array([0.5, 0.5]), seed=14)
        cfg = FWConfig(iterations=2, truncation_K=3.0)
        with pytest.raises(ValueError):
            trunc_dp_fw_lasso(data, L1BallDomain(d, 1.0), PrivacyBudget(0.8, 0.0),
                              cfg, np.zeros(d), RandomStream(15))

    def test_accountant_recomposes_to_declared(self):
        d = 3
        data = linear_data(40, d, np.array([0.4, -0.3, 0.3]), seed=16)
        T = 7
        cfg = FWConfig(iterations=T, truncation_K=4.0)
        budget = PrivacyBudget(0.6, 1e-5)
        run = trunc_dp_fw_lasso(data, L1BallDomain(d, 1.0), budget, cfg,
                                np.zeros(d), RandomStream(17))
        assert run.accountant.steps_charged == T
        assert run.accountant.spent == (0.6, 1e-5)
        # independent recomposition from the per-step budget formula
        step = run.accountant.step_epsilon()
        assert step * 2.0 * math.sqrt(2.0 * T * math.log(1e5)) == pytest.approx(0.6, rel=1e-12)

    def test_iterates_stay_in_ball(self):
        d = 4
        data = linear_data(40, d, np.ones(d) / d, seed=18)
        cfg = FWConfig(iterations=6, truncation_K=2.0)
        run = trunc_dp_fw_lasso(data, L1BallDomain(d, 1.0), PrivacyBudget(0.8, 1e-4),
                                cfg, np.zeros(d), RandomStream(19))
        for w in run.iterates:
            assert np.abs(w).sum() <= 1.0 + 1e-9


class TestNonprivateFw:
    def test_two_dim_quadratic_reaches_analytic_optimum(self):
        gen = np.random.default_rng(20)
        X = gen.normal(size=(200, 2)) @ np.array([[1.0, 0.3], [0.0, 0.7]])
        w_target = np.array([1.4, -0.9])  # outside the unit ball
        y = X @ w_target
        data = Dataset(X, y)
        model = LossModel.squared()
        # empirical risk = w'Aw - 2 b'w + const with A = X'X/n, b = X'y/n
        A = 2.0 * X.T @ X / X.shape[0]
        b = 2.0 * X.T @ y / X.shape[0]
        w_opt, _ = quadratic_min_over_l1_ball_2d(A, b, 1.0)
        run = nonprivate_fw(data, model, L1BallDomain(2, 1.0), 500, np.zeros(2))
        gap = empirical_risk(model, run.w, data) - empirical_risk(model, w_opt, data)
        assert gap <= 1e-3

    def test_single_iteration_allowed(self):
        data = linear_data(10, 2, np.array([0.5, 0.5]), seed=21)
        run = nonprivate_fw(data, LossModel.squared(), L1BallDomain(2, 1.0), 1, np.zeros(2))
        assert len(run.iterates) == 2
        with pytest.raises(ValueError):
            nonprivate_fw(data, LossModel.squared(), L1BallDomain(2, 1.0), 0, np.zeros(2))

    def test_risk_descent_up_to_schedule_slack(self):
        # harmonic-step Frank-Wolfe is not literally monotone near an interior
        # optimum; the descent lemma bounds any per-step increase by
        # eta_t^2 * C / 2 with C the curvature over the ball, and the
        # trajectory must still make net progress
        from htdp.harness import risk_series

        gen = np.random.default_rng(22)
        model = LossModel.squared()
        for trial in range(20):
            d = int(gen.integers(2, 6))
            w_star = gen.normal(size=d)
            w_star /= max(1.0, np.abs(w_star).sum())
            data = linear_data(100, d, w_star, seed=100 + trial, noise=0.2)
            T = 80
            run = nonprivate_fw(data, model, L1BallDomain(d, 1.0), T, np.zeros(d))
            risks = risk_series(model, data, run.iterates)
            H = 2.0 * data.features.T @ data.features / data.n
            curvature = 4.0 * float(np.linalg.eigvalsh(H)[-1])
            for t in range(1, T + 1):
                eta = 2.0 / (t + 2.0)
                slack = eta * eta * curvature / 2.0 + 1e-9
                assert risks[t] <= risks[t - 1] + slack, (trial, t)
            assert risks[-1] < risks[0]
