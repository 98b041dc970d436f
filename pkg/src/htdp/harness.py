"""Experiment runner: grids over (n, d, epsilon, s*), repeated trials, excess
empirical risk against a baseline optimum, CSV output and plot-ready series.

Synthetic trials draw fresh data (and a fresh ground-truth parameter) per
repetition, so the averaged excess risk reflects both the data and the
algorithm randomness. Trials are deterministic functions of the master seed:
trial k uses streams (2k, 2k+1) for data and algorithm draws, and the same
trial streams are reused at every grid point (common random numbers). That
leaves each point's risk distribution untouched while stabilising comparisons
across the grid.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .core import DataError, Dataset, L1BallDomain, PrivacyBudget, RandomStream
from .datagen import (
    FeatureDistribution,
    NoiseDistribution,
    gen_linear,
    gen_logistic,
    gen_wstar_l1,
    gen_wstar_sparse,
    load_csv,
    random_l1_ball_point,
)
from .fw_polytope import default_fw_schedule, default_lasso_schedule, ht_dp_fw, nonprivate_fw, trunc_dp_fw_lasso
from .losses import LossModel, empirical_risk
from .mechanisms import BudgetAccountant, BudgetExhaustedError
from .sparse_iht import default_sparse_linear_schedule, default_sparse_opt_schedule, ht_sparse_linear, ht_sparse_opt, nonprivate_iht

__all__ = [
    "ALGORITHMS",
    "ExperimentConfig",
    "TrialRecord",
    "AggregateRecord",
    "ExperimentResult",
    "delta_for",
    "compute_excess_risk",
    "risk_series",
    "run_experiment",
    "write_results_csv",
    "emit_plot_series",
    "collect_series",
    "polytope_baseline",
    "sparse_baseline",
]

ALGORITHMS = ("fw", "lasso", "sparse_linear", "sparse_opt")


@dataclass
class ExperimentConfig:
    """One experiment: an algorithm, a data source and a parameter grid."""

    algorithm: str
    loss: LossModel = field(default_factory=LossModel.squared)
    n_grid: tuple = (10000,)
    d_grid: tuple = (100,)
    eps_grid: tuple = (1.0,)
    sstar_grid: tuple = (0,)
    trials: int = 20
    seed: int = 0
    delta_rule: str = "n^-1.1"
    feature_dist: FeatureDistribution | None = None
    noise_dist: NoiseDistribution | None = None
    data_path: str | None = None
    target_column: int = 0
    max_rows: int | None = None
    radius: float = 1.0
    smult: int = 2
    c2: int = 1
    baseline_iterations: int = 2000

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for name in ("n_grid", "d_grid", "eps_grid", "sstar_grid"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        if self.data_path is None and self.feature_dist is None:
            raise ValueError("either a feature distribution or a data file is required")
        if self.algorithm in ("lasso", "sparse_linear") and self.loss.kind != "squared":
            raise ValueError(f"{self.algorithm} supports only the squared loss")
        if self.algorithm in ("sparse_linear", "sparse_opt"):
            if any(s < 1 for s in self.sstar_grid):
                raise ValueError("sparse algorithms need s_star >= 1")
        if self.loss.kind not in ("squared", "logistic_l2"):
            raise ValueError("the harness drives squared or logistic losses")
        delta_for(100, self.delta_rule)


@dataclass
class TrialRecord:
    """One repetition at one grid point."""

    algorithm: str
    n: int
    d: int
    epsilon: float
    s_star: int
    trial: int
    excess_risk: float
    risk_series: list
    wall_ms: float
    error: str | None = None


@dataclass
class AggregateRecord:
    """Per-grid-point mean over the successful trials."""

    algorithm: str
    n: int
    d: int
    epsilon: float
    s_star: int
    mean_excess_risk: float
    mean_wall_ms: float
    n_trials: int
    n_failed: int


@dataclass
class ExperimentResult:
    records: list
    aggregates: list


def delta_for(n: int, rule: str) -> float:
    """Resolve the delta rule: "n^-1.1" or "fixed:<value>"."""
    if rule == "n^-1.1":
        return float(n) ** -1.1
    if rule.startswith("fixed:"):
        try:
            value = float(rule.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"cannot parse delta rule {rule!r}") from exc
        if not 0.0 <= value < 1.0:
            raise ValueError("fixed delta must lie in [0, 1)")
        return value
    raise ValueError(f"unknown delta rule {rule!r}")


def compute_excess_risk(model: LossModel, data: Dataset, w, w_star) -> float:
    """Empirical risk of w minus that of the baseline parameter. Slightly
    negative values are reported as-is."""
    return empirical_risk(model, w, data) - empirical_risk(model, w_star, data)


def risk_series(model: LossModel, data: Dataset, iterates) -> np.ndarray:
    """Empirical risk at every iterate, evaluated in one pass."""
    W = np.column_stack([np.asarray(w, dtype=float) for w in iterates])
    X, y = data.features, data.responses
    if model.kind == "squared":
        R = X @ W - y[:, None]
        return np.mean(R * R, axis=0)
    if model.kind == "logistic_l2":
        M = y[:, None] * (X @ W)
        reg = model.reg_lambda / 2.0 * np.sum(W * W, axis=0)
        return np.mean(np.logaddexp(0.0, -M), axis=0) + reg
    if model.kind == "biweight":
        from .losses import _biweight_psi

        return np.mean(_biweight_psi(X @ W - y[:, None], model.biweight_c), axis=0)
    sq = float(np.mean(np.einsum("ij,ij->i", X, X)))
    xbar = X.mean(axis=0)
    return sq - 2.0 * xbar @ W + np.sum(W * W, axis=0)


def polytope_baseline(data: Dataset, model: LossModel, radius: float, iterations: int = 2000) -> np.ndarray:
    """Baseline optimum over the l1 ball via the noise-free solver."""
    domain = L1BallDomain(data.d, radius)
    run = nonprivate_fw(data, model, domain, iterations, np.zeros(data.d))
    return run.w


def _quadratic_step(X: np.ndarray) -> float:
    """Safe gradient step for least squares: 1 / (2 * lambda_max(X^T X / n)),
    with lambda_max estimated by a few power iterations."""
    n, d = X.shape
    gen = np.random.Generator(np.random.Philox(12345))
    v = gen.normal(size=d)
    v /= np.linalg.norm(v)
    for _ in range(30):
        u = X.T @ (X @ v) / n
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.5
        v = u / norm
    return 1.0 / (2.0 * norm)


def sparse_baseline(data: Dataset, model: LossModel, s: int, iterations: int = 2000) -> np.ndarray:
    """Baseline s-sparse optimum via noise-free hard thresholding."""
    step = _quadratic_step(data.features)
    run = nonprivate_iht(data, model, iterations, s, step, np.zeros(data.d))
    return run.w


def _check_budget(acct: BudgetAccountant, epsilon: float, delta: float) -> None:
    """Zero-tolerance accounting check after a run."""
    if acct.non_private:
        return
    spent_eps, spent_delta = acct.spent
    if spent_eps != epsilon or spent_delta != delta:
        raise BudgetExhaustedError(
            f"accounting mismatch: spent ({spent_eps}, {spent_delta}), "
            f"declared ({epsilon}, {delta})"
        )


def _synthetic_trial(cfg, n, d, eps, s_star, data_stream, algo_stream):
    dgen = data_stream.generator()
    if cfg.algorithm in ("fw", "lasso"):
        w_star = gen_wstar_l1(d, dgen)
    else:
        w_star = gen_wstar_sparse(d, s_star, dgen)
    if cfg.loss.kind == "logistic_l2":
        data = gen_logistic(n, d, w_star, cfg.feature_dist, cfg.noise_dist, dgen)
    else:
        data = gen_linear(n, d, w_star, cfg.feature_dist, cfg.noise_dist, dgen)

    if cfg.algorithm == "fw":
        w0 = random_l1_ball_point(d, dgen, cfg.radius)
        domain = L1BallDomain(d, cfg.radius)
        budget = PrivacyBudget(eps, 0.0)
        run = ht_dp_fw(data, cfg.loss, domain, budget, default_fw_schedule(n, eps), w0, algo_stream)
    elif cfg.algorithm == "lasso":
        w0 = random_l1_ball_point(d, dgen, cfg.radius)
        domain = L1BallDomain(d, cfg.radius)
        budget = PrivacyBudget(eps, delta_for(n, cfg.delta_rule))
        run = trunc_dp_fw_lasso(data, domain, budget, default_lasso_schedule(n, eps), w0, algo_stream)
    elif cfg.algorithm == "sparse_linear":
        w1 = gen_wstar_sparse(d, s_star, dgen)
        budget = PrivacyBudget(eps, delta_for(n, cfg.delta_rule))
        sched = default_sparse_linear_schedule(n, eps, s_star, cfg.smult)
        run = ht_sparse_linear(data, budget, sched, w1, algo_stream)
    else:
        w1 = gen_wstar_sparse(d, s_star, dgen)
        budget = PrivacyBudget(eps, delta_for(n, cfg.delta_rule))
        sched = default_sparse_opt_schedule(n, eps, s_star, cfg.c2)
        run = ht_sparse_opt(data, cfg.loss, budget, sched, w1, algo_stream)

    _check_budget(run.accountant, budget.epsilon, budget.delta)
    return data, w_star, run


def _real_trial(cfg, data, w_base, n, d, eps, s_star, data_stream, algo_stream):
    dgen = data_stream.generator()
    if cfg.algorithm == "fw":
        w0 = random_l1_ball_point(d, dgen, cfg.radius)
        budget = PrivacyBudget(eps, 0.0)
        run = ht_dp_fw(
            data, cfg.loss, L1BallDomain(d, cfg.radius), budget,
            default_fw_schedule(n, eps), w0, algo_stream,
        )
    elif cfg.algorithm == "lasso":
        w0 = random_l1_ball_point(d, dgen, cfg.radius)
        budget = PrivacyBudget(eps, delta_for(n, cfg.delta_rule))
        run = trunc_dp_fw_lasso(
            data, L1BallDomain(d, cfg.radius), budget,
            default_lasso_schedule(n, eps), w0, algo_stream,
        )
    elif cfg.algorithm == "sparse_linear":
        w1 = gen_wstar_sparse(d, s_star, dgen)
        budget = PrivacyBudget(eps, delta_for(n, cfg.delta_rule))
        sched = default_sparse_linear_schedule(n, eps, s_star, cfg.smult)
        run = ht_sparse_linear(data, budget, sched, w1, algo_stream)
    else:
        w1 = gen_wstar_sparse(d, s_star, dgen)
        budget = PrivacyBudget(eps, delta_for(n, cfg.delta_rule))
        sched = default_sparse_opt_schedule(n, eps, s_star, cfg.c2)
        run = ht_sparse_opt(data, cfg.loss, budget, sched, w1, algo_stream)
    _check_budget(run.accountant, budget.epsilon, budget.delta)
    return data, w_base, run


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every grid point for the configured number of trials.

    Grid points expand as nested loops over (n, d, eps, s_star) in that order.
    Numeric blow-ups inside a trial are recorded as failed trials and excluded
    from the means; they never abort the grid. The accountant of every run is
    checked against the declared budget with zero tolerance.
    """
    real_data = None
    baselines: dict = {}
    if cfg.data_path is not None:
        real_data = load_csv(cfg.data_path, cfg.target_column, cfg.max_rows)

    records: list = []
    aggregates: list = []
    points = list(product(cfg.n_grid, cfg.d_grid, cfg.eps_grid, cfg.sstar_grid))
    for n, d, eps, s_star in points:
        point_records = []
        for trial in range(cfg.trials):
            data_stream = RandomStream(cfg.seed, 2 * trial)
            algo_stream = RandomStream(cfg.seed, 2 * trial + 1)
            t0 = time.perf_counter()
            error = None
            excess = math.nan
            series: list = []
            try:
                if real_data is None:
                    data, w_star, run = _synthetic_trial(
                        cfg, n, d, eps, s_star, data_stream, algo_stream
                    )
                else:
                    if n > real_data.n:
                        raise ValueError(f"n={n} exceeds the {real_data.n} available rows")
                    data = real_data.rows(0, n)
                    if data.d != d:
                        raise ValueError(f"d={d} does not match the data dimension {data.d}")
                    key = (n, s_star)
                    if key not in baselines:
                        if cfg.algorithm in ("fw", "lasso"):
                            baselines[key] = polytope_baseline(
                                data, cfg.loss, cfg.radius, cfg.baseline_iterations
                            )
                        else:
                            baselines[key] = sparse_baseline(
                                data, cfg.loss, max(1, s_star), cfg.baseline_iterations
                            )
                    data, w_star, run = _real_trial(
                        cfg, data, baselines[key], n, d, eps, s_star, data_stream, algo_stream
                    )
                base_risk = empirical_risk(cfg.loss, w_star, data)
                risks = risk_series(cfg.loss, data, run.iterates[1:])
                excess = float(risks[-1] - base_risk)
                series = [float(r - base_risk) for r in risks]
                if not math.isfinite(excess):
                    error = "non-finite excess risk"
                    excess = math.nan
                    series = []
            except (DataError, FloatingPointError, OverflowError) as exc:
                error = f"{type(exc).__name__}: {exc}"
            wall_ms = (time.perf_counter() - t0) * 1000.0
            rec = TrialRecord(
                cfg.algorithm, n, d, eps, s_star, trial, excess, series, wall_ms, error
            )
            records.append(rec)
            point_records.append(rec)

        good = [r for r in point_records if r.error is None]
        mean_excess = float(np.mean([r.excess_risk for r in good])) if good else math.nan
        mean_wall = float(np.mean([r.wall_ms for r in point_records]))
        aggregates.append(
            AggregateRecord(
                cfg.algorithm, n, d, eps, s_star, mean_excess, mean_wall,
                len(point_records), len(point_records) - len(good),
            )
        )
    return ExperimentResult(records, aggregates)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def write_results_csv(records, path, aggregates=None) -> None:
    """Write one row per trial, then one AGG row per grid point when
    aggregates are given. Failed trials appear with excess risk "nan" and are
    excluded from the AGG means; grid points with failures additionally get a
    FAILED row carrying the failure count. Written atomically.
    """
    lines = ["algorithm,n,d,epsilon,s_star,trial,excess_risk,wall_ms"]
    for r in records:
        lines.append(
            f"{r.algorithm},{r.n},{r.d},{_fmt(r.epsilon)},{r.s_star},{r.trial},"
            f"{_fmt(r.excess_risk)},{_fmt(r.wall_ms)}"
        )
    for a in aggregates or []:
        lines.append(
            f"{a.algorithm},{a.n},{a.d},{_fmt(a.epsilon)},{a.s_star},AGG,"
            f"{_fmt(a.mean_excess_risk)},{_fmt(a.mean_wall_ms)}"
        )
        if a.n_failed:
            lines.append(
                f"{a.algorithm},{a.n},{a.d},{_fmt(a.epsilon)},{a.s_star},FAILED,"
                f"{a.n_failed},0"
            )
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def collect_series(aggregates):
    """Group aggregates into plot series.

    The x variable is the first of (epsilon, n, s_star) that actually varies;
    one series is formed per remaining varying (d, s_star, ...) combination.
    Returns (x_name, [(label, [(x, y), ...]), ...]).
    """
    if not aggregates:
        raise ValueError("no aggregates to plot")
    values = {
        "epsilon": sorted({a.epsilon for a in aggregates}),
        "n": sorted({a.n for a in aggregates}),
        "s_star": sorted({a.s_star for a in aggregates}),
        "d": sorted({a.d for a in aggregates}),
    }
    x_name = next(
        (name for name in ("epsilon", "n", "s_star") if len(values[name]) > 1), "n"
    )
    label_fields = [
        name for name in ("d", "s_star", "epsilon", "n")
        if name != x_name and len(values[name]) > 1
    ] or ["d"]

    series: dict = {}
    for a in aggregates:
        key = tuple(getattr(a, f) for f in label_fields)
        series.setdefault(key, []).append((getattr(a, x_name), a.mean_excess_risk))
    out = []
    for key in sorted(series):
        label = " ".join(f"{f}={v:g}" for f, v in zip(label_fields, key))
        out.append((label, sorted(series[key])))
    return x_name, out


def emit_plot_series(aggregates, path) -> None:
    """Write plain two-column blocks (x, mean excess risk), one block per
    series, separated by blank lines; block headers are comment lines."""
    x_name, series = collect_series(aggregates)
    blocks = []
    for label, pts in series:
        rows = "\n".join(f"{_fmt(float(x))} {_fmt(float(y))}" for x, y in pts)
        blocks.append(f"# series: {label} (x = {x_name})\n{rows}")
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n\n".join(blocks) + "\n")
    os.replace(tmp, path)
