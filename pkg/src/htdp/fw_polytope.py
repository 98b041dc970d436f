"""Frank-Wolfe solvers over polytope domains.

Two private variants are provided: a pure-DP solver that robustly estimates
the gradient on a fresh data part each iteration and picks a vertex with the
exponential mechanism, and an (epsilon, delta)-DP least-squares solver that
clamps the data once and reuses all of it every step under advanced
composition. A noise-free solver serves as the baseline optimum finder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, L1BallDomain, PolytopeDomain, PrivacyBudget, RandomStream, split_dataset
from .losses import LossModel, gradient_rows, mean_gradient
from .mechanisms import BudgetAccountant, ScoredCandidates, exponential_select
from .robust_mean import CatoniParams, replacement_sensitivity

__all__ = [
    "FWConfig",
    "FWRun",
    "ht_dp_fw",
    "trunc_dp_fw_lasso",
    "nonprivate_fw",
    "default_fw_schedule",
    "default_lasso_schedule",
    "analysis_schedule_fw",
    "analysis_schedule_robust_regression",
]


@dataclass(frozen=True)
class FWConfig:
    """Iteration budget, estimator parameters and step schedule.

    ``step_schedule`` is "harmonic" (step 2/(t+2) at 1-based iteration t) or
    "constant" with ``step_constant``. ``catoni`` configures the robust
    gradient estimator; ``truncation_K`` the data clamping of the least-squares
    variant. ``tau`` carries the coordinatewise second-moment bound for the
    analysis-driven schedules. ``exact_selection`` replaces the exponential
    mechanism by exact argmax (noise-free debug mode, not private).
    """

    iterations: int
    catoni: CatoniParams | None = None
    truncation_K: float | None = None
    step_schedule: str = "harmonic"
    step_constant: float | None = None
    tau: float | None = None
    keep_iterates: bool = True
    exact_selection: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iteration count must be a positive integer")
        if self.step_schedule not in ("harmonic", "constant"):
            raise ValueError(f"unknown step schedule {self.step_schedule!r}")
        if self.step_schedule == "constant":
            if self.step_constant is None or not 0.0 < self.step_constant <= 1.0:
                raise ValueError("constant schedule needs step_constant in (0, 1]")
        if self.truncation_K is not None and not self.truncation_K > 0.0:
            raise ValueError("truncation threshold must be positive")

    def step(self, t: int) -> float:
        """Combination weight used at 1-based iteration t."""
        if self.step_schedule == "harmonic":
            return 2.0 / (t + 2.0)
        return self.step_constant


@dataclass
class FWRun:
    """Solver output: final point, iterate trajectory (w^0 ... w^T when kept),
    the budget accountant, and the data row ranges touched per iteration."""

    w: np.ndarray
    iterates: list
    accountant: BudgetAccountant
    part_rows: list

    def __iter__(self):
        return iter((self.w, self.iterates))


def _check_start_point(domain: PolytopeDomain, w0: np.ndarray) -> None:
    inside = domain.contains(w0)
    if inside is False:
        raise ValueError("starting point lies outside the constraint set")


def ht_dp_fw(
    data: Dataset,
    model: LossModel,
    domain: PolytopeDomain,
    budget: PrivacyBudget,
    cfg: FWConfig,
    w0,
    rng: RandomStream,
) -> FWRun:
    """Pure-DP Frank-Wolfe with robust gradient estimates.

    The data is split into ``cfg.iterations`` disjoint parts. Iteration t
    estimates the gradient coordinatewise on part t with the robust mean at
    ``cfg.catoni``, scores every vertex v by -<v, g>, draws a vertex with the
    exponential mechanism at the full epsilon (parts are disjoint, so the
    per-iteration mechanisms compose in parallel) and takes the convex step.
    ``budget.delta`` may be zero: the guarantee is pure epsilon-DP.
    """
    if cfg.catoni is None:
        raise ValueError("robust estimator parameters are required")
    T = cfg.iterations
    if T > data.n:
        raise ValueError(f"cannot run {T} iterations on {data.n} rows")
    if domain.n_vertices < 1:
        raise ValueError("vertex set is empty")
    w = np.asarray(w0, dtype=float).copy()
    _check_start_point(domain, w)

    parts = split_dataset(data, T)
    m = data.n // T
    sensitivity = domain.l1_diameter * replacement_sensitivity(m, cfg.catoni.scale)

    acct = BudgetAccountant(budget, mode="single")
    if cfg.exact_selection:
        acct.mark_non_private()
    else:
        acct.charge(budget.epsilon, budget.delta)

    gen = rng.generator()
    iterates = [w.copy()] if cfg.keep_iterates else []
    part_rows = []
    from .robust_mean import robust_gradient_vector

    for t in range(1, T + 1):
        part = parts[t - 1]
        part_rows.append(((t - 1) * m, t * m))
        G = gradient_rows(model, w, part.features, part.responses)
        g = robust_gradient_vector(G, cfg.catoni)
        scores = domain.linear_scores(g)
        if cfg.exact_selection:
            idx = int(np.argmax(scores))
        else:
            idx = exponential_select(
                ScoredCandidates(scores, sensitivity), budget.epsilon, gen
            )
        eta = cfg.step(t)
        w = (1.0 - eta) * w + eta * domain.vertex(idx)
        if cfg.keep_iterates:
            iterates.append(w.copy())

    return FWRun(w, iterates, acct, part_rows)


def trunc_dp_fw_lasso(
    data: Dataset,
    domain: PolytopeDomain,
    budget: PrivacyBudget,
    cfg: FWConfig,
    w0,
    rng: RandomStream,
) -> FWRun:
    """(epsilon, delta)-DP Frank-Wolfe for least squares on clamped data.

    Every entry of the data is clamped to [-K, K] once. Each of the T steps
    computes the exact least-squares gradient on the full clamped data, runs
    the exponential mechanism at the advanced-composition per-step budget
    epsilon / (2*sqrt(2*T*ln(1/delta))) with score sensitivity
    8 * l1_diameter * K^2 / n, and takes the convex step.
    """
    if cfg.truncation_K is None:
        raise ValueError("truncation threshold is required")
    if budget.delta == 0.0:
        raise ValueError("this solver requires delta > 0")
    T = cfg.iterations
    if domain.n_vertices < 1:
        raise ValueError("vertex set is empty")
    w = np.asarray(w0, dtype=float).copy()
    _check_start_point(domain, w)

    K = cfg.truncation_K
    from .core import shrink_dataset

    shrunk = shrink_dataset(data, K)
    X, y = shrunk.features, shrunk.responses
    n = shrunk.n
    sensitivity = 8.0 * domain.l1_diameter * K * K / n

    acct = BudgetAccountant(budget, mode="advanced", steps=T)
    eps_step = acct.step_epsilon()
    if cfg.exact_selection:
        acct.mark_non_private()

    gen = rng.generator()
    iterates = [w.copy()] if cfg.keep_iterates else []

    for t in range(1, T + 1):
        g = 2.0 / n * (X.T @ (X @ w - y))
        scores = domain.linear_scores(g)
        if cfg.exact_selection:
            idx = int(np.argmax(scores))
        else:
            idx = exponential_select(ScoredCandidates(scores, sensitivity), eps_step, gen)
            acct.charge(eps_step, 0.0)
        eta = cfg.step(t)
        w = (1.0 - eta) * w + eta * domain.vertex(idx)
        if cfg.keep_iterates:
            iterates.append(w.copy())

    return FWRun(w, iterates, acct, [])


def nonprivate_fw(
    data: Dataset,
    model: LossModel,
    domain: PolytopeDomain,
    T: int,
    w0,
) -> FWRun:
    """Noise-free Frank-Wolfe: exact gradient, exact best vertex, harmonic
    steps. Used to produce the baseline optimum for excess-risk measurement."""
    if T < 1:
        raise ValueError("iteration count must be a positive integer")
    w = np.asarray(w0, dtype=float).copy()
    _check_start_point(domain, w)
    X, y = data.features, data.responses
    iterates = [w.copy()]
    acct = BudgetAccountant(PrivacyBudget(1.0))
    acct.mark_non_private()
    for t in range(1, T + 1):
        g = mean_gradient(model, w, X, y)
        idx = int(np.argmax(domain.linear_scores(g)))
        eta = 2.0 / (t + 2.0)
        w = (1.0 - eta) * w + eta * domain.vertex(idx)
        iterates.append(w.copy())
    return FWRun(w, iterates, acct, [])


def _stable_floor(x: float) -> int:
    # guards against 1000**(1/3) = 9.999... flooring one short of the intent
    return int(math.floor(x * (1.0 + 1e-12)))


def default_fw_schedule(n: int, epsilon: float) -> FWConfig:
    """Experiment defaults for the robust-gradient solver:
    T = floor((n*eps)^(1/3)) (at least 1), estimator scale floor(n*eps),
    smoothing precision 1, harmonic steps."""
    ne = n * epsilon
    if ne < 1.0:
        raise ValueError("n * epsilon must be at least 1")
    T = max(1, _stable_floor(ne ** (1.0 / 3.0)))
    return FWConfig(
        iterations=T,
        catoni=CatoniParams(scale=float(_stable_floor(ne)), beta=1.0),
        step_schedule="harmonic",
    )


def default_lasso_schedule(n: int, epsilon: float) -> FWConfig:
    """Experiment defaults for the clamped least-squares solver:
    T = floor((n*eps)^(2/5)) (at least 1), K = (n*eps)^(1/4) / T^(1/8),
    harmonic steps."""
    ne = n * epsilon
    if ne < 1.0:
        raise ValueError("n * epsilon must be at least 1")
    T = max(1, _stable_floor(ne ** 0.4))
    K = ne ** 0.25 / T ** 0.125
    return FWConfig(iterations=T, truncation_K=K, step_schedule="harmonic")


def analysis_schedule_fw(
    n: int,
    epsilon: float,
    alpha: float,
    tau: float,
    n_vertices: int,
    d: int,
    zeta: float = 0.05,
    beta: float = 1.0,
) -> FWConfig:
    """Rate-driven schedule with explicit constants left at 1: the caller
    supplies the smoothness alpha and moment bound tau. T grows like
    (n*eps*alpha^2 / (tau*log(|V|d/zeta)))^(1/3) and the estimator scale like
    sqrt(n*eps*tau / (T*log(|V|dT/zeta)))."""
    ne = n * epsilon
    T = max(1, int((ne * alpha**2 / (tau * math.log(n_vertices * d / zeta))) ** (1.0 / 3.0)))
    scale = math.sqrt(ne * tau / (T * math.log(n_vertices * d * T / zeta)))
    return FWConfig(
        iterations=T,
        catoni=CatoniParams(scale=scale, beta=beta),
        step_schedule="harmonic",
        tau=tau,
    )


def analysis_schedule_robust_regression(
    n: int,
    epsilon: float,
    d: int,
    zeta: float = 0.05,
    beta: float = 1.0,
) -> FWConfig:
    """Rate-driven schedule for the bounded redescending regression loss:
    T ~ sqrt(n*eps / log(d/zeta)), constant step 1/sqrt(T), estimator scale
    sqrt(n*eps / (T*log(dT/zeta)))."""
    ne = n * epsilon
    T = max(1, int(math.sqrt(ne / math.log(d / zeta))))
    scale = math.sqrt(ne / (T * math.log(d * T / zeta)))
    return FWConfig(
        iterations=T,
        catoni=CatoniParams(scale=scale, beta=beta),
        step_schedule="constant",
        step_constant=1.0 / math.sqrt(T),
    )
