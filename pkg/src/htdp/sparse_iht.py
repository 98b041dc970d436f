"""Sparse learners built on noisy top-s selection.

``ht_sparse_linear`` runs gradient steps for least squares on clamped data,
keeping iterates s-sparse via peeling and inside the unit l2 ball.
``ht_sparse_opt`` handles general losses by estimating the gradient robustly
instead of clamping the data; it performs no l2 projection. Both partition the
data so each iteration touches a fresh disjoint part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, PrivacyBudget, RandomStream, project_l2_ball, shrink_dataset, split_dataset
from .losses import LossModel, gradient_rows, mean_gradient
from .mechanisms import BudgetAccountant, peeling
from .robust_mean import CatoniParams, robust_gradient_vector

def _stable_floor(x: float) -> int:
    # guards against powers like 1000**(1/3) flooring one short of the intent
    return int(math.floor(x * (1.0 + 1e-12)))


__all__ = [
    "IHTConfig",
    "IHTRun",
    "ht_sparse_linear",
    "ht_sparse_opt",
    "nonprivate_iht",
    "default_sparse_linear_schedule",
    "default_sparse_opt_schedule",
    "analysis_schedule_sparse_linear",
    "analysis_schedule_sparse_opt",
]


@dataclass(frozen=True)
class IHTConfig:
    """Iteration budget, working sparsity, step size and noise calibration.

    ``truncation_K`` clamps the data for the linear-regression solver;
    ``catoni`` configures the robust gradient estimator of the general solver.
    ``noiseless`` disables all privacy noise and swaps in exact mean gradients
    (debug mode; the run is flagged non-private and charges nothing).
    """

    iterations: int
    working_sparsity: int
    step: float
    truncation_K: float | None = None
    catoni: CatoniParams | None = None
    keep_iterates: bool = True
    noiseless: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iteration count must be a positive integer")
        if self.working_sparsity < 1:
            raise ValueError("working sparsity must be a positive integer")
        if not self.step > 0.0:
            raise ValueError("step size must be positive")
        if self.truncation_K is not None and not self.truncation_K > 0.0:
            raise ValueError("truncation threshold must be positive")


@dataclass
class IHTRun:
    w: np.ndarray
    iterates: list
    accountant: BudgetAccountant
    part_rows: list

    def __iter__(self):
        return iter((self.w, self.iterates))


def _check_sparse_start(w1: np.ndarray, s: int, unit_ball: bool) -> None:
    if int(np.count_nonzero(w1)) > s:
        raise ValueError(f"starting point has more than {s} nonzero coordinates")
    if unit_ball and float(np.linalg.norm(w1)) > 1.0 + 1e-9:
        raise ValueError("starting point must lie in the unit l2 ball")


def _validate_private_params(budget: PrivacyBudget, s: int, d: int, T: int, n: int) -> None:
    if s > d:
        raise ValueError(f"working sparsity {s} exceeds dimension {d}")
    if T > n:
        raise ValueError(f"cannot split {n} rows into {T} parts")
    if not (0.0 < budget.delta < 1.0):
        raise ValueError("this solver requires delta in (0, 1)")


def ht_sparse_linear(
    data: Dataset,
    budget: PrivacyBudget,
    cfg: IHTConfig,
    w1,
    rng: RandomStream,
) -> IHTRun:
    """(epsilon, delta)-DP sparse linear regression on clamped data.

    The data is clamped entrywise to [-K, K] and split into T disjoint parts
    of m rows. Iteration t takes a gradient step
    w - (step/m) * sum x (<x, w> - y) on part t, keeps s coordinates via
    peeling with noise multiplier 2*K^2*step*(sqrt(s)+1)/m, and projects onto
    the unit l2 ball. Every iterate is s-sparse with norm at most 1.
    """
    if cfg.truncation_K is None:
        raise ValueError("truncation threshold is required")
    s, T, eta = cfg.working_sparsity, cfg.iterations, cfg.step
    w = np.asarray(w1, dtype=float).copy()
    _check_sparse_start(w, s, unit_ball=True)
    if not cfg.noiseless:
        _validate_private_params(budget, s, data.d, T, data.n)
    elif s > data.d or T > data.n:
        raise ValueError("sparsity or iteration count incompatible with the data")

    K = cfg.truncation_K
    parts = split_dataset(shrink_dataset(data, K), T)
    m = data.n // T
    lam = 0.0 if cfg.noiseless else 2.0 * K * K * eta * (math.sqrt(s) + 1.0) / m

    acct = BudgetAccountant(budget, mode="single")
    if cfg.noiseless:
        acct.mark_non_private()
    else:
        acct.charge(budget.epsilon, budget.delta)

    gen = rng.generator()
    iterates = [w.copy()] if cfg.keep_iterates else []
    part_rows = []

    for t in range(T):
        part = parts[t]
        part_rows.append((t * m, (t + 1) * m))
        X, y = part.features, part.responses
        grad = X.T @ (X @ w - y) / m
        half = w - eta * grad
        w = peeling(half, s, budget.epsilon, budget.delta, lam, gen)
        w = project_l2_ball(w, 1.0)
        if cfg.keep_iterates:
            iterates.append(w.copy())

    return IHTRun(w, iterates, acct, part_rows)


def ht_sparse_opt(
    data: Dataset,
    model: LossModel,
    budget: PrivacyBudget,
    cfg: IHTConfig,
    w1,
    rng: RandomStream,
) -> IHTRun:
    """(epsilon, delta)-DP sparsity-constrained optimisation with robust
    gradients.

    Iteration t estimates the gradient coordinatewise on disjoint part t with
    the robust mean at scale k, steps w - step * g, and keeps s coordinates
    via peeling with noise multiplier 4*k*sqrt(2)*step/m. No l2 projection is
    applied.
    """
    if cfg.catoni is None and not cfg.noiseless:
        raise ValueError("robust estimator parameters are required")
    s, T, eta = cfg.working_sparsity, cfg.iterations, cfg.step
    w = np.asarray(w1, dtype=float).copy()
    _check_sparse_start(w, s, unit_ball=False)
    if not cfg.noiseless:
        _validate_private_params(budget, s, data.d, T, data.n)
    elif s > data.d or T > data.n:
        raise ValueError("sparsity or iteration count incompatible with the data")

    parts = split_dataset(data, T)
    m = data.n // T
    if cfg.noiseless:
        lam = 0.0
    else:
        lam = 4.0 * cfg.catoni.scale * math.sqrt(2.0) * eta / m

    acct = BudgetAccountant(budget, mode="single")
    if cfg.noiseless:
        acct.mark_non_private()
    else:
        acct.charge(budget.epsilon, budget.delta)

    gen = rng.generator()
    iterates = [w.copy()] if cfg.keep_iterates else []
    part_rows = []

    for t in range(T):
        part = parts[t]
        part_rows.append((t * m, (t + 1) * m))
        if cfg.noiseless:
            g = mean_gradient(model, w, part.features, part.responses)
        else:
            G = gradient_rows(model, w, part.features, part.responses)
            g = robust_gradient_vector(G, cfg.catoni)
        half = w - eta * g
        w = peeling(half, s, budget.epsilon, budget.delta, lam, gen)
        if cfg.keep_iterates:
            iterates.append(w.copy())

    return IHTRun(w, iterates, acct, part_rows)


def nonprivate_iht(
    data: Dataset,
    model: LossModel,
    T: int,
    s: int,
    step: float,
    w1,
) -> IHTRun:
    """Plain iterative hard thresholding on the full data: gradient step,
    keep the s largest-magnitude coordinates (ties to the lowest index).
    Baseline optimum finder for sparse problems."""
    if T < 1:
        raise ValueError("iteration count must be a positive integer")
    if not 1 <= s <= data.d:
        raise ValueError(f"sparsity must satisfy 1 <= s <= d, got s={s}")
    w = np.asarray(w1, dtype=float).copy()
    X, y = data.features, data.responses
    iterates = [w.copy()]
    acct = BudgetAccountant(PrivacyBudget(1.0))
    acct.mark_non_private()
    for _ in range(T):
        w = w - step * mean_gradient(model, w, X, y)
        keep = np.argsort(-np.abs(w), kind="stable")[:s]
        thresholded = np.zeros_like(w)
        thresholded[keep] = w[keep]
        w = thresholded
        iterates.append(w.copy())
    return IHTRun(w, iterates, acct, [])


def default_sparse_linear_schedule(
    n: int, epsilon: float, s_star: int, c_mult: int = 2
) -> IHTConfig:
    """Experiment defaults for sparse linear regression: working sparsity
    c_mult * s_star, T = floor(ln n) (at least 1),
    K = (n*eps / (s*T))^(1/4), step 0.5."""
    if n < 3:
        raise ValueError("need n >= 3")
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    if s_star < 1 or c_mult < 1:
        raise ValueError("sparsity and its multiplier must be positive integers")
    s = c_mult * s_star
    T = max(1, _stable_floor(math.log(n)))
    K = (n * epsilon / (s * T)) ** 0.25
    return IHTConfig(iterations=T, working_sparsity=s, step=0.5, truncation_K=K)


def default_sparse_opt_schedule(
    n: int, epsilon: float, s_star: int, c2: int = 1
) -> IHTConfig:
    """Experiment defaults for sparsity-constrained optimisation: working
    sparsity 2 * s_star, T = floor(ln n), estimator scale c2 * n * eps with
    smoothing precision 1, step 0.5."""
    if n < 3:
        raise ValueError("need n >= 3")
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    if s_star < 1 or c2 < 1:
        raise ValueError("sparsity and the scale multiplier must be positive integers")
    s = 2 * s_star
    T = max(1, _stable_floor(math.log(n)))
    return IHTConfig(
        iterations=T,
        working_sparsity=s,
        step=0.5,
        catoni=CatoniParams(scale=float(c2) * n * epsilon, beta=1.0),
    )


def analysis_schedule_sparse_linear(
    n: int,
    epsilon: float,
    s_star: int,
    gamma: float,
    mu: float,
) -> IHTConfig:
    """Rate-driven schedule with caller-supplied curvature bounds gamma (upper)
    and mu (lower): s = ceil(72 (gamma/mu)^2 s*), T ~ (gamma/mu) ln n,
    K = (n*eps / (s*T))^(1/4), step 2/(3*gamma)."""
    kappa = gamma / mu
    s = int(math.ceil(72.0 * kappa * kappa * s_star))
    T = max(1, int(kappa * math.log(n)))
    K = (n * epsilon / (s * T)) ** 0.25
    return IHTConfig(iterations=T, working_sparsity=s, step=2.0 / (3.0 * gamma), truncation_K=K)


def analysis_schedule_sparse_opt(
    n: int,
    epsilon: float,
    s_star: int,
    gamma: float,
    mu: float,
    tau: float,
    beta: float = 1.0,
) -> IHTConfig:
    """Rate-driven schedule with caller-supplied curvature bounds: working
    sparsity ~ (gamma/mu)^2 s*, T ~ (gamma/mu) ln n, estimator scale
    sqrt(n*eps*tau), step 2/(3*gamma)."""
    kappa = gamma / mu
    s = max(s_star, int(math.ceil(kappa * kappa * s_star)))
    T = max(1, int(kappa * math.log(n)))
    return IHTConfig(
        iterations=T,
        working_sparsity=s,
        step=2.0 / (3.0 * gamma),
        catoni=CatoniParams(scale=math.sqrt(n * epsilon * tau), beta=beta),
    )
