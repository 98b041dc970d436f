"""Differential privacy primitives: Laplace noise, exponential-mechanism
selection, advanced-composition budgeting, noisy top-s selection (peeling) and
the budget accountant."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import PrivacyBudget, RandomStream

__all__ = [
    "BudgetExhaustedError",
    "ScoredCandidates",
    "laplace_sample",
    "exponential_select",
    "advanced_composition_step_budget",
    "peeling",
    "peeling_noise_scale",
    "BudgetAccountant",
]


class BudgetExhaustedError(RuntimeError):
    """A charge would push spending past the declared privacy budget."""


def as_generator(rng) -> np.random.Generator:
    """Accept either a RandomStream or an already-running Generator.

    A RandomStream is restarted from its seed; pass a Generator to continue an
    existing sequence.
    """
    if isinstance(rng, RandomStream):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class ScoredCandidates:
    """Candidate utilities for the exponential mechanism plus their sensitivity."""

    scores: np.ndarray
    sensitivity: float

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("scores must be a nonempty 1-d array")
        if not np.isfinite(s).all():
            raise ValueError("scores must be finite")
        if not (self.sensitivity > 0.0 and np.isfinite(self.sensitivity)):
            raise ValueError(f"sensitivity must be positive, got {self.sensitivity}")
        object.__setattr__(self, "scores", s)


def laplace_sample(scale: float, rng, size=None):
    """Draw from the two-sided Laplace distribution with density
    exp(-|x|/scale) / (2*scale). Scale 0 degenerates to the constant 0."""
    if scale < 0.0:
        raise ValueError(f"scale must be nonnegative, got {scale}")
    if scale == 0.0:
        return 0.0 if size is None else np.zeros(size)
    gen = as_generator(rng)
    out = gen.laplace(loc=0.0, scale=scale, size=size)
    return float(out) if size is None else out


def exponential_select(cands: ScoredCandidates, epsilon: float, rng) -> int:
    """Pick index i with probability proportional to
    exp(epsilon * score_i / (2 * sensitivity)).

    Probabilities are formed in the log domain with max subtraction, then the
    index is drawn by inverse CDF, so score spreads up to ~1e6 stay stable.
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    logits = (epsilon / (2.0 * cands.sensitivity)) * cands.scores
    logits = logits - logits.max()
    probs = np.exp(logits)
    probs /= probs.sum()
    gen = as_generator(rng)
    idx = int(np.searchsorted(np.cumsum(probs), gen.random(), side="right"))
    return min(idx, probs.size - 1)


def advanced_composition_step_budget(epsilon: float, delta: float, T: int):
    """Per-mechanism budget so that T adaptive mechanisms compose to an overall
    (epsilon, T*delta' + delta) guarantee:
    epsilon' = epsilon / (2*sqrt(2*T*ln(2/delta))), delta' = delta / T."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    eps_step = epsilon / (2.0 * math.sqrt(2.0 * T * math.log(2.0 / delta)))
    return eps_step, delta / T


def peeling_noise_scale(s: int, epsilon: float, delta: float, lam: float) -> float:
    """Laplace scale used in every peeling round: 2*lam*sqrt(3*s*ln(1/delta))/epsilon."""
    if lam == 0.0:
        return 0.0
    return 2.0 * lam * math.sqrt(3.0 * s * math.log(1.0 / delta)) / epsilon


def peeling(v, s: int, epsilon: float, delta: float, lam: float, rng) -> np.ndarray:
    """Noisy iterative top-s selection.

    Runs s rounds; each round draws a fresh Laplace noise vector and picks the
    unselected index maximising |v_j| + noise_j (ties break to the lowest
    index). The selected subvector is returned with one final fresh noise
    vector added; everything off the selected support is exactly 0.

    lam = 0 is the noise-free debug mode and reduces to exact top-s selection.
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    if not 1 <= s <= d:
        raise ValueError(f"sparsity must satisfy 1 <= s <= d, got s={s}, d={d}")
    if lam < 0.0:
        raise ValueError(f"noise multiplier must be nonnegative, got {lam}")
    if lam > 0.0:
        if not epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        if not (0.0 < delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
    scale = peeling_noise_scale(s, epsilon, delta, lam)
    gen = as_generator(rng)

    selected = np.zeros(d, dtype=bool)
    base = np.abs(v)
    for _ in range(s):
        noisy = base + laplace_sample(scale, gen, size=d)
        noisy[selected] = -np.inf
        selected[int(np.argmax(noisy))] = True

    out = np.zeros(d)
    final_noise = laplace_sample(scale, gen, size=d)
    out[selected] = v[selected] + (final_noise[selected] if scale > 0.0 else 0.0)
    return out


class BudgetAccountant:
    """Single-writer tracker of privacy spending against a declared budget.

    Two composition rules are supported:

    ``"single"``
        The declared budget is consumed by one charge. Used by the algorithms
        that partition the data: each iteration runs its mechanism on a
        disjoint part, so the per-iteration budgets compose in parallel to the
        single declared (epsilon, delta).

    ``"advanced"``
        Configured with a step count T. Exactly T pure-DP charges at
        epsilon / (2*sqrt(2*T*ln(1/delta))) recompose to the declared
        (epsilon, delta); the reported spend at completion equals the declared
        budget exactly.

    ``mark_non_private`` flags noise-free debug runs; such runs never charge.
    """

    def __init__(self, budget: PrivacyBudget, mode: str = "single", steps: int | None = None):
        if mode not in ("single", "advanced"):
            raise ValueError(f"unknown composition mode {mode!r}")
        if mode == "advanced":
            if steps is None or steps < 1:
                raise ValueError("advanced composition requires a positive step count")
            if not (0.0 < budget.delta < 1.0):
                raise ValueError("advanced composition requires delta in (0, 1)")
        self._declared = replace(budget, spent_epsilon=0.0, spent_delta=0.0)
        self._mode = mode
        self._steps = steps
        self._charged = 0
        self._spent_eps = 0.0
        self._spent_delta = 0.0
        self.non_private = False

    @property
    def declared(self) -> PrivacyBudget:
        return self._declared

    @property
    def mode(self) -> str:
        return self._mode

    def step_epsilon(self) -> float:
        """Per-step epsilon allowed under advanced composition."""
        if self._mode != "advanced":
            raise ValueError("per-step budget is only defined in advanced mode")
        b = self._declared
        return b.epsilon / (2.0 * math.sqrt(2.0 * self._steps * math.log(1.0 / b.delta)))

    def mark_non_private(self) -> None:
        self.non_private = True

    @property
    def steps_charged(self) -> int:
        return self._charged

    @property
    def spent(self) -> tuple[float, float]:
        """Privacy consumed so far under the composition rule in force."""
        b = self._declared
        if self._mode == "single":
            return self._spent_eps, self._spent_delta
        if self._charged == 0:
            return 0.0, 0.0
        if self._charged >= self._steps:
            return b.epsilon, b.delta
        eps = self.step_epsilon() * 2.0 * math.sqrt(
            2.0 * self._charged * math.log(1.0 / b.delta)
        )
        return eps, b.delta

    @property
    def budget(self) -> PrivacyBudget:
        eps, delta = self.spent
        return replace(self._declared, spent_epsilon=eps, spent_delta=delta)

    def charge(self, eps_step: float, delta_step: float = 0.0) -> PrivacyBudget:
        """Record one mechanism invocation; returns the updated budget.

        Raises BudgetExhaustedError when the charge would exceed the declared
        budget under the composition rule in force.
        """
        if eps_step < 0.0 or delta_step < 0.0:
            raise ValueError("step charges must be nonnegative")
        if eps_step == 0.0 and delta_step == 0.0:
            return self.budget
        b = self._declared
        if self._mode == "single":
            if self._charged >= 1:
                raise BudgetExhaustedError(
                    "single-charge budget already consumed; further mechanisms "
                    "would exceed the declared guarantee"
                )
            if eps_step > b.epsilon or delta_step > b.delta:
                raise BudgetExhaustedError(
                    f"charge ({eps_step}, {delta_step}) exceeds declared "
                    f"({b.epsilon}, {b.delta})"
                )
            self._spent_eps = eps_step
            self._spent_delta = delta_step
            self._charged = 1
            return self.budget
        # Advanced composition: pure-DP steps only; any per-step delta would
        # recompose past the declared total.
        if delta_step != 0.0:
            raise BudgetExhaustedError(
                "advanced-composition steps must be pure DP (delta_step = 0)"
            )
        allowed = self.step_epsilon()
        if eps_step > allowed * (1.0 + 1e-12):
            raise BudgetExhaustedError(
                f"step epsilon {eps_step} exceeds the advanced-composition "
                f"per-step budget {allowed}"
            )
        if self._charged >= self._steps:
            raise BudgetExhaustedError(
                f"all {self._steps} composed steps already charged"
            )
        self._charged += 1
        return self.budget
