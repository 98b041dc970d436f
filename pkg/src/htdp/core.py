"""Shared data model: datasets, privacy budgets, constraint domains and RNG streams.

Everything here is a plain immutable value. Arrays handed to these types are
treated as frozen; do not mutate them after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DataError",
    "Dataset",
    "PrivacyBudget",
    "PolytopeDomain",
    "L1BallDomain",
    "SparsityDomain",
    "RandomStream",
    "split_dataset",
    "project_l2_ball",
    "shrink_scalar",
    "shrink_dataset",
]


class DataError(ValueError):
    """An input file or dataset failed to parse or validate."""


@dataclass(frozen=True)
class Dataset:
    """Labelled sample: feature matrix of shape (n, d) and n scalar responses."""

    features: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.responses, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError(f"features must be a nonempty 2-d matrix, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(
                f"responses must be a vector with one entry per row: {y.shape} vs {X.shape}"
            )
        if not np.isfinite(X).all() or not np.isfinite(y).all():
            raise DataError("dataset contains non-finite entries")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def rows(self, lo: int, hi: int) -> "Dataset":
        return Dataset(self.features[lo:hi], self.responses[lo:hi])


@dataclass(frozen=True)
class PrivacyBudget:
    """Declared (epsilon, delta) budget plus what has been spent so far.

    ``delta == 0`` is the pure-DP mode. Spending is driven exclusively by the
    accountant in :mod:`htdp.mechanisms`; the budget itself is a value.
    """

    epsilon: float
    delta: float = 0.0
    spent_epsilon: float = 0.0
    spent_delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0.0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")
        if not (0.0 <= self.delta < 1.0):
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if self.spent_epsilon < 0.0 or self.spent_delta < 0.0:
            raise ValueError("spent totals must be nonnegative")
        if self.spent_epsilon > self.epsilon or self.spent_delta > self.delta:
            raise ValueError("spent totals exceed the declared budget")


class PolytopeDomain:
    """Constraint set given as the convex hull of an explicit vertex list.

    ``l1_diameter`` is the largest l1 distance between two vertices. When a
    stored value is supplied it must match the recomputed one to 1e-9 relative.
    """

    def __init__(self, vertices, l1_diameter: float | None = None):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] < 1:
            raise ValueError("vertex set must be a nonempty (n_vertices, d) matrix")
        if not np.isfinite(V).all():
            raise ValueError("vertices contain non-finite entries")
        self._vertices = V
        computed = self.recompute_l1_diameter()
        if l1_diameter is None:
            l1_diameter = computed
        elif abs(l1_diameter - computed) > 1e-9 * max(1.0, abs(computed)):
            raise ValueError(
                f"stored l1 diameter {l1_diameter} does not match recomputed {computed}"
            )
        if not l1_diameter > 0.0:
            raise ValueError("l1 diameter must be positive")
        self.l1_diameter = float(l1_diameter)

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def n_vertices(self) -> int:
        return self._vertices.shape[0]

    @property
    def dim(self) -> int:
        return self._vertices.shape[1]

    def recompute_l1_diameter(self) -> float:
        from scipy.spatial.distance import cdist

        V = self._vertices
        if V.shape[0] == 1:
            return 0.0
        return float(cdist(V, V, metric="cityblock").max())

    def vertex(self, i: int) -> np.ndarray:
        return self._vertices[i]

    def linear_scores(self, g: np.ndarray) -> np.ndarray:
        """Score every vertex v by -<v, g> (higher favours descent directions)."""
        return -(self._vertices @ g)

    def contains(self, w: np.ndarray, tol: float = 1e-9) -> bool | None:
        """Membership test; only decidable cheaply for l1 balls, else None."""
        return None


class L1BallDomain(PolytopeDomain):
    """The l1-norm ball of a given radius, with its 2d vertices kept implicit.

    Vertex scores are computed in O(d) from the gradient coordinates; the full
    vertex matrix is only materialised on demand.
    """

    def __init__(self, d: int, radius: float = 1.0):
        if d < 1:
            raise ValueError("dimension must be positive")
        if not radius > 0.0:
            raise ValueError("radius must be positive")
        self._d = int(d)
        self.radius = float(radius)
        self._vertices_cache = None
        self.l1_diameter = 2.0 * self.radius

    @property
    def vertices(self) -> np.ndarray:
        if self._vertices_cache is None:
            V = np.zeros((2 * self._d, self._d))
            idx = np.arange(self._d)
            V[idx, idx] = self.radius
            V[self._d + idx, idx] = -self.radius
            self._vertices_cache = V
        return self._vertices_cache

    @property
    def n_vertices(self) -> int:
        return 2 * self._d

    @property
    def dim(self) -> int:
        return self._d

    def recompute_l1_diameter(self) -> float:
        return 2.0 * self.radius

    def vertex(self, i: int) -> np.ndarray:
        v = np.zeros(self._d)
        if i < self._d:
            v[i] = self.radius
        else:
            v[i - self._d] = -self.radius
        return v

    def linear_scores(self, g: np.ndarray) -> np.ndarray:
        return np.concatenate([-self.radius * g, self.radius * g])

    def contains(self, w: np.ndarray, tol: float = 1e-9) -> bool:
        return float(np.sum(np.abs(w))) <= self.radius + tol


@dataclass(frozen=True)
class SparsityDomain:
    """Sparsity constraint: target sparsity, working sparsity and an l2 radius."""

    target_sparsity: int
    working_sparsity: int
    l2_radius: float = 1.0

    def __post_init__(self):
        if self.target_sparsity < 1:
            raise ValueError("target sparsity must be a positive integer")
        if self.working_sparsity < self.target_sparsity:
            raise ValueError("working sparsity must be at least the target sparsity")
        if not self.l2_radius > 0.0:
            raise ValueError("l2 radius must be positive")

    def validate_for(self, data: Dataset) -> None:
        if self.working_sparsity > data.d:
            raise ValueError(
                f"working sparsity {self.working_sparsity} exceeds dimension {data.d}"
            )


@dataclass(frozen=True)
class RandomStream:
    """Deterministic randomness source identified by (seed, stream_id).

    ``generator()`` returns a fresh counter-based generator each call, so the
    same stream always replays the identical draw sequence. Distinct stream ids
    give statistically independent streams. The underlying bit generator is
    pinned to Philox so the streams are stable across sessions.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, stream_id)


def split_dataset(data: Dataset, parts: int) -> list[Dataset]:
    """Split into ``parts`` consecutive blocks of floor(n/parts) rows each.

    Leftover rows beyond ``parts * floor(n/parts)`` are discarded.
    """
    if parts <= 0:
        raise ValueError(f"number of parts must be positive, got {parts}")
    if parts > data.n:
        raise ValueError(f"cannot split {data.n} rows into {parts} parts")
    m = data.n // parts
    return [data.rows(i * m, (i + 1) * m) for i in range(parts)]


def project_l2_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l2 ball of the given radius."""
    if not radius > 0.0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm <= radius:
        return v.copy()
    return v * (radius / norm)


def shrink_scalar(x: float, K: float) -> float:
    """sign(x) * min(|x|, K)."""
    if not K > 0.0:
        raise ValueError("shrink threshold must be positive")
    return float(np.clip(x, -K, K))


def shrink_dataset(data: Dataset, K: float) -> Dataset:
    """Clamp every feature entry and every response to [-K, K]."""
    if not K > 0.0:
        raise ValueError("shrink threshold must be positive")
    return Dataset(np.clip(data.features, -K, K), np.clip(data.responses, -K, K))
