"""Synthetic heavy-tailed data generation and CSV ingestion.

Feature and noise laws follow the benchmark conventions: a bare Gaussian
parameter is read as a variance (so "gaussian:5" has standard deviation
sqrt(5)) and a bare Laplace parameter as the scale; pass
``gaussian_interp="stddev"`` to the parsers to flip the Gaussian reading.
The log-gamma noise is the standard one, density exp(c*w - e^w) / Gamma(c)
on the real line (the log of a Gamma(c, 1) variate).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core import DataError, Dataset, project_l2_ball

__all__ = [
    "FeatureDistribution",
    "NoiseDistribution",
    "sample_noise",
    "gen_wstar_l1",
    "gen_wstar_sparse",
    "random_l1_ball_point",
    "gen_linear",
    "gen_logistic",
    "load_csv",
    "save_csv",
]

_TINY = 1e-300


@dataclass(frozen=True)
class FeatureDistribution:
    """Coordinate law of the feature vectors."""

    kind: str
    params: tuple

    @classmethod
    def lognormal(cls, mu: float, sigma: float) -> "FeatureDistribution":
        if not sigma > 0.0:
            raise ValueError("sigma must be positive")
        return cls("lognormal", (float(mu), float(sigma)))

    @classmethod
    def student_t(cls, nu: float) -> "FeatureDistribution":
        if not nu > 0.0:
            raise ValueError("degrees of freedom must be positive")
        return cls("student_t", (float(nu),))

    @classmethod
    def gaussian(cls, sigma: float) -> "FeatureDistribution":
        if not sigma > 0.0:
            raise ValueError("sigma must be positive")
        return cls("gaussian", (float(sigma),))

    @classmethod
    def laplace(cls, scale: float) -> "FeatureDistribution":
        if not scale > 0.0:
            raise ValueError("scale must be positive")
        return cls("laplace", (float(scale),))

    @classmethod
    def parse(cls, text: str, gaussian_interp: str = "variance") -> "FeatureDistribution":
        """Parse "kind:p1,p2" strings, e.g. "lognormal:0,0.6" or "gaussian:5"."""
        kind, values = _split_dist(text)
        if kind == "lognormal":
            _expect(values, 2, text)
            return cls.lognormal(values[0], values[1])
        if kind == "student_t":
            _expect(values, 1, text)
            return cls.student_t(values[0])
        if kind == "gaussian":
            _expect(values, 1, text)
            return cls.gaussian(_gaussian_sigma(values[0], gaussian_interp))
        if kind == "laplace":
            _expect(values, 1, text)
            return cls.laplace(values[0])
        raise ValueError(f"unknown feature distribution {kind!r}")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "lognormal":
            mu, sigma = self.params
            return rng.lognormal(mu, sigma, size)
        if self.kind == "student_t":
            return rng.standard_t(self.params[0], size)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.params[0], size)
        return rng.laplace(0.0, self.params[0], size)


@dataclass(frozen=True)
class NoiseDistribution:
    """Law of the additive response noise."""

    kind: str
    params: tuple

    @classmethod
    def gaussian(cls, sigma: float) -> "NoiseDistribution":
        if not sigma > 0.0:
            raise ValueError("sigma must be positive")
        return cls("gaussian", (float(sigma),))

    @classmethod
    def lognormal(cls, mu: float, sigma: float) -> "NoiseDistribution":
        if not sigma > 0.0:
            raise ValueError("sigma must be positive")
        return cls("lognormal", (float(mu), float(sigma)))

    @classmethod
    def loglogistic(cls, c: float) -> "NoiseDistribution":
        if not c > 0.0:
            raise ValueError("shape must be positive")
        return cls("loglogistic", (float(c),))

    @classmethod
    def loggamma(cls, c: float) -> "NoiseDistribution":
        if not c > 0.0:
            raise ValueError("shape must be positive")
        return cls("loggamma", (float(c),))

    @classmethod
    def logistic(cls, loc: float, scale: float) -> "NoiseDistribution":
        if not scale > 0.0:
            raise ValueError("scale must be positive")
        return cls("logistic", (float(loc), float(scale)))

    @classmethod
    def parse(cls, text: str, gaussian_interp: str = "variance") -> "NoiseDistribution":
        """Parse "kind:p1,p2" strings, e.g. "logistic:0,0.5" or "loggamma:0.5"."""
        kind, values = _split_dist(text)
        if kind == "gaussian":
            _expect(values, 1, text)
            return cls.gaussian(_gaussian_sigma(values[0], gaussian_interp))
        if kind == "lognormal":
            _expect(values, 2, text)
            return cls.lognormal(values[0], values[1])
        if kind == "loglogistic":
            _expect(values, 1, text)
            return cls.loglogistic(values[0])
        if kind == "loggamma":
            _expect(values, 1, text)
            return cls.loggamma(values[0])
        if kind == "logistic":
            _expect(values, 2, text)
            return cls.logistic(values[0], values[1])
        raise ValueError(f"unknown noise distribution {kind!r}")

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "gaussian":
            return rng.normal(0.0, self.params[0], size)
        if self.kind == "lognormal":
            mu, sigma = self.params
            return rng.lognormal(mu, sigma, size)
        if self.kind == "loglogistic":
            c = self.params[0]
            u = np.maximum(rng.random(size), _TINY)
            return (u / (1.0 - u)) ** (1.0 / c)
        if self.kind == "loggamma":
            c = self.params[0]
            return np.log(np.maximum(rng.gamma(c, 1.0, size), _TINY))
        loc, scale = self.params
        u = np.maximum(rng.random(size), _TINY)
        return loc + scale * np.log(u / (1.0 - u))


def _split_dist(text: str):
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if not rest.strip():
        raise ValueError(f"distribution {text!r} is missing parameters")
    try:
        values = tuple(float(p) for p in rest.split(","))
    except ValueError as exc:
        raise ValueError(f"cannot parse distribution parameters in {text!r}") from exc
    return kind, values


def _expect(values, count, text):
    if len(values) != count:
        raise ValueError(f"distribution {text!r} needs {count} parameter(s)")


def _gaussian_sigma(value: float, interp: str) -> float:
    if interp == "variance":
        if not value > 0.0:
            raise ValueError("variance must be positive")
        return math.sqrt(value)
    if interp == "stddev":
        return value
    raise ValueError(f"unknown gaussian interpretation {interp!r}")


def sample_noise(noise: NoiseDistribution, rng, size=None):
    """Draw from the noise law; scalar when size is None."""
    gen = rng.generator() if hasattr(rng, "generator") else rng
    out = noise.sample(gen, size)
    return float(out) if size is None else out


def gen_wstar_l1(d: int, rng) -> np.ndarray:
    """Random vector with unit l1 norm: uniform simplex magnitudes and
    independent random signs."""
    if d < 1:
        raise ValueError("dimension must be positive")
    gen = rng.generator() if hasattr(rng, "generator") else rng
    mags = gen.dirichlet(np.ones(d))
    mags = mags / mags.sum()
    signs = np.where(gen.random(d) < 0.5, -1.0, 1.0)
    return signs * mags


def gen_wstar_sparse(d: int, s_star: int, rng) -> np.ndarray:
    """Random s_star-sparse vector on the unit l2 sphere: wide Gaussian draws
    on a uniformly random support, projected onto the unit ball."""
    if not 1 <= s_star <= d:
        raise ValueError(f"need 1 <= s_star <= d, got s_star={s_star}, d={d}")
    gen = rng.generator() if hasattr(rng, "generator") else rng
    w = np.zeros(d)
    support = gen.choice(d, size=s_star, replace=False)
    w[support] = gen.normal(0.0, 100.0, s_star)
    return project_l2_ball(w, 1.0)


def random_l1_ball_point(d: int, rng, radius: float = 1.0) -> np.ndarray:
    """Uniform random point of the l1 ball: simplex direction with random
    signs, scaled by a radial factor U^(1/d)."""
    if d < 1:
        raise ValueError("dimension must be positive")
    gen = rng.generator() if hasattr(rng, "generator") else rng
    mags = gen.dirichlet(np.ones(d))
    signs = np.where(gen.random(d) < 0.5, -1.0, 1.0)
    r = gen.random() ** (1.0 / d)
    return radius * r * signs * mags


def gen_linear(
    n: int,
    d: int,
    w_star,
    feat: FeatureDistribution,
    noise: NoiseDistribution | None,
    rng,
) -> Dataset:
    """i.i.d. rows with y = <w_star, x> + noise (zero noise when None)."""
    w_star = np.asarray(w_star, dtype=float)
    if w_star.shape != (d,):
        raise ValueError(f"w_star must have shape ({d},)")
    gen = rng.generator() if hasattr(rng, "generator") else rng
    X = feat.sample(gen, (n, d))
    y = X @ w_star
    if noise is not None:
        y = y + noise.sample(gen, n)
    return Dataset(X, y)


def gen_logistic(
    n: int,
    d: int,
    w_star,
    feat: FeatureDistribution,
    noise: NoiseDistribution | None,
    rng,
) -> Dataset:
    """i.i.d. rows with +-1 labels: +1 exactly when <x, w_star> + noise >= 0
    (the margin pushed through a sigmoid and thresholded at 1/2, ties to +1)."""
    w_star = np.asarray(w_star, dtype=float)
    if w_star.shape != (d,):
        raise ValueError(f"w_star must have shape ({d},)")
    gen = rng.generator() if hasattr(rng, "generator") else rng
    X = feat.sample(gen, (n, d))
    z = X @ w_star
    if noise is not None:
        z = z + noise.sample(gen, n)
    y = np.where(z >= 0.0, 1.0, -1.0)
    return Dataset(X, y)


def load_csv(path, target_column: int, max_rows: int | None = None) -> Dataset:
    """Read a numeric comma-separated file into a Dataset.

    The target column becomes the response; all other columns are features. A
    single leading header row is detected (any non-numeric cell) and skipped.
    Non-numeric data cells raise a DataError naming the row and column.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader if row]
    except OSError as exc:
        raise DataError(f"{path}: cannot read file: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: file is empty")

    start = 0
    try:
        [float(cell) for cell in rows[0]]
    except ValueError:
        start = 1
    if start >= len(rows):
        raise DataError(f"{path}: no data rows after the header")

    width = len(rows[start])
    if width < 2:
        raise DataError(f"{path}: need at least two columns, got {width}")
    if not 0 <= target_column < width:
        raise DataError(
            f"{path}: target column {target_column} out of range for {width} columns"
        )

    data_rows = rows[start:]
    if max_rows is not None:
        if max_rows < 1:
            raise DataError("max_rows must be at least 1")
        data_rows = data_rows[:max_rows]

    parsed = np.empty((len(data_rows), width))
    for i, row in enumerate(data_rows):
        if len(row) != width:
            raise DataError(
                f"{path}: row {start + i + 1} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                parsed[i, j] = float(cell)
            except ValueError as exc:
                raise DataError(
                    f"{path}: row {start + i + 1}, column {j + 1}: "
                    f"not numeric: {cell!r}"
                ) from exc

    features = np.delete(parsed, target_column, axis=1)
    responses = parsed[:, target_column]
    return Dataset(features, responses)


def save_csv(data: Dataset, path, header: bool = True) -> None:
    """Write features plus the response as the last column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"x{j}" for j in range(data.d)] + ["y"])
        for i in range(data.n):
            writer.writerow(
                [f"{v:.17g}" for v in data.features[i]] + [f"{data.responses[i]:.17g}"]
            )
