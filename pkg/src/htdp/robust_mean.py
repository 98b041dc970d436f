"""Robust mean estimation for heavy-tailed samples.

The estimator rescales each sample by ``scale``, pushes it through a bounded
soft-truncation function, multiplies by centred Gaussian noise of precision
``beta``, and removes the noise again by taking its expectation in closed
form. The result is a deterministic per-sample transform whose average has
bounded worst-case sensitivity: replacing one of n samples moves the estimate
by at most ``4*sqrt(2)*scale / (3*n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = [
    "CatoniParams",
    "TRUNCATION_BOUND",
    "soft_truncate",
    "smoothing_correction",
    "smoothed_soft_truncate",
    "robust_mean_1d",
    "robust_gradient_vector",
    "replacement_sensitivity",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

#: Largest magnitude the soft truncation can produce: 2*sqrt(2)/3.
TRUNCATION_BOUND = 2.0 * _SQRT2 / 3.0

# Beyond this the Gaussian tail mass and density are below 1e-300; the terms
# are forced to exactly zero so that products with large prefactors cannot
# produce NaN.
_TAIL_CUTOFF = 38.0


@dataclass(frozen=True)
class CatoniParams:
    """Scale and Gaussian smoothing precision of the robust mean estimator."""

    scale: float
    beta: float = 1.0

    def __post_init__(self):
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        if not (self.beta > 0.0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")


def soft_truncate(x):
    """Odd, monotone, bounded truncation: x - x^3/6 inside [-sqrt(2), sqrt(2)],
    saturating at +-2*sqrt(2)/3 outside."""
    x = np.asarray(x, dtype=float)
    inner = x - x**3 / 6.0
    out = np.where(x > _SQRT2, TRUNCATION_BOUND, np.where(x < -_SQRT2, -TRUNCATION_BOUND, inner))
    if out.ndim == 0:
        return float(out)
    return out


def _tail_terms(v):
    """Gaussian upper-tail mass F = Phi(-v) and density kernel E = exp(-v^2/2).

    For |v| above the cutoff both underflow below 1e-300 and are forced to
    their limits (F to 0 or 1, E to 0) to keep later products finite.
    """
    v = np.asarray(v, dtype=float)
    vc = np.clip(v, -_TAIL_CUTOFF, _TAIL_CUTOFF)
    F = ndtr(-vc)
    E = np.exp(-vc * vc / 2.0)
    big = v > _TAIL_CUTOFF
    small = v < -_TAIL_CUTOFF
    F = np.where(big, 0.0, np.where(small, 1.0, F))
    E = np.where(big | small, 0.0, E)
    return F, E, vc


def smoothing_correction(a, b):
    """Correction term that turns the cubic polynomial part into the exact
    Gaussian smoothing ``E[soft_truncate(a + b Z)]`` for Z ~ N(0, 1).

    Built from the tail masses and densities at (sqrt(2) -+ a)/b. Defined for
    b >= 0; at b = 0 it takes its continuity limit, which is 0 whenever
    |a| <= sqrt(2).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b < 0.0):
        raise ValueError("b must be nonnegative")
    a, b = np.broadcast_arrays(a, b)

    poly = a - a**3 / 6.0
    pos = b > 0.0
    bs = np.where(pos, b, 1.0)

    # subnormal b pushes the tail arguments to inf; the cutoff handling below
    # maps them to the correct limit, so the overflow itself is benign
    with np.errstate(over="ignore"):
        vm = (_SQRT2 - a) / bs
        vp = (_SQRT2 + a) / bs
    Fm, Em, vmc = _tail_terms(vm)
    Fp, Ep, vpc = _tail_terms(vp)

    t1 = TRUNCATION_BOUND * (Fm - Fp)
    t2 = -poly * (Fm + Fp)
    t3 = bs * _INV_SQRT_2PI * (1.0 - a * a / 2.0) * (Ep - Em)
    t4 = a * bs * bs / 2.0 * (Fp + Fm + _INV_SQRT_2PI * (vpc * Ep + vmc * Em))
    t5 = bs**3 / 6.0 * _INV_SQRT_2PI * ((2.0 + vmc * vmc) * Em - (2.0 + vpc * vpc) * Ep)

    corr = t1 + t2 + t3 + t4 + t5
    # b = 0 limit: the smoothing collapses onto the truncation itself.
    corr = np.where(pos, corr, soft_truncate(a) - poly)
    if corr.ndim == 0:
        return float(corr)
    return corr


def smoothed_soft_truncate(a, b):
    """Closed form of ``E[soft_truncate(a + b Z)]`` with Z ~ N(0, 1), b >= 0.

    Equals ``a (1 - b^2/2) - a^3/6`` plus the smoothing correction; at b = 0 it
    reduces to ``soft_truncate(a)`` directly, which is the continuity limit
    even when |a| exceeds sqrt(2) and the polynomial alone would be invalid.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b < 0.0):
        raise ValueError("b must be nonnegative")
    a, b = np.broadcast_arrays(a, b)
    out = a * (1.0 - b * b / 2.0) - a**3 / 6.0 + smoothing_correction(a, b)
    out = np.where(b > 0.0, out, soft_truncate(a))
    if out.ndim == 0:
        return float(out)
    return out


def _smoothed_scaled(x, params: CatoniParams):
    """Per-sample smoothed truncation of x / scale, before rescaling."""
    a = x / params.scale
    b = np.abs(x) / (params.scale * math.sqrt(params.beta))
    return smoothed_soft_truncate(a, b)


def robust_mean_1d(samples, params: CatoniParams) -> float:
    """Robust mean of a scalar sample: scale/n times the summed smoothed
    truncations of the rescaled samples. Deterministic; the Gaussian noise is
    integrated out analytically."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("samples must be a nonempty 1-d array")
    return float(params.scale * np.mean(_smoothed_scaled(x, params)))


def robust_gradient_vector(grads, params: CatoniParams) -> np.ndarray:
    """Apply the robust mean coordinatewise to an (m, d) matrix whose rows are
    per-sample gradients. Replacing one row moves the output by at most
    ``replacement_sensitivity(m, scale)`` in the sup norm."""
    G = np.asarray(grads, dtype=float)
    if G.ndim != 2 or G.size == 0:
        raise ValueError("gradient matrix must be a nonempty (m, d) array")
    return params.scale * np.mean(_smoothed_scaled(G, params), axis=0)


def replacement_sensitivity(n: int, scale: float) -> float:
    """Worst-case change of the robust mean when one of n samples is replaced:
    4*sqrt(2)*scale / (3*n), from the bound on the soft truncation."""
    return 2.0 * TRUNCATION_BOUND * scale / n
