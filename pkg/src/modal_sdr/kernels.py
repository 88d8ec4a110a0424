"""Gaussian kernels, evaluated in log space.

A p-variate product kernel times a univariate residual kernel underflows in
double precision for moderate p, so weights are always formed from log
values and exponentiated only inside normalized ratios.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Bandwidths:
    """Predictor bandwidth `h1` (shared by every coordinate) and response bandwidth `h2`."""

    h1: float = 1.0
    h2: float = 1.0

    def __post_init__(self):
        for name in ("h1", "h2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidInputError(f"bandwidth {name} must be positive, got {v!r}")


def _check_h(h):
    if not (np.isfinite(h) and h > 0):
        raise InvalidInputError(f"bandwidth must be positive, got {h!r}")


def log_gauss1d(t, h):
    _check_h(h)
    t = np.asarray(t, dtype=float)
    return -0.5 * (t / h) ** 2 - np.log(h) - LOG_SQRT_2PI


def gauss1d(t, h):
    """Scaled standard normal density ``phi(t / h) / h``."""
    return np.exp(log_gauss1d(t, h))


def log_product_kernel(u, h1):
    """Log of ``h1**-p * K(u / h1)`` for the standard p-variate Gaussian K.

    `u` may be a single p-vector or a stack with the coordinate axis last.
    """
    _check_h(h1)
    u = np.asarray(u, dtype=float)
    p = u.shape[-1]
    sq = np.einsum("...k,...k->...", u, u)
    return -0.5 * sq / h1**2 - p * (np.log(h1) + LOG_SQRT_2PI)
