"""Sample moments, the whitening transform, and the map back to raw coordinates."""
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DegenerateResponseError, DimensionMismatchError, InvalidInputError
from .numerics import gram_schmidt, inv_sqrt_sym


@dataclass(frozen=True)
class Standardizer:
    mean_x: np.ndarray
    cov_x: np.ndarray
    cov_x_inv_sqrt: np.ndarray
    mean_y: float
    sd_y: float

    @property
    def p(self):
        return self.mean_x.shape[0]


def fit_standardizer(data: Dataset) -> Standardizer:
    """Unbiased (n - 1) sample moments of X and y.

    The response is scaled by its sample standard deviation; a constant
    response raises DegenerateResponseError and a singular predictor
    covariance raises NearSingularCovarianceError.
    """
    n, p = data.X.shape
    if n < p + 2:
        raise InvalidInputError(f"need n >= p + 2 observations, got n={n}, p={p}")
    mean_x = data.X.mean(axis=0)
    Xc = data.X - mean_x
    cov_x = (Xc.T @ Xc) / (n - 1)
    cov_x = 0.5 * (cov_x + cov_x.T)
    mean_y = float(data.y.mean())
    sd_y = float(np.sqrt(np.sum((data.y - mean_y) ** 2) / (n - 1)))
    if not sd_y > 1e-12 * max(1.0, abs(mean_y)):
        raise DegenerateResponseError("response is constant; its standard deviation is 0")
    return Standardizer(mean_x, cov_x, inv_sqrt_sym(cov_x), mean_y, sd_y)


def whiten(data: Dataset, s: Standardizer):
    """Return ``Z = (X - mean) @ Sigma^{-1/2}`` and ``(y - mean_y) / sd_y``."""
    if data.p != s.p:
        raise DimensionMismatchError(f"data has p={data.p}, standardizer has p={s.p}")
    Z = (data.X - s.mean_x) @ s.cov_x_inv_sqrt
    y = (data.y - s.mean_y) / s.sd_y
    return Z, y


def unwhiten_basis(nu, s: Standardizer):
    """Map whitened directions back to raw predictor coordinates.

    ``Sigma^{-1/2} nu`` is generally not orthonormal, so the result is
    re-orthonormalized; the span is unchanged.
    """
    nu = np.asarray(nu, dtype=float)
    if nu.ndim == 1:
        nu = nu[:, None]
    if nu.shape[0] != s.p:
        raise DimensionMismatchError(f"basis has {nu.shape[0]} rows, expected {s.p}")
    return gram_schmidt(s.cov_x_inv_sqrt @ nu)
