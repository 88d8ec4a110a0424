"""Projection matrices and the trace correlation between two subspaces."""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .numerics import gram_schmidt

ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class Subspace:
    """A subspace held by an orthonormal p x d basis.

    Non-orthonormal input is passed through Gram-Schmidt on construction;
    the span is not affected.
    """

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if not np.allclose(B.T @ B, np.eye(B.shape[1]), rtol=0, atol=ORTHO_TOL):
            B = gram_schmidt(B)
        object.__setattr__(self, "basis", B)

    @property
    def p(self):
        return self.basis.shape[0]

    @property
    def d(self):
        return self.basis.shape[1]


def _as_subspace(s):
    return s if isinstance(s, Subspace) else Subspace(s)


def projection_matrix(s):
    B = _as_subspace(s).basis
    return B @ B.T


def trace_correlation(estimated, truth):
    """``trace(B_hat^T B0 B0^T B_hat) / d``, clamped to [0, 1].

    Both arguments may be Subspace objects or raw basis matrices.
    """
    est = _as_subspace(estimated)
    tru = _as_subspace(truth)
    if est.p != tru.p or est.d != tru.d:
        raise DimensionMismatchError(
            f"subspaces differ in shape: {est.basis.shape} vs {tru.basis.shape}"
        )
    C = tru.basis.T @ est.basis
    r = float(np.sum(C * C)) / est.d
    return min(1.0, max(0.0, r))


def projection_distance(estimated, truth):
    """Frobenius norm of the difference of the two projection matrices."""
    return float(np.linalg.norm(projection_matrix(estimated) - projection_matrix(truth)))
