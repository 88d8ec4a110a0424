"""Small dense linear-algebra primitives.

Everything here is a pure function of its inputs.  Sizes are small
(p in the tens, n in the thousands), so plain LAPACK through numpy is used.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateWeightsError,
    InvalidInputError,
    NearSingularCovarianceError,
    RankDeficientError,
)

EPS_PD = 1e-10
RIDGE_DELTA = 1e-8
COND_LIMIT = 1e12
PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class SymEigen:
    """Eigenvalues in non-increasing order, paired with eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def _fix_signs(V):
    # largest-magnitude entry of each column made non-negative; argmax picks the first on ties
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[idx, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return V * signs


def symmetrize(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def sym_eigen(M):
    """Eigendecomposition of a symmetric matrix, sorted descending.

    The input is symmetrized first.  Each eigenvector is oriented so that
    its entry of largest magnitude is non-negative.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix has non-finite entries")
    w, V = np.linalg.eigh(symmetrize(M))
    order = np.argsort(w, kind="stable")[::-1]
    return SymEigen(w[order], _fix_signs(V[:, order]))


def inv_sqrt_sym(M, eps_pd=EPS_PD):
    """Symmetric inverse square root ``V diag(lambda**-0.5) V^T``.

    Raises NearSingularCovarianceError if the smallest eigenvalue does not
    exceed `eps_pd`.
    """
    eig = sym_eigen(M)
    lam_min = eig.eigenvalues[-1]
    if not lam_min > eps_pd:
        raise NearSingularCovarianceError(lam_min, eps_pd)
    V = eig.eigenvectors
    return symmetrize((V / np.sqrt(eig.eigenvalues)) @ V.T)


def _solve_spd(A, b, delta):
    lam = np.linalg.eigvalsh(A)
    lam_max = lam[-1]
    lam_min = lam[0]
    regularized = not (lam_min > 0 and lam_max / lam_min <= COND_LIMIT)
    if regularized:
        A = A + delta * np.eye(A.shape[0])
    return np.linalg.solve(A, b), regularized


def weighted_least_squares(design, response, weights, delta=RIDGE_DELTA):
    """Minimize ``sum_i w_i (y_i - design_i @ theta)**2``.

    Parameters
    ----------
    design : (n, q) array
    response : (n,) array
    weights : (n,) array of non-negative reals
    delta : ridge added to the normal matrix when its condition number
        exceeds 1e12.

    Returns
    -------
    theta : (q,) array
    regularized : bool
        True when the ridge fallback was used.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    w = np.asarray(weights, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],) or w.shape != (X.shape[0],):
        raise InvalidInputError("design, response and weights have inconsistent shapes")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be finite and non-negative")
    if not w.sum() > 0:
        raise DegenerateWeightsError("all weights are zero")
    Xw = X * w[:, None]
    return _solve_spd(Xw.T @ X, Xw.T @ y, delta)


def solve_normal_batch(A, b, delta=RIDGE_DELTA, center=None):
    """Solve a stack of symmetric PSD normal systems ``A[k] x = b[k]``.

    Systems whose condition number exceeds 1e12 get ``delta * I`` added.
    With `center` the ridge pulls toward ``center[k]`` instead of zero, i.e.
    it solves ``(A + delta I) x = b + delta * center``, so the result never
    has a larger quadratic loss than `center` itself.
    Returns the solutions and a boolean mask of regularized systems.
    """
    lam = np.linalg.eigvalsh(A)
    lam_min = lam[:, 0]
    lam_max = lam[:, -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (lam_min > 0) & (lam_max / np.where(lam_min > 0, lam_min, 1.0) <= COND_LIMIT)
    reg = ~ok
    if reg.any():
        A = A.copy()
        A[reg] += delta * np.eye(A.shape[-1])
        if center is not None:
            b = b.copy()
            b[reg] += delta * center[reg]
    return np.linalg.solve(A, b[..., None])[..., 0], reg


def gram_schmidt(B, tol=PIVOT_TOL):
    """Orthonormalize the columns of `B` (modified Gram-Schmidt, two passes).

    Column k of the result lies in the span of columns 1..k of the input and
    has a positive inner product with input column k, so an already
    orthonormal input comes back unchanged.
    """
    B = np.array(B, dtype=float, copy=True)
    if B.ndim == 1:
        B = B[:, None]
    if not np.all(np.isfinite(B)):
        raise InvalidInputError("basis has non-finite entries")
    p, d = B.shape
    Q = np.zeros((p, d))
    rank = 0
    for k in range(d):
        v = B[:, k].copy()
        norm0 = np.linalg.norm(v)
        for _ in range(2):
            for i in range(rank):
                v -= (Q[:, i] @ v) * Q[:, i]
        nv = np.linalg.norm(v)
        if norm0 == 0 or nv <= tol * norm0:
            continue
        Q[:, rank] = v / nv
        rank += 1
    if rank < d:
        raise RankDeficientError(rank, d)
    return Q
