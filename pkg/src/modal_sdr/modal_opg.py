"""Local modal outer-product-of-gradients (LMOPG) estimator.

Every anchor Z_j gets a local-linear fit whose objective

    L(theta) = 1/n sum_l K_h1(Z_l - Z_j) phi_h2(y_l - b0 - b^T (Z_l - Z_j))

is maximized by alternating a weight step (normalized products of the two
kernels at the current theta) and a closed-form weighted least squares
step.  The slopes b of all anchors are then pooled through the eigenvectors
of their average outer product.

Anchors are processed in fixed-size blocks.  All arithmetic inside a block
is row-wise per anchor, so an anchor's fit does not depend on which block
(or worker) handled it.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset
from .errors import (
    DegenerateNeighborhoodError,
    DegenerateSpectrumError,
    DivergenceError,
    EstimationFailedError,
    InvalidInputError,
    InvariantViolationError,
)
from .kernels import LOG_SQRT_2PI, Bandwidths
from .numerics import RIDGE_DELTA, solve_normal_batch, sym_eigen
from .standardize import Standardizer, fit_standardizer, unwhiten_basis, whiten

ASCENT_SLACK = 1e-10
MAX_FAILURE_FRACTION = 0.2
BLOCK_SIZE = 32
THREADS_ENV = "MODAL_SDR_THREADS"


def default_workers():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class LmopgConfig:
    """Estimator settings.

    `max_iter=0` skips the modal iterations entirely and returns the
    kernel-weighted least squares (mean OPG) fits.  A fit has converged
    once the relative change ``|theta_new - theta| / (1 + |theta|)`` and
    the norm of the weighted score both fall to `tol`.
    """

    bandwidths: Bandwidths = field(default_factory=Bandwidths)
    d: int = 2
    max_iter: int = 100
    tol: float = 1e-6
    anchor_subsample: int | None = None
    check_ascent: bool = True

    def __post_init__(self):
        if self.max_iter < 0:
            raise InvalidInputError("max_iter must be >= 0")
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")
        if self.d < 1:
            raise InvalidInputError("d must be >= 1")
        if self.anchor_subsample is not None and self.anchor_subsample < 1:
            raise InvalidInputError("anchor_subsample must be a positive integer")


@dataclass(frozen=True)
class LocalFit:
    anchor: int
    theta: np.ndarray | None
    iterations: int = 0
    converged: bool = False
    regularized: bool = False
    final_objective: float = float("nan")
    log_objective_trace: tuple = ()
    score_norm: float = float("nan")
    exception: Exception | None = field(default=None, repr=False, compare=False)

    @property
    def error(self):
        return None if self.exception is None else str(self.exception)

    @property
    def ok(self):
        return self.exception is None


@dataclass(frozen=True)
class GradientField:
    """Per-anchor slope estimates; `grads[k]` belongs to `fits[k]`.

    Rows of failed anchors are NaN and excluded by `usable`.
    """

    grads: np.ndarray
    fits: tuple = ()

    @property
    def usable(self):
        if not self.fits:
            return np.all(np.isfinite(self.grads), axis=1)
        return np.array([f.ok for f in self.fits], dtype=bool)

    @property
    def n_failed(self):
        return int((~self.usable).sum())


@dataclass(frozen=True)
class Basis:
    columns: np.ndarray
    eigenvalues: np.ndarray
    warning: str | None = None

    @property
    def d(self):
        return self.columns.shape[1]


# ---------------------------------------------------------------------------
# block engine


def _local_design(Z, anchors):
    # rows (1, Z_l - Z_j) for each anchor j in the block: shape (b, n, p + 1)
    D = Z[None, :, :] - Z[anchors][:, None, :]
    X = np.empty(D.shape[:2] + (D.shape[2] + 1,))
    X[..., 0] = 1.0
    X[..., 1:] = D
    return X, D


def _log_kernel(D, h1):
    p = D.shape[-1]
    sq = np.einsum("jlk,jlk->jl", D, D)
    return -0.5 * sq / h1**2 - p * (np.log(h1) + LOG_SQRT_2PI)


def _estep(X, y, logK, theta, h2):
    """Weights, log objective and weighted normal equations at `theta`."""
    n = X.shape[1]
    resid = y[None, :] - np.einsum("jla,ja->jl", X, theta)
    # overflow here means an empty neighborhood; callers check log_obj
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        logw = logK - 0.5 * (resid / h2) ** 2 - np.log(h2) - LOG_SQRT_2PI
        top = logw.max(axis=1, keepdims=True)
        w = np.exp(logw - top)
        mass = w.sum(axis=1)
        log_obj = top[:, 0] + np.log(mass) - np.log(n)
    w /= mass[:, None]
    Xw = X * w[..., None]
    A = np.matmul(Xw.transpose(0, 2, 1), X)
    rhs = np.matmul(Xw.transpose(0, 2, 1), y)
    return w, log_obj, A, rhs


def _kernel_fit(X, y, logK, delta):
    top = logK.max(axis=1, keepdims=True)
    w = np.exp(logK - top)
    w /= w.sum(axis=1, keepdims=True)
    Xw = X * w[..., None]
    A = np.matmul(Xw.transpose(0, 2, 1), X)
    rhs = np.matmul(Xw.transpose(0, 2, 1), y)
    return solve_normal_batch(A, rhs, delta)


def _fit_block(Z, y, anchors, cfg: LmopgConfig, init=None, delta=RIDGE_DELTA):
    anchors = np.asarray(anchors, dtype=int)
    b = anchors.shape[0]
    h1, h2 = cfg.bandwidths.h1, cfg.bandwidths.h2
    X_all, D = _local_design(Z, anchors)
    logK_all = _log_kernel(D, h1)
    del D

    if init is None:
        theta, reg0 = _kernel_fit(X_all, y, logK_all, delta)
    else:
        theta = np.array(np.broadcast_to(init, (b, Z.shape[1] + 1)), dtype=float)
        reg0 = np.zeros(b, dtype=bool)

    iters = np.zeros(b, dtype=int)
    regularized = reg0.copy()
    converged = np.zeros(b, dtype=bool)
    last_step = np.full(b, np.inf)
    traces = [[] for _ in range(b)]
    score = np.full(b, np.nan)
    errors = [None] * b
    for k in range(b):
        if not np.all(np.isfinite(theta[k])):
            errors[k] = DivergenceError(anchors[k], 0)

    active = np.array([e is None for e in errors])
    while active.any():
        idx = np.flatnonzero(active)
        X = X_all[idx]
        th = theta[idx]
        _, log_obj, A, rhs = _estep(X, y, logK_all[idx], th, h2)
        score[idx] = np.linalg.norm(rhs - np.einsum("kab,kb->ka", A, th), axis=1)

        done = np.zeros(idx.shape[0], dtype=bool)
        for pos, k in enumerate(idx):
            lo = log_obj[pos]
            if not np.isfinite(lo):
                errors[k] = DegenerateNeighborhoodError(anchors[k])
                done[pos] = True
                continue
            if cfg.check_ascent and traces[k] and lo < traces[k][-1] - ASCENT_SLACK:
                errors[k] = InvariantViolationError(
                    f"objective decreased at anchor {anchors[k]}, iteration {iters[k]}: "
                    f"log L {traces[k][-1]!r} -> {lo!r}"
                )
                done[pos] = True
                continue
            traces[k].append(float(lo))
            if iters[k] >= 1 and last_step[k] < cfg.tol and score[k] <= cfg.tol:
                converged[k] = True
                done[pos] = True
            elif iters[k] >= cfg.max_iter:
                done[pos] = True

        go = ~done
        if go.any():
            g = idx[go]
            # proximal ridge keeps the fallback step an ascent step
            new, reg = solve_normal_batch(A[go], rhs[go], delta, center=theta[g])
            regularized[g] |= reg
            finite = np.all(np.isfinite(new), axis=1)
            for pos, k in enumerate(g):
                if not finite[pos]:
                    errors[k] = DivergenceError(anchors[k], iters[k] + 1)
            num = np.linalg.norm(new - theta[g], axis=1)
            last_step[g] = num / (1.0 + np.linalg.norm(theta[g], axis=1))
            theta[g] = np.where(finite[:, None], new, theta[g])
            iters[g] += 1
            done[go] |= ~finite
        active[idx[done]] = False

    fits = []
    for k in range(b):
        tr = tuple(traces[k])
        fits.append(
            LocalFit(
                anchor=int(anchors[k]),
                theta=None if errors[k] else theta[k].copy(),
                iterations=int(iters[k]),
                converged=bool(converged[k]),
                regularized=bool(regularized[k]),
                final_objective=float(np.exp(tr[-1])) if tr else float("nan"),
                log_objective_trace=tr,
                score_norm=float(score[k]),
                exception=errors[k],
            )
        )
    return fits


# ---------------------------------------------------------------------------
# public operations


def _check_inputs(Z, y):
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if Z.ndim != 2 or Z.shape[0] != y.shape[0]:
        raise InvalidInputError("Z must be n x p and y an n-vector")
    return Z, y


def modal_weights(Z, y, anchor, theta, bw: Bandwidths):
    """Normalized weights of every observation for the fit at `anchor`.

    Proportional to ``K_h1(Z_l - Z_j) * phi_h2(y_l - b0 - b^T (Z_l - Z_j))``
    and computed with a log-sum-exp shift.
    """
    Z, y = _check_inputs(Z, y)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (Z.shape[1] + 1,) or not np.all(np.isfinite(theta)):
        raise InvalidInputError("theta must be a finite (p + 1)-vector")
    X, D = _local_design(Z, [anchor])
    w, log_obj, _, _ = _estep(X, y, _log_kernel(D, bw.h1), theta[None, :], bw.h2)
    if not np.isfinite(log_obj[0]) or not np.all(np.isfinite(w)):
        raise DegenerateNeighborhoodError(anchor)
    return w[0]


def log_objective(Z, y, anchor, theta, bw: Bandwidths):
    """Log of the local kernel-smoothed modal objective at `theta`."""
    Z, y = _check_inputs(Z, y)
    X, D = _local_design(Z, [anchor])
    theta = np.asarray(theta, dtype=float)[None, :]
    return float(_estep(X, y, _log_kernel(D, bw.h1), theta, bw.h2)[1][0])


def kernel_local_fit(Z, y, anchor, bw: Bandwidths):
    """Kernel-weighted least squares at `anchor` (no modal reweighting)."""
    Z, y = _check_inputs(Z, y)
    X, D = _local_design(Z, [anchor])
    theta, _ = _kernel_fit(X, y, _log_kernel(D, bw.h1), RIDGE_DELTA)
    return theta[0]


def modal_local_fit(Z, y, anchor, cfg: LmopgConfig, init=None) -> LocalFit:
    """Run the modal EM iterations at one anchor.

    `init` defaults to the kernel-weighted least squares fit.  Errors are
    raised here; `estimate_gradient_field` records them instead.
    """
    Z, y = _check_inputs(Z, y)
    n, p = Z.shape
    if n < p + 2:
        raise InvalidInputError(f"need n >= p + 2 observations, got n={n}, p={p}")
    if init is not None:
        init = np.asarray(init, dtype=float)
        if init.shape != (p + 1,) or not np.all(np.isfinite(init)):
            raise InvalidInputError("init must be a finite (p + 1)-vector")
    fit = _fit_block(Z, y, [anchor], cfg, init=init)[0]
    if fit.exception is not None:
        raise fit.exception
    return fit


def select_anchors(n, subsample=None):
    if subsample is None or subsample >= n:
        return np.arange(n)
    # evenly spaced, deterministic
    return np.unique(np.linspace(0, n - 1, subsample).round().astype(int))


def estimate_gradient_field(Z, y, cfg: LmopgConfig, workers=None) -> GradientField:
    """Modal local-linear slopes at every anchor (or the configured subsample).

    Fits that fail are kept in `fits` with their error and a NaN gradient
    row.  More than 20% failures raises EstimationFailedError.
    """
    Z, y = _check_inputs(Z, y)
    n, p = Z.shape
    anchors = select_anchors(n, cfg.anchor_subsample)
    blocks = [anchors[i:i + BLOCK_SIZE] for i in range(0, anchors.shape[0], BLOCK_SIZE)]
    workers = default_workers() if workers is None else max(1, int(workers))

    def run(block):
        return _fit_block(Z, y, block, cfg)

    if workers == 1 or len(blocks) == 1:
        results = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    fits = tuple(f for block in results for f in block)

    grads = np.full((len(fits), p), np.nan)
    for k, f in enumerate(fits):
        if f.ok:
            grads[k] = f.theta[1:]
    field_ = GradientField(grads, fits)
    failed = field_.n_failed
    if failed > MAX_FAILURE_FRACTION * len(fits):
        raise EstimationFailedError(
            f"{failed} of {len(fits)} anchor fits failed; first error: "
            f"{next(f.error for f in fits if not f.ok)}"
        )
    return field_


def extract_basis(field_: GradientField, d: int) -> Basis:
    """Top-`d` eigenvectors of the mean outer product of the usable gradients.

    Rows are accumulated in anchor order.  Fewer than `d` eigenvalues above
    1e-12 attaches a warning to the Basis; the span is still returned.
    """
    G = np.asarray(field_.grads, dtype=float)[field_.usable]
    p = G.shape[1]
    if not 1 <= d <= p:
        raise InvalidInputError(f"d must be between 1 and {p}")
    if G.shape[0] < d:
        raise EstimationFailedError(f"only {G.shape[0]} usable gradient rows for d={d}")
    eig = sym_eigen(G.T @ G / G.shape[0])
    lam = eig.eigenvalues
    warning = None
    n_pos = int(np.sum(lam > 1e-12))
    if n_pos < d:
        warning = f"effective rank {n_pos} is below the requested dimension {d}"
    return Basis(eig.eigenvectors[:, :d].copy(), lam.copy(), warning)


@dataclass(frozen=True)
class LmopgResult:
    basis: Basis
    standardizer: Standardizer
    field: GradientField
    whitened_basis: Basis

    def __iter__(self):
        return iter((self.basis, self.standardizer, self.field))


def lmopg(data: Dataset, cfg: LmopgConfig = LmopgConfig(), workers=None) -> LmopgResult:
    """End-to-end estimate: whiten, fit every anchor, pool, map back.

    The returned basis is orthonormal in the original X coordinates.  The
    result unpacks as ``(basis, standardizer, field)``.
    """
    if cfg.d > data.p:
        raise InvalidInputError(f"d={cfg.d} exceeds p={data.p}")
    s = fit_standardizer(data)
    Z, y = whiten(data, s)
    field_ = estimate_gradient_field(Z, y, cfg, workers=workers)
    wb = extract_basis(field_, cfg.d)
    cols = unwhiten_basis(wb.columns, s)
    return LmopgResult(Basis(cols, wb.eigenvalues, wb.warning), s, field_, wb)


def eigenvalue_proportions(spectrum):
    lam = np.asarray(spectrum, dtype=float)
    if np.any(lam < -1e-10 * max(1.0, np.abs(lam).max(initial=0.0))):
        raise InvalidInputError("spectrum has negative entries")
    lam = np.clip(lam, 0.0, None)
    total = lam.sum()
    if not total > 0:
        raise DegenerateSpectrumError("spectrum is all zero")
    return lam / total


def choose_dimension(spectrum, cum_prop=0.95):
    """Smallest d whose leading eigenvalues carry at least `cum_prop` of the total."""
    if not 0 < cum_prop <= 1:
        raise InvalidInputError("cum_prop must lie in (0, 1]")
    cum = np.cumsum(eigenvalue_proportions(spectrum))
    return int(np.searchsorted(cum, cum_prop - 1e-12) + 1)


def mean_opg_config(cfg: LmopgConfig) -> LmopgConfig:
    return replace(cfg, max_iter=0)
