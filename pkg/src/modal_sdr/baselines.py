"""Comparison estimators returning the same Basis type as LMOPG."""
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import InvalidInputError
from .modal_opg import Basis, LmopgConfig, lmopg, mean_opg_config
from .numerics import sym_eigen
from .standardize import fit_standardizer, unwhiten_basis, whiten


def mean_opg(data: Dataset, cfg: LmopgConfig = LmopgConfig(), workers=None) -> Basis:
    """Least-squares OPG: one kernel-weighted local linear fit per anchor."""
    return lmopg(data, mean_opg_config(cfg), workers=workers).basis


@dataclass(frozen=True)
class SirConfig:
    num_slices: int = 10
    d: int = 2

    def __post_init__(self):
        if self.num_slices < 2:
            raise InvalidInputError("num_slices must be >= 2")
        if self.d < 1:
            raise InvalidInputError("d must be >= 1")


def sir_slices(y, num_slices):
    """Partition observation indices into slices of the sorted response.

    Slices are near-equal (sizes differ by at most one); ties keep input
    order.  A slice left with fewer than two observations is merged into
    its neighbour.
    """
    order = np.argsort(np.asarray(y), kind="stable")
    slices = [s for s in np.array_split(order, num_slices) if s.size]
    merged = []
    for s in slices:
        if merged and merged[-1].size < 2:
            merged[-1] = np.concatenate([merged[-1], s])
        else:
            merged.append(s)
    if len(merged) > 1 and merged[-1].size < 2:
        tail = merged.pop()
        merged[-1] = np.concatenate([merged[-1], tail])
    return merged


def sir(data: Dataset, cfg: SirConfig = SirConfig()) -> Basis:
    """Sliced inverse regression.

    Eigenvectors of the weighted covariance of slice means of the whitened
    predictors, mapped back to raw coordinates.
    """
    n = data.n
    if n < 2 * cfg.num_slices:
        raise InvalidInputError(
            f"need at least {2 * cfg.num_slices} observations for {cfg.num_slices} slices"
        )
    if cfg.d > data.p:
        raise InvalidInputError(f"d={cfg.d} exceeds p={data.p}")
    s = fit_standardizer(data)
    Z, _ = whiten(data, s)
    M = np.zeros((data.p, data.p))
    for idx in sir_slices(data.y, cfg.num_slices):
        m = Z[idx].mean(axis=0)
        M += (idx.size / n) * np.outer(m, m)
    eig = sym_eigen(M)
    cols = unwhiten_basis(eig.eigenvectors[:, : cfg.d], s)
    return Basis(cols, eig.eigenvalues.copy())
