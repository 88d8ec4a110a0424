"""CSV ingestion and the reduce -> select dimension -> OLS -> evaluate workflow."""
import csv
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dataset import Dataset
from .errors import (
    CsvFormatError,
    DegenerateRegressorError,
    DimensionMismatchError,
    InvalidInputError,
    MissingColumnError,
)
from .modal_opg import (
    LmopgConfig,
    choose_dimension,
    eigenvalue_proportions,
    estimate_gradient_field,
    extract_basis,
)
from .standardize import fit_standardizer, unwhiten_basis, whiten


@dataclass(frozen=True)
class TabularFile:
    header: tuple
    rows: np.ndarray


def read_table(path):
    """Parse a comma-separated numeric file with a header row."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("file is empty") from None
        header = tuple(h.strip() for h in header)
        if not header or any(h == "" for h in header):
            raise CsvFormatError("header has empty column names", row=1)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise CsvFormatError(
                    f"expected {len(header)} fields, found {len(rec)}", row=lineno
                )
            vals = []
            for name, cell in zip(header, rec):
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvFormatError(f"non-numeric cell {cell!r}", row=lineno,
                                         column=name) from None
                if not math.isfinite(v):
                    raise CsvFormatError(f"non-finite cell {cell!r}", row=lineno, column=name)
                vals.append(v)
            rows.append(vals)
    body = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return TabularFile(header, body)


def _column_index(header, column):
    if isinstance(column, (int, np.integer)):
        if not 0 <= column < len(header):
            raise MissingColumnError(column)
        return int(column)
    column = str(column).strip()
    if column in header:
        return header.index(column)
    if column.lstrip("-").isdigit():
        return _column_index(header, int(column))
    raise MissingColumnError(column)


def ingest_csv(path, response, row_range=None, drop=()):
    """Load a Dataset from a CSV file.

    Parameters
    ----------
    path : file with a header row and a numeric body
    response : response column, by header name or zero-based index
    row_range : optional ``(start, stop)`` slice over data rows (zero-based,
        stop exclusive)
    drop : further columns to leave out of the predictors

    Predictors are the remaining columns in file order.
    """
    table = read_table(path)
    yi = _column_index(table.header, response)
    dropped = {_column_index(table.header, c) for c in drop}
    keep = [i for i in range(len(table.header)) if i != yi and i not in dropped]
    body = table.rows
    if row_range is not None:
        start, stop = row_range
        body = body[start:stop]
    if body.shape[0] == 0:
        raise CsvFormatError("no data rows selected")
    return Dataset(body[:, keep], body[:, yi])


def write_csv(path, data: Dataset, names=None, response_name="y"):
    names = names or [f"x{i + 1}" for i in range(data.p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + [response_name])
        for xrow, yv in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in xrow] + [repr(float(yv))])


def _r_squared(y, fitted):
    sse = float(np.sum((y - fitted) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        return 0.0, sse, True
    return 1.0 - sse / sst, sse, False


def adjusted_r2(r2, n, degenerate=False):
    if degenerate:
        return 0.0
    return 1.0 - (1.0 - r2) * (n - 1) / (n - 2)


def ols_fit(x, y):
    """Simple least squares of `y` on `x`; returns (intercept, slope, adj_r2).

    A constant response gives slope 0 and an adjusted R^2 of 0.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = x.shape[0]
    if y.shape[0] != n:
        raise DimensionMismatchError("x and y differ in length")
    if n < 3:
        raise InvalidInputError("need at least 3 observations")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if not sxx > 0:
        raise DegenerateRegressorError("regressor is constant")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    r2, _, degenerate = _r_squared(y, intercept + slope * x)
    return intercept, slope, adjusted_r2(r2, n, degenerate)


@dataclass(frozen=True)
class RegressionReport:
    coefficient: float
    intercept: float
    train_adj_r2: float
    test_adj_r2: float
    test_mse: float
    test_rmse: float
    basis: np.ndarray
    eigen_proportions: np.ndarray
    chosen_d: int

    def to_dict(self):
        out = asdict(self)
        out["basis"] = [float(v) for v in self.basis]
        out["eigen_proportions"] = [float(v) for v in self.eigen_proportions]
        return out


def real_data_pipeline(train: Dataset, test: Dataset, cfg: LmopgConfig = LmopgConfig(),
                       cum_prop=0.95, d=None, workers=None) -> RegressionReport:
    """Reduce, choose the dimension, regress on the leading direction, evaluate.

    The dimension is the smallest one whose eigenvalue proportions add up to
    `cum_prop`, unless `d` is given.  The response is regressed on the
    projection onto the first estimated direction.
    """
    if train.p != test.p:
        raise DimensionMismatchError(f"train has p={train.p}, test has p={test.p}")
    s = fit_standardizer(train)
    Z, yt = whiten(train, s)
    field_ = estimate_gradient_field(Z, yt, cfg, workers=workers)
    full = extract_basis(field_, train.p)
    props = eigenvalue_proportions(full.eigenvalues)
    chosen = choose_dimension(full.eigenvalues, cum_prop) if d is None else int(d)
    if not 1 <= chosen <= train.p:
        raise InvalidInputError(f"d must be between 1 and {train.p}")
    cols = unwhiten_basis(full.columns[:, :chosen], s)
    beta = cols[:, 0]
    intercept, slope, train_adj = ols_fit(train.X @ beta, train.y)
    pred = intercept + slope * (test.X @ beta)
    resid = test.y - pred
    mse = float(np.mean(resid ** 2))
    r2, _, degenerate = _r_squared(test.y, pred)
    return RegressionReport(
        coefficient=slope,
        intercept=intercept,
        train_adj_r2=train_adj,
        test_adj_r2=adjusted_r2(r2, test.n, degenerate),
        test_mse=mse,
        test_rmse=math.sqrt(mse),
        basis=beta.copy(),
        eigen_proportions=props,
        chosen_d=chosen,
    )


def with_bandwidths(cfg: LmopgConfig, h1=None, h2=None):
    bw = cfg.bandwidths
    return replace(cfg, bandwidths=type(bw)(bw.h1 if h1 is None else h1,
                                            bw.h2 if h2 is None else h2))
