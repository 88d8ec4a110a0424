"""Simulation models, predictor laws and the Monte Carlo driver.

Each replicate draws from its own generator, seeded from
``SeedSequence(spec.seed, spawn_key=(replicate,))``, so replicates can run
in any order or on any number of workers and still give the same numbers.
All methods in a cell see the same simulated dataset.
"""
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .baselines import SirConfig, mean_opg, sir
from .dataset import Dataset
from .errors import InvalidInputError, ModalSDRError
from .kernels import Bandwidths
from .metrics import trace_correlation
from .modal_opg import LmopgConfig, lmopg

METHODS = ("lmopg", "meanopg", "sir")
CSV_COLUMNS = ("model", "dist", "n", "method", "avg_R", "sd_R", "reps", "failures")


class Model(str, Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"
    A5 = "A5"
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"


class PredDist(str, Enum):
    NORMAL = "Normal"
    CHISQ1 = "ChiSq1"
    EXP1 = "Exp1"
    F_5_10 = "F_5_10"
    GAMMA_3_1_5 = "Gamma_3_1_5"

    @classmethod
    def parse(cls, name):
        key = str(name).replace("-", "_").lower()
        for member in cls:
            if key in (member.value.lower(), member.name.lower()):
                return member
        aliases = {"chisq": cls.CHISQ1, "exp": cls.EXP1, "f": cls.F_5_10, "gamma": cls.GAMMA_3_1_5}
        if key in aliases:
            return aliases[key]
        raise InvalidInputError(f"unknown predictor distribution {name!r}")


def bandwidth_preset(dist):
    """Bandwidth used for both h1 and h2 under each predictor law."""
    dist = PredDist.parse(dist) if not isinstance(dist, PredDist) else dist
    if dist is PredDist.NORMAL:
        return 1.0
    if dist is PredDist.CHISQ1:
        return 7.0
    return 8.0


@dataclass(frozen=True, eq=False)
class SimSpec:
    model: Model
    n: int
    p: int = 10
    pred_dist: PredDist = PredDist.NORMAL
    sigma: float = 0.5
    beta1: np.ndarray | None = None
    beta2: np.ndarray | None = None
    seed: int = 0
    noise: str = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if not isinstance(self.pred_dist, PredDist):
            object.__setattr__(self, "pred_dist", PredDist.parse(self.pred_dist))
        if self.n < self.p + 2:
            raise InvalidInputError(f"n={self.n} must be at least p + 2 = {self.p + 2}")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be non-negative")
        if self.noise not in ("mixture", "normal"):
            raise InvalidInputError(f"unknown noise law {self.noise!r}")
        eye = np.eye(self.p)
        b1 = eye[0] if self.beta1 is None else np.asarray(self.beta1, dtype=float)
        b2 = eye[1] if self.beta2 is None else np.asarray(self.beta2, dtype=float)
        if b1.shape != (self.p,) or b2.shape != (self.p,):
            raise InvalidInputError("beta1 and beta2 must be p-vectors")
        if np.linalg.matrix_rank(np.column_stack([b1, b2])) < 2:
            raise InvalidInputError("beta1 and beta2 must be linearly independent")
        object.__setattr__(self, "beta1", b1)
        object.__setattr__(self, "beta2", b2)

    @property
    def truth(self):
        return np.column_stack([self.beta1, self.beta2])


def replicate_rng(seed, replicate):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_mixture_error(rng, count):
    """Draws from 0.5 N(-1, 1) + 0.5 N(1, 0.25) (second component sd 0.5)."""
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    pick = rng.random(count) < 0.5
    left = rng.normal(-1.0, 1.0, count)
    right = rng.normal(1.0, 0.5, count)
    return np.where(pick, left, right)


def mixture_density(x):
    x = np.asarray(x, dtype=float)
    left = np.exp(-0.5 * (x + 1.0) ** 2) / math.sqrt(2 * math.pi)
    right = np.exp(-0.5 * ((x - 1.0) / 0.5) ** 2) / (0.5 * math.sqrt(2 * math.pi))
    return 0.5 * left + 0.5 * right


def sample_predictors(rng, spec: SimSpec):
    size = (spec.n, spec.p)
    dist = spec.pred_dist
    if dist is PredDist.NORMAL:
        return rng.standard_normal(size)
    if dist is PredDist.CHISQ1:
        return rng.chisquare(1.0, size)
    if dist is PredDist.EXP1:
        return rng.exponential(1.0, size)
    if dist is PredDist.F_5_10:
        return rng.f(5.0, 10.0, size)
    if dist is PredDist.GAMMA_3_1_5:
        return rng.gamma(3.0, 1.5, size)
    raise InvalidInputError(f"unsupported distribution {dist!r}")


def model_response(model, u1, u2, eps, sigma=0.5):
    """Response of `model` given the two indices and the noise draws."""
    model = Model(model)
    if model is Model.A1:
        return u1 + u2 * eps
    if model is Model.A2:
        return 2.0 * np.sin(1.4 * u1) + (u2 + 1.0) ** 2 * eps
    if model is Model.A3:
        return u1 / (0.5 + (u2 + 1.5) ** 2) + sigma * eps
    if model is Model.A4:
        return u1 * (u2 + 1.0) + sigma * eps
    if model is Model.A5:
        return 0.4 * u1 + 3.0 * np.sin(u1 * u2 / 4.0) + sigma * eps
    if model is Model.B1:
        return np.sqrt(np.abs(4.0 + u1)) * np.sqrt(np.abs(2.0 + u2)) + sigma * eps
    if model is Model.B2:
        return np.sqrt(np.abs(u1)) + np.sqrt(np.abs(u2 * eps)) + sigma * eps
    if model is Model.B3:
        return 0.4 * u1 + 3.0 * np.sin(u2 / 4.0) + sigma * eps
    raise InvalidInputError(f"unknown model {model!r}")


def generate(rng, spec: SimSpec) -> Dataset:
    X = sample_predictors(rng, spec)
    if spec.noise == "mixture":
        eps = sample_mixture_error(rng, spec.n)
    else:
        eps = rng.standard_normal(spec.n)
    y = model_response(spec.model, X @ spec.beta1, X @ spec.beta2, eps, spec.sigma)
    return Dataset(X, y)


# ---------------------------------------------------------------------------
# Monte Carlo driver


@dataclass(frozen=True)
class McRow:
    model: str
    dist: str
    n: int
    method: str
    avg_R: float
    sd_R: float
    reps: int
    failures: int
    values: tuple = field(default=(), repr=False)

    @property
    def single_replicate(self):
        return self.reps - self.failures == 1

    @property
    def failed(self):
        return self.failures == self.reps

    def record(self):
        return {
            "model": self.model,
            "dist": self.dist,
            "n": self.n,
            "method": self.method,
            "avg_R": _fmt(self.avg_R),
            "sd_R": _fmt(self.sd_R),
            "reps": self.reps,
            "failures": self.failures,
        }


def _fmt(x):
    return "nan" if not np.isfinite(x) else f"{x:.6f}"


@dataclass(frozen=True)
class McReport:
    rows: tuple

    def row(self, model, dist, n, method):
        model = Model(model).value
        dist = PredDist.parse(dist).value
        for r in self.rows:
            if (r.model, r.dist, r.n, r.method) == (model, dist, n, method):
                return r
        raise KeyError((model, dist, n, method))

    def to_csv(self):
        out = io.StringIO()
        out.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            rec = r.record()
            out.write(",".join(str(rec[c]) for c in CSV_COLUMNS) + "\n")
        return out.getvalue()

    def to_structured(self):
        # newline-delimited JSON, one record per cell
        return "".join(json.dumps(r.record()) + "\n" for r in self.rows)


def _estimate(method, data, bw, d, max_iter, tol):
    if method == "lmopg":
        cfg = LmopgConfig(bandwidths=bw, d=d, max_iter=max_iter, tol=tol)
        return lmopg(data, cfg, workers=1).basis.columns
    if method == "meanopg":
        return mean_opg(data, LmopgConfig(bandwidths=bw, d=d), workers=1).columns
    if method == "sir":
        return sir(data, SirConfig(num_slices=10, d=d)).columns
    raise InvalidInputError(f"unknown method {method!r}")


def _run_replicate(task):
    spec, rep, methods, bw, max_iter, tol = task
    data = generate(replicate_rng(spec.seed, rep), spec)
    out = []
    for method in methods:
        try:
            B = _estimate(method, data, bw, 2, max_iter, tol)
            out.append(trace_correlation(B, spec.truth))
        except ModalSDRError:
            out.append(None)
    return out


def resolve_bandwidths(dist, h1=None, h2=None):
    preset = bandwidth_preset(dist)
    return Bandwidths(preset if h1 is None else h1, preset if h2 is None else h2)


def run_monte_carlo(grid, methods=("lmopg",), replicates=100, h1=None, h2=None,
                    workers=1, max_iter=100, tol=1e-6):
    """Trace correlation of each method against span{beta1, beta2} (d = 2).

    Parameters
    ----------
    grid : iterable of SimSpec
    methods : subset of ("lmopg", "meanopg", "sir")
    replicates : replicates per cell
    h1, h2 : bandwidth overrides; by default 1 for normal predictors, 7 for
        chi-square and 8 for the other laws, used for both bandwidths.
    workers : number of processes; results do not depend on it.

    Failed estimates are counted per cell and left out of the averages.  A
    cell where every replicate failed reports NaN statistics.
    """
    grid = list(grid)
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise InvalidInputError(f"unknown method {m!r}; choose from {METHODS}")
    if replicates < 1:
        raise InvalidInputError("replicates must be >= 1")
    tasks = []
    for spec in grid:
        bw = resolve_bandwidths(spec.pred_dist, h1, h2)
        tasks.extend((spec, rep, methods, bw, max_iter, tol) for rep in range(replicates))

    if workers is None or workers <= 1:
        results = [_run_replicate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replicate, tasks, chunksize=1))

    rows = []
    for c, spec in enumerate(grid):
        chunk = results[c * replicates:(c + 1) * replicates]
        for k, method in enumerate(methods):
            vals = [r[k] for r in chunk if r[k] is not None]
            failures = replicates - len(vals)
            if not vals:
                avg, sd = float("nan"), float("nan")
            elif len(vals) == 1:
                avg, sd = float(vals[0]), 0.0
            else:
                avg, sd = float(np.mean(vals)), float(np.std(vals, ddof=1))
            rows.append(McRow(spec.model.value, spec.pred_dist.value, spec.n, method,
                              avg, sd, replicates, failures, tuple(vals)))
    return McReport(tuple(rows))
