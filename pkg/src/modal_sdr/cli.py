"""Command-line entry point: ``modal-sdr {simulate,estimate,pipeline}``."""
import argparse
import json
import sys

import numpy as np

from .baselines import SirConfig, sir
from .errors import ModalSDRError
from .kernels import Bandwidths
from .modal_opg import LmopgConfig, default_workers, eigenvalue_proportions, lmopg, mean_opg_config
from .pipeline import ingest_csv, real_data_pipeline
from .simulation import METHODS, Model, PredDist, SimSpec, run_monte_carlo

EXIT_STAGE = 1
EXIT_USAGE = 2
EXIT_IO = 3


class StageError(Exception):
    def __init__(self, stage, cause, code=EXIT_STAGE):
        self.stage = stage
        self.cause = cause
        self.code = code
        super().__init__(f"{stage} failed: {cause}")


class UsageError(Exception):
    pass


def _csv_list(text, convert=str):
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    try:
        return [convert(t) for t in items]
    except (ValueError, ModalSDRError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _row_range(text):
    try:
        start, stop = text.split(":")
        return (int(start) if start else None, int(stop) if stop else None)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP, got {text!r}") from None


def _positive(conv):
    def check(text):
        v = conv(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return check


def build_parser():
    parser = argparse.ArgumentParser(prog="modal-sdr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo trace-correlation campaign")
    sim.add_argument("--models", type=lambda t: _csv_list(t, Model), default=[Model.A1])
    sim.add_argument("--dists", type=lambda t: _csv_list(t, PredDist.parse),
                     default=[PredDist.NORMAL])
    sim.add_argument("--n-list", type=lambda t: _csv_list(t, int), default=[200, 300, 500])
    sim.add_argument("--methods", type=_csv_list, default=["lmopg"])
    sim.add_argument("--reps", type=_positive(int), default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--p", type=_positive(int), default=10)
    sim.add_argument("--sigma", type=float, default=0.5)
    sim.add_argument("--h1", type=_positive(float))
    sim.add_argument("--h2", type=_positive(float))
    sim.add_argument("--workers", type=_positive(int))
    sim.add_argument("--out")
    sim.add_argument("--format", choices=("csv", "structured"), default="csv")

    def estimator_flags(p):
        p.add_argument("--input", required=True)
        p.add_argument("--response", required=True)
        p.add_argument("--drop", type=_csv_list, default=[])
        p.add_argument("--h1", type=_positive(float))
        p.add_argument("--h2", type=_positive(float))
        p.add_argument("--max-iter", type=int, default=100)
        p.add_argument("--tol", type=_positive(float), default=1e-6)
        p.add_argument("--out")

    est = sub.add_parser("estimate", help="estimate a basis from a CSV dataset")
    estimator_flags(est)
    est.add_argument("--d", type=_positive(int), default=1)
    est.add_argument("--method", choices=METHODS, default="lmopg")
    est.add_argument("--rows", type=_row_range)
    est.add_argument("--slices", type=_positive(int), default=10)

    pipe = sub.add_parser("pipeline", help="reduce, regress and evaluate on a train/test split")
    estimator_flags(pipe)
    pipe.add_argument("--train-rows", type=_row_range, required=True)
    pipe.add_argument("--test-rows", type=_row_range, required=True)
    pipe.add_argument("--cum-prop", type=float)
    pipe.add_argument("--d", type=_positive(int))
    return parser


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise StageError("write", f"cannot write {out}: {exc.strerror}", EXIT_IO) from exc


def _ingest(path, response, rows=None, drop=()):
    try:
        return ingest_csv(path, response, row_range=rows, drop=drop)
    except OSError as exc:
        raise StageError("ingest", f"cannot read {path}: {exc.strerror}", EXIT_IO) from exc
    except ModalSDRError as exc:
        raise StageError("ingest", exc) from exc


def _lmopg_config(args, d):
    bw = Bandwidths(args.h1 or 1.0, args.h2 or 1.0)
    return LmopgConfig(bandwidths=bw, d=d, max_iter=args.max_iter, tol=args.tol)


def cmd_simulate(args):
    bad = [m for m in args.methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method(s) {', '.join(bad)}; choose from {', '.join(METHODS)}")
    try:
        grid = [SimSpec(model, n, p=args.p, pred_dist=dist, sigma=args.sigma, seed=args.seed)
                for model in args.models for dist in args.dists for n in args.n_list]
        report = run_monte_carlo(grid, args.methods, args.reps, h1=args.h1, h2=args.h2,
                                 workers=args.workers or default_workers())
    except ModalSDRError as exc:
        raise StageError("simulate", exc) from exc
    text = report.to_csv() if args.format == "csv" else report.to_structured()
    _emit(text, args.out)


def cmd_estimate(args):
    if args.method == "sir" and (args.h1 is not None or args.h2 is not None):
        raise UsageError("--h1/--h2 conflict with --method sir, which uses no bandwidths")
    data = _ingest(args.input, args.response, args.rows, args.drop)
    try:
        if args.method == "sir":
            basis = sir(data, SirConfig(num_slices=args.slices, d=args.d))
            diagnostics = {"n": data.n, "p": data.p}
        else:
            cfg = _lmopg_config(args, args.d)
            if args.method == "meanopg":
                cfg = mean_opg_config(cfg)
            res = lmopg(data, cfg)
            basis = res.basis
            fits = res.field.fits
            diagnostics = {
                "n": data.n,
                "p": data.p,
                "anchors": len(fits),
                "failed_anchors": res.field.n_failed,
                "converged_anchors": sum(f.converged for f in fits),
                "regularized_anchors": sum(f.regularized for f in fits),
                "mean_iterations": float(np.mean([f.iterations for f in fits])),
            }
        props = eigenvalue_proportions(basis.eigenvalues)
    except ModalSDRError as exc:
        raise StageError("estimate", exc) from exc
    diagnostics["warning"] = basis.warning
    payload = {
        "method": args.method,
        "d": basis.d,
        "basis": [[float(v) for v in col] for col in basis.columns.T],
        "eigenvalues": [float(v) for v in basis.eigenvalues],
        "eigen_proportions": [float(v) for v in props],
        "diagnostics": diagnostics,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)


def cmd_pipeline(args):
    if args.d is not None and args.cum_prop is not None:
        raise UsageError("--d and --cum-prop are mutually exclusive")
    cum_prop = 0.95 if args.cum_prop is None else args.cum_prop
    if not 0 < cum_prop <= 1:
        raise UsageError("--cum-prop must lie in (0, 1]")
    train = _ingest(args.input, args.response, args.train_rows, args.drop)
    test = _ingest(args.input, args.response, args.test_rows, args.drop)
    try:
        report = real_data_pipeline(train, test, _lmopg_config(args, 1),
                                    cum_prop=cum_prop, d=args.d)
    except ModalSDRError as exc:
        raise StageError("pipeline", exc) from exc
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "pipeline": cmd_pipeline}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except StageError as exc:
        print(f"modal-sdr: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
