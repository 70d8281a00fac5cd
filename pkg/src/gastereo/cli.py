"""Command-line front end: ``gastereo {match,gradcheck,train,bench,eval}``.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error,
3 numeric or gradcheck failure, 4 training divergence.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import bench, gradcheck, io, lga, sga
from .classical import FilterKernel, SgmParams, cost_filter, sgm
from .errors import (
    ConfigError, DimensionError, EmptyGroundTruthError, NumericError, ParseError, StereoError,
    TrainingError, WriteError,
)
from .head import disparity_regress, evaluate
from .matching import MatchConfig, build_cost_volume
from .trainer import GuidanceLogits, TrainConfig, forward, make_scene, train

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC, EXIT_DIVERGED = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _thresholds(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty threshold list")
    return values


def build_parser():
    p = _Parser(prog="gastereo", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, thresholds=True):
        sp.allow_abbrev = False
        if thresholds:
            sp.add_argument("--thresholds", type=_thresholds, default=[1.0, 3.0],
                            help="comma-separated error thresholds in pixels")

    m = sub.add_parser("match", help="compute a disparity map for a rectified PGM pair")
    common(m)
    m.add_argument("left")
    m.add_argument("right")
    m.add_argument("--out", required=True, help="output PFM path")
    m.add_argument("--dmax", type=int, default=64)
    m.add_argument("--method", choices=("sgm", "ga", "filter"), default="sgm")
    m.add_argument("--p1", type=float, default=0.1)
    m.add_argument("--p2", type=float, default=0.5)
    m.add_argument("--sga-layers", type=int, default=3)
    m.add_argument("--lga", action="store_true")
    m.add_argument("--weights", help="learned logits written by `train`")
    m.add_argument("--gt", help="ground-truth PFM; prints metrics when given")
    m.add_argument("--cost-scale", type=float, default=16.0, help="gain applied before soft-argmin")
    m.add_argument("--workers", type=int, default=1, help="threads for the SGA scans")

    g = sub.add_parser("gradcheck", help="finite-difference checks of all backward passes")
    common(g, thresholds=False)
    g.add_argument("--seed", type=int, default=0, help="first random seed; three instances per suite")

    t = sub.add_parser("train", help="learn guidance logits on a synthetic scene")
    common(t)
    t.add_argument("--out", required=True, help="weight file to write")
    t.add_argument("--dmax", type=int, default=16)
    t.add_argument("--sga-layers", type=int, default=3)
    t.add_argument("--lga", action="store_true")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--steps", type=int, default=60)
    t.add_argument("--lr", type=float, default=2000.0)
    t.add_argument("--height", type=int, default=64)
    t.add_argument("--width", type=int, default=96)
    t.add_argument("--band", type=int, default=16)
    t.add_argument("--workers", type=int, default=1)

    b = sub.add_parser("bench", help="FLOP table and kernel timings")
    common(b, thresholds=False)
    b.add_argument("--repetitions", type=int, default=5)
    b.add_argument("--no-timing", action="store_true")

    e = sub.add_parser("eval", help="compare a predicted PFM against ground truth")
    common(e)
    e.add_argument("pred")
    e.add_argument("gt")
    return p


def _print_metrics(metrics, out, prefix=""):
    print(f"{prefix}EPE {metrics.epe:.6f} px", file=out)
    for t, rate in sorted(metrics.error_rate.items()):
        print(f"{prefix}>{t:g}px {100 * rate:.3f} %", file=out)
    for name, value in metrics.records():
        print(f"#METRIC {prefix.strip() or 'all'} {name}={value:.9g}", file=out)


def _atomic_write(path, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".partial-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        io.remove_quietly(tmp)
        raise


def _match(args, out):
    if args.dmax < 2:
        raise ConfigError("--dmax must be >= 2")
    left, right = io.read_pgm(args.left), io.read_pgm(args.right)
    gt = io.read_pfm(args.gt) if args.gt else None
    cost = build_cost_volume(left, right, MatchConfig(args.dmax, "census"))
    H, W = left.shape
    if args.method == "sgm":
        aggregated = sgm(cost, SgmParams(args.p1, args.p2))
        disp, _ = disparity_regress(aggregated * args.cost_scale)
    elif args.method == "filter":
        aggregated = cost_filter(cost, FilterKernel.uniform(H, W, 5))
        disp, _ = disparity_regress(aggregated * args.cost_scale)
    else:
        if args.weights:
            sga_logits, lga_logits = io.load_logits(args.weights)
            logits = GuidanceLogits(sga_logits, lga_logits)
            if any(a.shape[2:4] != (H, W) for a in logits.sga):
                raise DimensionError(f"weight file does not match a {H}x{W} image")
        else:
            if not 0 <= args.sga_layers <= 4:
                raise ConfigError("--sga-layers must be in 0..4")
            logits = GuidanceLogits.initial(H, W, args.sga_layers, args.lga)
        disp, _ = forward(cost, logits, args.cost_scale, workers=args.workers)
    _atomic_write(args.out, io.encode_pfm(disp))
    print(f"wrote {args.out} ({H}x{W}, method={args.method})", file=out)
    if gt is not None:
        _print_metrics(evaluate(disp, gt, args.thresholds), out)
    return EXIT_OK


def _gradcheck(args, out):
    results = gradcheck.run_all(seed=args.seed)
    for r in results:
        print(r.line(), file=out)
        print(f"#METRIC gradcheck {r.name} max_rel_err={r.max_rel_error:.6e} passed={int(r.passed)}", file=out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def _train(args, out):
    scene = make_scene(args.height, args.width, args.seed, args.band, d_max=args.dmax)
    cfg = TrainConfig(sga_layers=args.sga_layers, use_lga=args.lga, steps=args.steps, lr=args.lr, seed=args.seed)
    result = train(scene, cfg, workers=args.workers)
    for rec in result.history:
        print(f"#METRIC train {rec.line()}", file=out)
    buf = tempfile.NamedTemporaryFile(delete=False)
    buf.close()
    try:
        io.save_logits(buf.name, result.logits.sga, result.logits.lga)
        with open(buf.name, "rb") as fh:
            _atomic_write(args.out, fh.read())
    finally:
        io.remove_quietly(buf.name)
    _print_metrics(result.metrics, out)
    if result.ambiguous is not None:
        _print_metrics(result.ambiguous, out, prefix="ambiguous ")
    return EXIT_OK


def _bench(args, out):
    timings = {}
    if not args.no_timing:
        for kind, shape in (("sga", (32, 32, 16, 1)), ("sga", (32, 64, 16, 1)), ("lga", (32, 32, 16, 1))):
            timings[f"{kind}_{'x'.join(map(str, shape))}"] = bench.time_kernel(kind, shape, args.repetitions)
    print(bench.report(timings=timings), file=out)
    return EXIT_OK


def _eval(args, out):
    _print_metrics(evaluate(io.read_pfm(args.pred), io.read_pfm(args.gt), args.thresholds), out)
    return EXIT_OK


COMMANDS = {"match": _match, "gradcheck": _gradcheck, "train": _train, "bench": _bench, "eval": _eval}


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE
    except (OSError, ParseError, WriteError) as exc:
        print(f"I/O error: {exc}", file=err)
        return EXIT_IO
    except TrainingError as exc:
        print(f"training diverged: {exc}", file=err)
        return EXIT_DIVERGED
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=err)
        return EXIT_NUMERIC
    except (ConfigError, DimensionError, EmptyGroundTruthError) as exc:
        print(f"invalid input: {exc}", file=err)
        return EXIT_USAGE
    except StereoError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
