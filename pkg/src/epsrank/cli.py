"""
Command-line front end (``epsrank``).

Every option can also be supplied through an environment variable named
``NLR_`` plus the option's destination in upper case, e.g. ``NLR_EPS=1e-6``
or ``NLR_OUT_PREFIX=run1``. Explicit flags win over the environment.

Exit codes: 0 success, 2 bad arguments or config, 3 malformed input file,
4 numerical failure.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .apps import denoise_stack, dense_ridge_fit, hkb_lambda, prediction_mse, ridge_fit
from .bench import aggregate, bench_run, load_config, write_aggregate, write_records
from .datagen import (
    load_stack,
    multicollinear_regression,
    near_low_rank,
    save_stack,
    synthetic_stack,
)
from .errors import (
    ConfigError,
    DecompositionError,
    FormatError,
    InternalConsistencyError,
    InvalidArgumentError,
    UndefinedMetricError,
)
from .gri import gri_left, gri_right, materialize, save_inverse
from .grsvd import grsvd, save_svd
from .matcore import RngStream
from .matio import read_matrix, write_matrix
from .rangefinder import write_diag_trace

EXIT_OK, EXIT_ARGS, EXIT_FORMAT, EXIT_NUMERIC = 0, 2, 3, 4
ENV_PREFIX = "NLR_"


def _lambda_arg(text):
    if text == "auto":
        return text
    return float(text)


def _common(p, block=True):
    p.add_argument("--eps", type=float, default=1e-6, help="precision target in [0, 1)")
    if block:
        p.add_argument("--block", type=int, default=None, help="range-finder block size")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="epsrank", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic instance")
    g.add_argument("--family", choices=["near_low_rank", "multicollinear", "stack"],
                   default="near_low_rank")
    g.add_argument("--m", type=int, default=500)
    g.add_argument("--n", type=int, default=400)
    g.add_argument("--r", type=int, default=50, help="planted rank (motion rank for stacks)")
    g.add_argument("--tail", type=float, default=1e-8)
    g.add_argument("--noise", type=float, default=None,
                   help="noise sigma (regression, default 0.05) or level (stack, default 5)")
    g.add_argument("--height", type=int, default=112)
    g.add_argument("--width", type=int, default=112)
    g.add_argument("--frames", type=int, default=141)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output .nlrm path")

    s = sub.add_parser("svd", help="precision-driven truncated SVD")
    s.add_argument("--in", dest="input", required=True)
    _common(s)
    s.add_argument("--method", choices=["gram", "svd"], default="gram")
    s.add_argument("--out-prefix", required=True)
    s.add_argument("--trace", default=None, help="write the QR diagonal trace as CSV")

    v = sub.add_parser("inv", help="approximate (lambda I + A A^H)^-1 or (lambda I + A^H A)^-1")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--side", choices=["left", "right"], default="left")
    v.add_argument("--lambda", dest="lam", type=float, default=1.0)
    _common(v)
    v.add_argument("--out-prefix", required=True)
    v.add_argument("--materialize", default=None, help="also write the dense inverse here")

    d = sub.add_parser("denoise", help="low-rank denoising of a frame stack")
    d.add_argument("--in-stack", required=True)
    d.add_argument("--out-stack", required=True)
    d.add_argument("--report", default=None, help="JSON report path (default: stdout)")
    _common(d)
    d.set_defaults(eps=0.05)

    rg = sub.add_parser("ridge", help="ridge regression through the approximate inverse")
    rg.add_argument("--x", required=True)
    rg.add_argument("--y", required=True)
    rg.add_argument("--lambda", dest="lam", type=_lambda_arg, default="auto",
                    help="'auto' for the HKB estimate, or a positive value")
    _common(rg)
    rg.add_argument("--pilot", choices=["grsvd", "dense", "ols"], default="grsvd")
    rg.add_argument("--intercept", action="store_true")
    rg.add_argument("--compare-dense", action="store_true",
                    help="also solve densely and report both prediction errors")
    rg.add_argument("--out", default=None, help="coefficient output (.nlrm or .csv)")

    b = sub.add_parser("bench", help="run a benchmark config")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True, help="per-run CSV")
    b.add_argument("--aggregate", default=None, help="aggregated CSV")
    b.add_argument("--jobs", type=int, default=1)

    for p in (g, s, v, d, rg, b):
        _apply_env(p)
    return parser


def _apply_env(p):
    for action in p._actions:
        if not action.option_strings or action.dest in ("help", "version"):
            continue
        key = ENV_PREFIX + action.dest.upper()
        if key not in os.environ:
            continue
        raw = os.environ[key]
        if isinstance(action, argparse._StoreTrueAction):
            action.default = raw.lower() in ("1", "true", "yes", "on")
        else:
            action.default = raw
        action.required = False


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, default=float)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_gen(a):
    stream = RngStream(a.seed, 0)
    if a.family == "stack":
        noise = 5.0 if a.noise is None else a.noise
        S = synthetic_stack(a.height, a.width, a.frames, a.r, noise, stream)
        save_stack(a.out, S)
        meta = {"family": "stack", "height": a.height, "width": a.width, "frames": a.frames,
                "motion_rank": a.r, "noise": noise, "seed": a.seed}
    elif a.family == "near_low_rank":
        A, sv = near_low_rank(a.m, a.n, a.r, a.tail, stream, return_spectrum=True)
        write_matrix(a.out, A)
        meta = {"family": a.family, "m": a.m, "n": a.n, "r": a.r, "tail": a.tail,
                "seed": a.seed, "spectrum": sv.tolist()}
    else:
        noise = 0.05 if a.noise is None else a.noise
        inst = multicollinear_regression(a.m, a.n, a.r, noise, a.tail, stream)
        stem = os.path.splitext(a.out)[0]
        write_matrix(a.out, inst.X)
        write_matrix(stem + "_y.nlrm", inst.y[:, None])
        write_matrix(stem + "_beta.nlrm", inst.beta_true[:, None])
        meta = {"family": a.family, "m": a.m, "n": a.n, "r_eps": a.r, "tail": a.tail,
                "noise_sigma": noise, "seed": a.seed,
                "spectrum": inst.singular_values.tolist()}
    with open(os.path.splitext(a.out)[0] + ".jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta) + "\n")
    return EXIT_OK


def cmd_svd(a):
    A = read_matrix(a.input)
    F = grsvd(A, a.eps, a.block, RngStream(a.seed, 1), method=a.method)
    save_svd(a.out_prefix, F)
    if a.trace:
        write_diag_trace(a.trace, F.basis)
    _emit({"k": F.k, "eps": a.eps, "terminated_early": F.basis.terminated_early,
           "sigma_head": F.sigma[:10].tolist()})
    return EXIT_OK


def cmd_inv(a):
    A = read_matrix(a.input)
    build = gri_left if a.side == "left" else gri_right
    P = build(A, a.lam, a.eps, a.block, RngStream(a.seed, 1))
    save_inverse(a.out_prefix, P)
    if a.materialize:
        write_matrix(a.materialize, materialize(P))
    _emit({"side": a.side, "lambda": a.lam, "k": P.k, "order": P.size})
    return EXIT_OK


def cmd_denoise(a):
    S = load_stack(a.in_stack)
    out, rep = denoise_stack(S, a.eps, a.block, RngStream(a.seed, 1))
    save_stack(a.out_stack, out)
    _emit(asdict(rep), a.report)
    return EXIT_OK


def _vector(path):
    v = read_matrix(path)
    if 1 not in v.shape:
        raise InvalidArgumentError(f"{path} holds a {v.shape[0]}x{v.shape[1]} matrix, not a vector")
    return v.reshape(-1)


def cmd_ridge(a):
    X = read_matrix(a.x)
    y = _vector(a.y)
    lam = a.lam
    if lam == "auto":
        lam = hkb_lambda(X, y, a.eps, a.block, RngStream(a.seed, 1), pilot=a.pilot,
                         intercept=a.intercept)
    beta = ridge_fit(X, y, lam, a.eps, a.block, RngStream(a.seed, 2), intercept=a.intercept)
    result = {"lambda": lam, "prediction_mse": prediction_mse(X, y, beta, a.intercept)}
    if a.compare_dense:
        bd = dense_ridge_fit(X, y, lam, intercept=a.intercept)
        result["dense_prediction_mse"] = prediction_mse(X, y, bd, a.intercept)
    if a.out:
        write_matrix(a.out, np.real_if_close(beta)[:, None])
    _emit(result)
    return EXIT_OK


def cmd_bench(a):
    experiments = load_config(a.config)
    records = bench_run(experiments, jobs=a.jobs)
    write_records(a.out, records)
    if a.aggregate:
        write_aggregate(a.aggregate, aggregate(records))
    print(f"{len(records)} records written to {a.out}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "svd": cmd_svd, "inv": cmd_inv, "denoise": cmd_denoise,
            "ridge": cmd_ridge, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ARGS
    try:
        return COMMANDS[args.command](args)
    except FormatError as exc:
        print(f"epsrank: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (InvalidArgumentError, ConfigError, OSError) as exc:
        print(f"epsrank: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (DecompositionError, InternalConsistencyError, UndefinedMetricError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"epsrank: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
