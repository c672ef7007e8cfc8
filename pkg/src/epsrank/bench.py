"""
Benchmark harness.

A config file is INI-style text: one ``[section]`` per experiment, ``key =
value`` lines, ``#`` or ``;`` comments. List-valued keys take comma
separated values. Recognised keys::

    family        near_low_rank (default) | multicollinear
    m, n          matrix size (required)
    r             planted rank(s) (required, list)
    eps           precision(s) (required, list)
    methods       subset of METHODS (required, list)
    tail          tail scale of the planted spectrum (default 1e-8)
    block         range-finder block size (default min(32, n - 1))
    trials        repetitions per (r, eps) cell (default 1)
    seed          base seed (default 0)
    lambda        regularization for the inverse methods (default 1.0)
    side          left | right, used by dense-inverse (default left)
    oversampling  extra RSVD samples (default 0)
    rsvd_fraction RSVD rank as a fraction of min(m, n); default is the
                  oracle eps-rank
    probes        ARRF probe window (default 10)

Every (section, r, eps, trial) cell draws one instance from stream id
``2 * cell`` and runs every method with stream id ``2 * cell + 1``, so the
methods see the same matrix and the same Gaussian draws. Timings cover the
method call only.
"""

import configparser
import csv
import math
import re
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np
import scipy.linalg as la

from .baselines import arrf, randqb_ei, rsvd_fixed_rank
from .datagen import multicollinear_regression, near_low_rank
from .errors import ConfigError
from .gri import dense_inverse, gri_left, gri_right, materialize
from .grsvd import SvdApprox, grsvd, svd_from_basis
from .matcore import RngStream, count_flops, frobenius_norm, matmul
from .metrics import eps_rank_from_spectrum, energy_ratio, svd_report
from .rangefinder import resolve_block

METHODS = ("GRSVD", "RSVD", "ARRF", "randQB-EI", "dense-SVD",
           "GRI-left", "GRI-right", "dense-inverse")
SVD_METHODS = METHODS[:5]
FAMILIES = ("near_low_rank", "multicollinear")


@dataclass
class BenchRecord:
    experiment: str
    method: str
    m: int
    n: int
    r: int
    trial: int
    eps: float
    block: int
    seed: int
    r_eps: int
    k_detected: int
    e_mse: float
    e_sigma: float
    e_u: float
    e_v: float
    energy_ratio: float
    wall_seconds: float
    flop_proxy: int
    oversampling: int
    lam: float


RECORD_COLUMNS = [f.name for f in fields(BenchRecord)]
AGGREGATE_COLUMNS = ["experiment", "r", "eps", "method", "E_MSE", "E_Sigma", "max_EU_EV",
                     "k_mean", "wall_mean", "wall_median", "flop_mean", "trials"]


@dataclass
class Experiment:
    name: str
    family: str
    m: int
    n: int
    r: list
    eps: list
    methods: list
    tail: float = 1e-8
    block: int = None
    trials: int = 1
    seed: int = 0
    lam: float = 1.0
    side: str = "left"
    oversampling: int = 0
    rsvd_fraction: float = None
    probes: int = 10


# -- config parsing ------------------------------------------------------------

_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")


def _key_lines(text):
    """Map (section, key) -> 1-based line number."""
    where = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        ms = _SECTION_RE.match(line)
        if ms:
            section = ms.group(1).strip()
            where[(section, None)] = no
            continue
        mk = _KEY_RE.match(line)
        if mk and section is not None:
            where[(section, mk.group(1).strip().lower())] = no
    return where


def parse_config(text):
    """Parse config text into a list of Experiments (in file order)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   strict=True)
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any [section]", line=exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError("duplicate section or key", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line=line) from None
    where = _key_lines(text)
    if not cp.sections():
        raise ConfigError("config defines no experiments")
    return [_experiment(name, cp[name], where) for name in cp.sections()]


def _experiment(name, sec, where):
    def fail(key, msg):
        raise ConfigError(f"[{name}] {msg}", line=where.get((name, key)), field=key)

    def get(key, conv, default=None, required=False, many=False):
        if key not in sec:
            if required:
                raise ConfigError(f"[{name}] missing required key", line=where.get((name, None)),
                                  field=key)
            return default
        raw = sec[key].strip()
        parts = [p.strip() for p in raw.split(",")] if many else [raw]
        try:
            vals = [conv(p) for p in parts if p]
        except ValueError:
            fail(key, f"cannot parse {raw!r}")
        if not vals:
            fail(key, "empty value")
        return vals if many else vals[0]

    known = {"family", "m", "n", "r", "eps", "methods", "tail", "block", "trials", "seed",
             "lambda", "side", "oversampling", "rsvd_fraction", "probes"}
    for key in sec:
        if key not in known:
            fail(key, "unknown key")

    exp = Experiment(
        name=name,
        family=get("family", str, "near_low_rank"),
        m=get("m", int, required=True),
        n=get("n", int, required=True),
        r=get("r", int, required=True, many=True),
        eps=get("eps", float, required=True, many=True),
        methods=get("methods", str, required=True, many=True),
        tail=get("tail", float, 1e-8),
        block=get("block", int),
        trials=get("trials", int, 1),
        seed=get("seed", int, 0),
        lam=get("lambda", float, 1.0),
        side=get("side", str, "left"),
        oversampling=get("oversampling", int, 0),
        rsvd_fraction=get("rsvd_fraction", float),
        probes=get("probes", int, 10),
    )
    if exp.family not in FAMILIES:
        fail("family", f"unknown family {exp.family!r}")
    if not 1 <= exp.n <= exp.m:
        fail("n", "need 1 <= n <= m")
    for r in exp.r:
        if not 1 <= r <= exp.n:
            fail("r", f"rank {r} outside [1, n]")
    for e in exp.eps:
        if not 0 <= e < 1:
            fail("eps", f"eps {e} outside [0, 1)")
    for meth in exp.methods:
        if meth not in METHODS:
            fail("methods", f"unknown method {meth!r}")
    if exp.block is not None and not (1 <= exp.block < exp.n or exp.block == exp.n == 1):
        fail("block", "need 1 <= block < n")
    if exp.trials < 1:
        fail("trials", "need at least one trial")
    if exp.lam <= 0:
        fail("lambda", "must be positive")
    if exp.side not in ("left", "right"):
        fail("side", "must be left or right")
    if exp.oversampling < 0:
        fail("oversampling", "must be nonnegative")
    if exp.rsvd_fraction is not None and not 0 < exp.rsvd_fraction <= 1:
        fail("rsvd_fraction", "must lie in (0, 1]")
    if exp.probes < 1:
        fail("probes", "must be positive")
    return exp


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- running -------------------------------------------------------------------

def _instance(exp, r, stream):
    if exp.family == "near_low_rank":
        return near_low_rank(exp.m, exp.n, r, exp.tail, stream, return_spectrum=True)
    inst = multicollinear_regression(exp.m, exp.n, r, 0.05, exp.tail, stream)
    return inst.X, inst.singular_values


def _qb_to_svd(Q, B, eps):
    W, s, Vh = la.svd(B, full_matrices=False, check_finite=False)
    return SvdApprox(matmul(Q, W), s, Vh, eps)


def _run_svd(method, A, sv, exp, eps, r_eps, block, stream):
    if method == "GRSVD":
        return grsvd(A, eps, block, stream)
    if method == "RSVD":
        ell = r_eps if exp.rsvd_fraction is None else math.ceil(exp.rsvd_fraction * min(A.shape))
        return rsvd_fixed_rank(A, max(ell, 1), stream, oversampling=exp.oversampling)
    if method == "ARRF":
        basis = arrf(A, math.sqrt(eps) * frobenius_norm(A), exp.probes, stream)
        return svd_from_basis(A, basis.Q, eps)
    if method == "randQB-EI":
        Q, B, _ = randqb_ei(A, eps, block, stream)
        return _qb_to_svd(Q, B, eps)
    U, s, Vh = la.svd(A, full_matrices=False, check_finite=False)
    return SvdApprox(U, s, Vh, eps)


def _timed(fn):
    with count_flops() as fc:
        t0 = time.perf_counter()
        out = fn()
        wall = time.perf_counter() - t0
    return out, wall, fc.volume


def run_cell(exp, r, eps, trial, cell):
    """All methods of one experiment cell; returns a list of BenchRecords."""
    A, sv = _instance(exp, r, RngStream(exp.seed, 2 * cell))
    method_stream = RngStream(exp.seed, 2 * cell + 1)
    block = resolve_block(exp.n, exp.block)
    r_eps = eps_rank_from_spectrum(sv, eps)
    a_fro = float(np.linalg.norm(sv))
    base = dict(experiment=exp.name, m=exp.m, n=exp.n, r=r, trial=trial, eps=eps, block=block,
                seed=exp.seed, r_eps=r_eps, oversampling=exp.oversampling, lam=exp.lam)
    exact_inv = {}
    out = []
    for method in exp.methods:
        if method in SVD_METHODS:
            F, wall, vol = _timed(lambda: _run_svd(method, A, sv, exp, eps, r_eps, block,
                                                   method_stream))
            rep = svd_report(A, F, sv, r=r_eps)
            k = r_eps if method == "dense-SVD" else F.k
            out.append(BenchRecord(method=method, k_detected=k, e_mse=rep.e_mse,
                                   e_sigma=rep.e_sigma, e_u=rep.e_u, e_v=rep.e_v,
                                   energy_ratio=energy_ratio(sv, min(k, sv.size)),
                                   wall_seconds=wall, flop_proxy=vol, **base))
            continue
        if method == "dense-inverse":
            _, wall, vol = _timed(lambda: dense_inverse(A, exp.lam, exp.side))
            out.append(BenchRecord(method=method, k_detected=min(A.shape), e_mse=0.0,
                                   e_sigma=math.nan, e_u=math.nan, e_v=math.nan,
                                   energy_ratio=1.0, wall_seconds=wall, flop_proxy=vol, **base))
            continue
        side = "left" if method == "GRI-left" else "right"
        build = gri_left if side == "left" else gri_right
        P, wall, vol = _timed(lambda: build(A, exp.lam, eps, block, method_stream))
        if side not in exact_inv:
            exact_inv[side] = dense_inverse(A, exp.lam, side)
        diff = np.linalg.norm(materialize(P) - exact_inv[side])
        rel = float(diff / np.linalg.norm(exact_inv[side]))
        table = float(diff / a_fro)
        out.append(BenchRecord(method=method, k_detected=P.k, e_mse=rel, e_sigma=math.nan,
                               e_u=table if side == "left" else math.nan,
                               e_v=table if side == "right" else math.nan,
                               energy_ratio=energy_ratio(sv, min(P.k, sv.size)),
                               wall_seconds=wall, flop_proxy=vol, **base))
    return out


def cells(experiments):
    """Enumerate (experiment, r, eps, trial, cell_id) in config order."""
    cell = 0
    for exp in experiments:
        for r in exp.r:
            for eps in exp.eps:
                for trial in range(exp.trials):
                    yield exp, r, eps, trial, cell
                    cell += 1


def bench_run(experiments, jobs=1):
    """Run every cell and return the records in config order."""
    todo = list(cells(experiments))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(lambda c: run_cell(*c), todo))
    else:
        chunks = [run_cell(*c) for c in todo]
    return [rec for chunk in chunks for rec in chunk]


def aggregate(records):
    """Means per (experiment, r, eps, method), in first-seen order."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.experiment, rec.r, rec.eps, rec.method), []).append(rec)
    rows = []
    for (name, r, eps, method), recs in groups.items():
        walls = [x.wall_seconds for x in recs]
        orth = [np.nanmax([x.e_u, x.e_v]) if not (math.isnan(x.e_u) and math.isnan(x.e_v))
                else math.nan for x in recs]
        rows.append({
            "experiment": name, "r": r, "eps": eps, "method": method,
            "E_MSE": float(np.mean([x.e_mse for x in recs])),
            "E_Sigma": float(np.mean([x.e_sigma for x in recs])),
            "max_EU_EV": float(np.mean(orth)),
            "k_mean": float(np.mean([x.k_detected for x in recs])),
            "wall_mean": float(np.mean(walls)),
            "wall_median": float(statistics.median(walls)),
            "flop_mean": float(np.mean([x.flop_proxy for x in recs])),
            "trials": len(recs),
        })
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for rec in records:
            d = asdict(rec)
            w.writerow([_fmt(d[c]) for c in RECORD_COLUMNS])


def write_aggregate(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in AGGREGATE_COLUMNS])
