"""Command-line front end: every check as a scriptable run with JSON-lines output.

Exit codes: 0 all reports passed, 1 usage error, 2 a verification failed,
3 internal or quadrature failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from ._quad import QuadratureError
from .diffeo import (
    AffineMap,
    DiffeoError,
    Multiplier,
    affine_comb_check,
    identity_map,
    sine_warp,
    warped_comb_lhs,
    warped_comb_rhs,
)
from .engine import (
    ENGINE_VERSION,
    DualEvaluation,
    classical_psf,
    coth_series_check,
    engine_slack,
    evaluate_identity,
    theta_transform_check,
)
from .kernels import bessel_pair, heat_pair, poisson_pair, symbol_pair
from .lattice import TruncationBudget
from .schwartz import battery, gaussian, shift_modulate
from .weak import csn_report, pair_dirac_comb, pair_exp_comb, pair_identity

FIELDS = (
    "identity",
    "params",
    "lhs",
    "rhs",
    "abs_discrepancy",
    "lhs_tail",
    "rhs_tail",
    "shells_used",
    "chosen_side",
    "passed",
    "wall_time_ms",
    "engine_version",
)
LP_FIELDS = ("identity", "params", "j", "sup", "ratio", "sup_refined", "ratio_refined", "passed", "engine_version")

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ----------------------------------------------------------------- helpers


def _num(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _cplx(z) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return _num(obj)


def _report(identity: str, params: dict, lhs, rhs, lhs_tail, rhs_tail, shells, side, passed) -> dict:
    return {
        "identity": identity,
        "params": _clean(params),
        "lhs": _cplx(lhs),
        "rhs": _cplx(rhs),
        "abs_discrepancy": _num(abs(complex(lhs) - complex(rhs))),
        "lhs_tail": _num(lhs_tail),
        "rhs_tail": _num(rhs_tail),
        "shells_used": [int(s) for s in shells],
        "chosen_side": side,
        "passed": bool(passed),
        "wall_time_ms": None,
        "engine_version": ENGINE_VERSION,
    }


def _from_eval(identity: str, params: dict, ev: DualEvaluation) -> dict:
    return _report(identity, params, ev.lhs_value, ev.rhs_value, ev.lhs_tail, ev.rhs_tail,
                   (ev.shells_lhs, ev.shells_rhs), ev.chosen_side, ev.passed)


def _points(args, n: int) -> list[list[float]]:
    pts = []
    for spec in args.x or []:
        vals = [float(v) for v in spec.split(",")]
        if len(vals) == 1:
            vals = vals * n
        if len(vals) != n:
            raise UsageError(f"point {spec!r} does not have {n} coordinates")
        pts.append(vals)
    if args.random_points:
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        pts.extend(rng.uniform(0.0, 1.0, size=(args.random_points, n)).tolist())
    return pts or [[0.0] * n]


def _budget(args) -> TruncationBudget:
    kw = {"target_abs_tol": args.tol}
    if args.max_shell is not None:
        kw["max_shell"] = args.max_shell
    return TruncationBudget(**kw)


def _pairing_report(identity, params, lhs, rhs, tol) -> dict:
    disc = abs(lhs.value - rhs.value)
    slack = engine_slack(lhs.value, rhs.value)
    met = lhs.tail_estimate <= tol and rhs.tail_estimate <= tol
    passed = met and disc <= lhs.tail_estimate + rhs.tail_estimate + slack
    s_l, s_r = lhs.truncation_level + 1, rhs.truncation_level + 1
    side = "frequency" if s_l <= s_r else "spatial"
    return _report(identity, params, lhs.value, rhs.value, lhs.tail_estimate, rhs.tail_estimate,
                   (s_l, s_r), side, passed)


# ------------------------------------------------------------- job builders


def _jobs_theta(args):
    b = _budget(args)
    return [
        (f"theta n={n} t={t}", lambda n=n, t=t: _from_eval("theta", {"n": n, "t": t}, theta_transform_check(t, n, b)))
        for n in args.dim
        for t in args.t
    ]


def _jobs_kernel(args, make, name):
    b = _budget(args)
    jobs = []
    for n in args.dim:
        for t in args.t:
            for x in _points(args, n):
                def run(n=n, t=t, x=x):
                    ev = evaluate_identity(make(t, n), x, b)
                    return _from_eval(name, {"n": n, "t": t, "x": x}, ev)
                jobs.append((f"{name} n={n} t={t} x={x}", run))
    return jobs


def _jobs_coth(args):
    b = _budget(args)
    return [("coth-series", lambda: _from_eval("coth-series", {}, coth_series_check(b)))]


def _jobs_bessel(args):
    b = _budget(args)
    jobs = []
    for n in args.dim:
        for a in args.alpha:
            if args.mode == "pointwise":
                pair = bessel_pair(a, n, "pointwise")
                for x in _points(args, n):
                    def run(pair=pair, x=x, a=a, n=n):
                        ev = evaluate_identity(pair, x, b)
                        return _from_eval("bessel", {"n": n, "alpha": a, "mode": "pointwise", "x": x}, ev)
                    jobs.append((f"bessel n={n} alpha={a} x={x}", run))
            else:
                pair = bessel_pair(a, n, "weak")
                for label, f in battery(n):
                    def run(pair=pair, f=f, label=label, a=a, n=n):
                        lhs, rhs = pair_identity(pair, f, args.tol)
                        params = {"n": n, "alpha": a, "mode": "weak", "f": label}
                        return _pairing_report("bessel", params, lhs, rhs, args.tol)
                    jobs.append((f"bessel weak n={n} alpha={a} f={label}", run))
    return jobs


def _jobs_psf(args):
    b = _budget(args)
    jobs = []
    for n in args.dim:
        for label, f in battery(n, args.widths):
            for x in _points(args, n):
                def run(f=f, x=x, label=label, n=n):
                    return _from_eval("psf", {"n": n, "f": label, "x": x}, classical_psf(f, x, b))
                jobs.append((f"psf n={n} f={label} x={x}", run))
    return jobs


def _jobs_symbol(args):
    b = _budget(args)
    jobs = []
    for n in args.dim:
        tau = gaussian(args.width, n)
        for x in _points(args, n):
            def run(tau=tau, x=x, n=n):
                ev = evaluate_identity(symbol_pair(tau), x, b)
                return _from_eval("symbol", {"n": n, "width": args.width, "x": x}, ev)
            jobs.append((f"symbol n={n} x={x}", run))
    return jobs


def _jobs_weak(args):
    b = _budget(args)
    jobs = []
    for n in args.dim:
        for label, f in battery(n):
            def run(f=f, label=label, n=n):
                lhs = pair_exp_comb(f, args.N)
                rhs = pair_dirac_comb(f, TruncationBudget(target_abs_tol=min(args.tol, 1e-16),
                                                          max_shell=b.max_shell))
                return _pairing_report("weak", {"n": n, "N": args.N, "f": label}, lhs, rhs, args.tol)
            jobs.append((f"weak n={n} f={label}", run))
    return jobs


_MAPS = {
    "identity": identity_map,
    "sine": lambda: sine_warp(1.0, 0.1),
    "sine2": lambda: sine_warp(2.0, 0.2),
}
_MULTS = {"one": Multiplier, "gauss": lambda: Multiplier.gaussian(2.0)}


def _jobs_diffeo(args):
    jobs = []
    for m in args.map:
        for gname in args.g:
            for a in args.widths:
                def run(m=m, gname=gname, a=a):
                    d, g = _MAPS[m](), _MULTS[gname]()
                    f = shift_modulate(gaussian(a, 1), h=0.3)
                    lhs = warped_comb_lhs(d, g, f, N=args.N)
                    rhs = warped_comb_rhs(d, g, f)
                    disc = abs(lhs.value - rhs.value)
                    params = {"map": m, "g": gname, "width": a, "N": args.N}
                    return _report("diffeo", params, lhs.value, rhs.value, lhs.tail_estimate, rhs.tail_estimate,
                                   (lhs.truncation_level, rhs.truncation_level + 1), "spatial", disc <= args.tol)
                jobs.append((f"diffeo map={m} g={gname} a={a}", run))
    return jobs


def _rotation(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, -s], [s, c]])


_AFFINE = {
    "identity": lambda: (AffineMap(np.eye(1), [0.0]), 1),
    "diag2": lambda: (AffineMap(np.diag([2.0]), [0.0]), 1),
    "rot30": lambda: (AffineMap(_rotation(30.0), [0.0, 0.0]), 2),
    "shear": lambda: (AffineMap(np.array([[1.0, 0.5], [0.0, 1.5]]), [0.25, -0.1]), 2),
}


def _jobs_affine(args):
    b = _budget(args)
    jobs = []
    for case in args.case:
        for a in args.widths:
            def run(case=case, a=a):
                A, n = _AFFINE[case]()
                f = shift_modulate(gaussian(a, n), h=0.3, m=0.5)
                return _from_eval("affine", {"case": case, "width": a}, affine_comb_check(A, f, b))
            jobs.append((f"affine {case} a={a}", run))
    return jobs


def _lp_rows(args) -> list[dict]:
    rows = []
    for n in args.dim:
        rep = csn_report(args.jmax, n, args.points, refine=True, seed=args.seed)
        params = {"n": n, "jmax": args.jmax, "points": args.points}
        for (j, sup, ratio), (_, sup2, ratio2) in zip(rep.levels, rep.refined):
            rows.append({"identity": "lp-report", "params": params, "j": j, "sup": sup, "ratio": ratio,
                         "sup_refined": sup2, "ratio_refined": ratio2, "passed": True,
                         "engine_version": ENGINE_VERSION})
        rows.append({"identity": "lp-report", "params": params, "j": None, "sup": None,
                     "ratio": rep.max_ratio, "sup_refined": None, "ratio_refined": rep.refined_max_ratio,
                     "passed": rep.stable and math.isfinite(rep.max_ratio), "engine_version": ENGINE_VERSION})
    return [_clean(r) for r in rows]


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, tol: float):
    p.add_argument("--json", action="store_true", help="JSON-lines output (default)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--tol", type=float, default=tol, help="target absolute tolerance")
    p.add_argument("--max-shell", type=int, default=None, help="cap on the sup-norm shell radius")
    p.add_argument("--seed", type=int, default=None, help="seed for random sample points or grid offsets")
    p.add_argument("--quiet", action="store_true", help="no progress on stderr")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $PSFLAB_THREADS or all cores)")
    p.add_argument("--timing", action="store_true", help="record wall times (breaks byte-identical output)")


def _points_args(p):
    p.add_argument("--x", action="append", help="evaluation point, comma separated; repeatable")
    p.add_argument("--random-points", type=int, default=0, help="add N uniform points from [0,1)^n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="psflab", description="Certified lattice summation checks.")
    sub = ap.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("theta", help="theta transformation at x = 0")
    _common(p, 1e-12)
    p.add_argument("--dim", type=int, nargs="+", default=[1])
    p.add_argument("--t", type=float, nargs="+", default=[1.0])
    p.set_defaults(jobs=_jobs_theta)

    for name, make, tol, default_t in (("heat", heat_pair, 1e-12, 1.0), ("poisson", poisson_pair, 1e-10, 1.0)):
        p = sub.add_parser(name, help=f"{name} kernel identity at points x")
        _common(p, tol)
        p.add_argument("--dim", type=int, nargs="+", default=[1])
        p.add_argument("--t", type=float, nargs="+", default=[default_t])
        _points_args(p)
        p.set_defaults(jobs=lambda a, make=make, name=name: _jobs_kernel(a, make, name))

    for name in ("coth-series", "corollary35"):
        p = sub.add_parser(name, help="2 sum_{k>=0} 1/(1+k^2) against pi coth(pi) + 1")
        _common(p, 1e-10)
        p.set_defaults(jobs=_jobs_coth)

    p = sub.add_parser("bessel", help="Bessel potential identity")
    _common(p, 1e-8)
    p.add_argument("--dim", type=int, nargs="+", default=[1])
    p.add_argument("--alpha", type=float, nargs="+", default=[-4.0])
    p.add_argument("--mode", choices=["pointwise", "weak"], default="pointwise")
    _points_args(p)
    p.set_defaults(jobs=_jobs_bessel)

    p = sub.add_parser("psf", help="classical Poisson summation for the Gaussian battery")
    _common(p, 1e-12)
    p.add_argument("--dim", type=int, nargs="+", default=[1])
    p.add_argument("--widths", type=float, nargs="+", default=[0.25, 1.0, 4.0])
    _points_args(p)
    p.set_defaults(jobs=_jobs_psf)

    p = sub.add_parser("symbol", help="Gaussian symbol identity")
    _common(p, 1e-12)
    p.add_argument("--dim", type=int, nargs="+", default=[1])
    p.add_argument("--width", type=float, default=0.5, help="symbol exp(-|xi|^2 / (2 width))")
    _points_args(p)
    p.set_defaults(jobs=_jobs_symbol)

    p = sub.add_parser("weak", help="exponential comb against Dirac comb, paired with the battery")
    _common(p, 1e-12)
    p.add_argument("--dim", type=int, nargs="+", default=[1])
    p.add_argument("--N", type=int, default=8, help="symmetric truncation of the exponential comb")
    p.set_defaults(jobs=_jobs_weak)

    p = sub.add_parser("lp-report", help="Littlewood-Paley ratios of the exponential comb")
    _common(p, 0.1)
    p.add_argument("--dim", type=int, nargs="+", default=[1])
    p.add_argument("--jmax", type=int, default=8)
    p.add_argument("--points", type=int, default=1024, help="grid points per period and axis")
    p.set_defaults(jobs=None, rows=_lp_rows)

    p = sub.add_parser("diffeo", help="warped comb under a 1-D diffeomorphism")
    _common(p, 1e-6)
    p.add_argument("--map", nargs="+", choices=sorted(_MAPS), default=["sine"])
    p.add_argument("--g", nargs="+", choices=sorted(_MULTS), default=["one", "gauss"])
    p.add_argument("--widths", type=float, nargs="+", default=[1.0])
    p.add_argument("--N", type=int, default=16)
    p.set_defaults(jobs=_jobs_diffeo)

    p = sub.add_parser("affine", help="warped comb under an affine map")
    _common(p, 1e-10)
    p.add_argument("--case", nargs="+", choices=sorted(_AFFINE), default=["identity", "diag2", "rot30"])
    p.add_argument("--widths", type=float, nargs="+", default=[1.0])
    p.set_defaults(jobs=_jobs_affine)
    return ap


# ------------------------------------------------------------------ output


def _write(rows: list[dict], fmt: str, fields, out) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([json.dumps(r[f]) if isinstance(r[f], (list, dict)) else ("" if r[f] is None else r[f])
                        for f in fields])
        out.write(buf.getvalue())
    else:
        for r in rows:
            out.write(json.dumps({f: r[f] for f in fields}) + "\n")
    out.flush()


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    env = os.environ.get("PSFLAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"PSFLAB_THREADS={env!r} is not an integer") from None
        if n >= 1:
            return n
    return os.cpu_count() or 1


def _execute(jobs: list[tuple[str, Callable]], threads: int, timing: bool, quiet: bool) -> list[dict]:
    total = len(jobs)

    def one(item):
        idx, (name, fn) = item
        t0 = time.perf_counter()
        rep = fn()
        if timing:
            rep["wall_time_ms"] = round(1e3 * (time.perf_counter() - t0), 3)
        if not quiet:
            print(f"[{idx + 1}/{total}] {name}: {'passed' if rep['passed'] else 'FAILED'}", file=sys.stderr)
        return rep

    if threads == 1 or total <= 1:
        return [one(item) for item in enumerate(jobs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, enumerate(jobs)))


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        threads = _threads(args)
        if args.max_shell is not None and args.max_shell < 0:
            raise UsageError("--max-shell must be >= 0")
        if not args.tol > 0:
            raise UsageError("--tol must be positive")
        fmt = "json" if args.json else args.format
        if args.jobs is None:
            rows = args.rows(args)
            fields = LP_FIELDS
        else:
            rows = _execute(args.jobs(args), threads, args.timing, args.quiet)
            fields = FIELDS
    except UsageError as e:
        print(f"psflab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except (QuadratureError, DiffeoError, ArithmeticError) as e:
        print(f"psflab: internal failure: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as e:
        print(f"psflab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    _write(rows, fmt, fields, out)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
