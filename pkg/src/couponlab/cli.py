"""Command-line entry point: ``couponlab <subcommand> ...``.

Tables go to stdout (or ``--out``) as CSV or JSON. Exact values print as
``p/q`` with a separate 17-significant-digit float column. Invalid input
exits with status 2.
"""

import argparse
import csv
import io
import json
import sys
from importlib import resources
from fractions import Fraction
from pathlib import Path

from . import __version__, _accel, asymptotics, dist_engine, exact, montecarlo, optimizer
from .errors import CouponLabError

NAMED = ("uniform", "arcs", "near_decomposition", "rotation")


class UsageError(Exception):
    pass


def load_schema(name):
    """Shipped JSON schema, e.g. ``load_schema("certificate")``."""
    return json.loads((resources.files("couponlab") / "schemas" / f"{name}.schema.json").read_text())


def fmt_float(x):
    return "" if x is None else f"{float(x):.17g}"


def fmt_exact(x):
    return f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else ""


def _value_cols(prefix, v):
    return {prefix: fmt_exact(v), f"{prefix}_float": fmt_float(v)}


def _emit(args, rows=None, doc=None):
    if doc is None:
        doc = {"rows": rows}
    if args.format == "json" or rows is None:
        text = json.dumps(doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_dist(args):
    if getattr(args, "dist_file", None):
        doc = json.loads(Path(args.dist_file).read_text())
        return dist_engine.PackageDistribution.from_dict(doc)
    if args.dist is None:
        raise UsageError("give --dist or --dist-file")
    if args.n is None or args.s is None:
        raise UsageError("--n and --s are required with --dist")
    return dist_engine.build_distribution(args.dist, args.n, args.s)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_exact(args):
    mode = args.mode
    if args.dist_file:
        dist = _load_dist(args)
        n, s, kind = dist.n, dist.s, "custom"
        value = dist_engine.expected_rounds(dist, mode)
    else:
        if args.dist is None or args.n is None or args.s is None:
            raise UsageError("--n, --s and --dist are required (or --dist-file)")
        n, s, kind = args.n, args.s, args.dist
        exact._check_ns(n, s)
        if kind == "uniform":
            value = exact.uniform_expectation(n, s, mode)
        elif kind == "arcs":
            if s >= n // 2:
                value = exact.arcs_expectation(n, s, mode)
            else:
                value = dist_engine.expected_rounds(dist_engine.build_distribution("arcs", n, s),
                                                    "auto" if mode == "auto" else mode)
        elif kind == "near_decomposition":
            if s >= n:
                raise UsageError("near_decomposition needs s <= n - 1")
            value = exact.near_decomposition_expectation(n, s, mode)
        else:
            value = exact.rotation_expectation(n, s, mode)
    row = {"n": n, "s": s, "distribution": kind, "mode": "exact" if isinstance(value, Fraction) else "float"}
    row.update(_value_cols("value", value))
    if s < n:
        b = exact.expectation_bounds(n, s, mode)
        row.update(_value_cols("uniform_lower", b.lower))
        row.update(_value_cols("uniform_upper", b.upper))
    row["regime"] = dist_engine.regime(n, s) if 2 <= s < n else ""
    _emit(args, [row])


def cmd_compare(args):
    hi = args.n_max if args.n_max is not None else args.n
    if args.n < 4 or hi < args.n:
        raise UsageError(f"need 4 <= n <= n-max, got n={args.n}, n-max={hi}")
    rows = []
    for n in range(args.n, hi + 1):
        rows.extend(r.as_row() for r in dist_engine.compare_report(n))
    _emit(args, rows)


def cmd_simulate(args):
    dist = _load_dist(args)
    rep = montecarlo.estimate_expected_rounds(dist, args.trials, args.seed, threads=args.threads)
    if args.format == "json":
        _emit(args, doc=rep.to_dict())
    else:
        d = rep.to_dict()
        _emit(args, [{c: (fmt_float(d[c]) if isinstance(d[c], float) else d[c]) for c in montecarlo.CSV_COLUMNS}])


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _table_rows(rows):
    return [{"n": r["n"], "s": r["s"], "prediction": fmt_float(r["prediction"]),
             "exact_or_mc": fmt_float(r["exact_or_mc"]), "difference": fmt_float(r["difference"])} for r in rows]


def cmd_asym(args):
    which = args.which
    if which == "g":
        rows = []
        for c in args.c:
            rows.extend({"c": fmt_float(c), "x": fmt_float(x), "g": fmt_float(g)}
                        for x, g in asymptotics.g_curve(c, args.points, args.tol))
        _emit(args, rows)
    elif which == "case1":
        _emit(args, _table_rows(asymptotics.case1_rows(args.ns, args.s)))
    elif which == "case2":
        _emit(args, _table_rows(asymptotics.case2_rows(args.ns, args.c)))
    elif which == "case3":
        _emit(args, _table_rows(asymptotics.case3_rows(args.ns, args.t, args.lam)))
    else:
        if (args.trials is None) != (args.seed is None):
            raise UsageError("--trials and --seed go together")
        times = None
        if args.trials is not None:
            if args.t != 1:
                raise UsageError("empirical check only simulates single collections (t = 1)")
            times = montecarlo.collection_times(dist_engine.build_distribution("uniform", args.n, args.s),
                                                args.trials, args.seed, threads=args.threads)
        rows = []
        for x in args.x:
            thr = asymptotics.gumbel_scaled_threshold(args.n, args.s, args.t, x)
            row = {"n": args.n, "s": args.s, "t": args.t, "x": fmt_float(x), "threshold": fmt_float(thr),
                   "gumbel_cdf": fmt_float(asymptotics.gumbel_cdf(x))}
            if times is not None:
                row["empirical_cdf"] = fmt_float(float((times <= thr).mean()))
            rows.append(row)
        _emit(args, rows)


def cmd_optimize(args):
    res = optimizer.optimize_distribution(args.n, args.s, restarts=args.restarts, iters=args.iters,
                                          step=args.step, seed=args.seed)
    _emit(args, doc=res.to_certificate())


def cmd_verify(args):
    doc = json.loads(Path(args.cert).read_text())
    res = optimizer.verify_certificate(doc)
    out = {"ok": res.ok, "value": fmt_exact(res.value), "value_float": fmt_float(res.value),
           "uniform_value": fmt_exact(res.uniform_value), "improved": res.improved, "messages": list(res.messages)}
    _emit(args, doc=out)
    return 0 if res.ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p, fmt="csv"):
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--out", help="write to this path instead of stdout")


def build_parser():
    ap = argparse.ArgumentParser(prog="couponlab", description="Coupon collection with group drawings.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact expected rounds of a named or custom distribution")
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--dist", choices=NAMED)
    p.add_argument("--dist-file", help="custom distribution JSON")
    p.add_argument("--mode", choices=("auto", "exact", "float"), default="auto")
    _common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("compare", help="named distributions against uniform for s = 2..n-1")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n-max", type=int, help="last n of a range starting at --n")
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of expected rounds")
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--dist", choices=NAMED)
    p.add_argument("--dist-file")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=_accel.max_threads())
    _common(p, "json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("asymptotics", help="asymptotic predictions and limit laws")
    asub = p.add_subparsers(dest="which", required=True)
    q = asub.add_parser("g", help="g(x) on a grid")
    q.add_argument("--c", type=_float_list, default=[0.01, 0.5, 0.99])
    q.add_argument("--points", type=int, default=201)
    q.add_argument("--tol", type=float, default=1e-12)
    _common(q)
    q = asub.add_parser("case1", help="constant s against the exact recursion")
    q.add_argument("--ns", type=_int_list, default=[100, 200, 400, 800])
    q.add_argument("--s", type=int, default=2)
    _common(q)
    q = asub.add_parser("case2", help="s = c n against the exact recursion")
    q.add_argument("--ns", type=_int_list, default=[1024, 1536, 2048])
    q.add_argument("--c", type=float, default=0.5)
    _common(q)
    q = asub.add_parser("case3", help="s = n - lambda n^((t-1)/t) against the missing-count chain")
    q.add_argument("--ns", type=_int_list, default=[1000, 10000])
    q.add_argument("--t", type=int, default=2)
    q.add_argument("--lambda", dest="lam", type=float, default=1.0)
    _common(q)
    q = asub.add_parser("gumbel", help="Gumbel thresholds, optionally with an empirical check")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--s", type=int, default=1)
    q.add_argument("--t", type=int, default=1)
    q.add_argument("--x", type=_float_list, default=[-1.0, 0.0, 1.0, 2.0])
    q.add_argument("--trials", type=int)
    q.add_argument("--seed", type=int)
    q.add_argument("--threads", type=int, default=_accel.max_threads())
    _common(q)
    p.set_defaults(func=cmd_asym)

    p = sub.add_parser("optimize", help="search for a distribution beating uniform; prints a certificate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--step", type=float, default=0.05)
    _common(p, "json")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="re-check a certificate in exact arithmetic")
    p.add_argument("--cert", required=True)
    _common(p, "json")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args)
    except (UsageError, CouponLabError, ValueError, OSError) as exc:
        print(f"couponlab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0 if rc is None else rc


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
