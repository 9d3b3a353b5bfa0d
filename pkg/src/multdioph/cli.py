"""Command-line interface.

Examples::

    multdioph count --alpha sqrt:2 --beta sqrt:3 --eps 0.1 --t 0.5 --q 10
    multdioph theorem-check --eps 1e-3 --t 0.5 --q 1e6 --phi empirical
    multdioph sweep --pair sqrt2-sqrt3 --pair golden-sqrt2 --eps 1e-2 1e-3 --t 0.5 1 --q 1e3 1e4 --jobs 4

Exit status: 0 success, 1 some row has holds=false, 2 usage error,
3 a certified comparison could not be decided.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .counting import (
    CountParams, corollary_report, count_M_diag_series, count_M_series, theorem_report,
)
from .errors import CacheCorrupt, ConditionViolated, MultDiophError, UndecidablePredicate
from .realnum import _parse_fraction, parse_positive, parse_real

PAIRS = {
    "sqrt2-sqrt3": ("sqrt:2", "sqrt:3"),
    "golden-sqrt2": ("quad:1,1,2,5", "sqrt:2"),
    "sqrt2-sqrt5": ("sqrt:2", "sqrt:5"),
}

CACHE_ENV = "MULTDIOPH_CACHE_DIR"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing

def _positive_fraction(text: str) -> Fraction:
    try:
        v = _parse_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _positive_eps(text: str):
    try:
        v = parse_positive(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a positive number: {text!r}") from exc
    return v


def _q_value(text: str) -> Fraction:
    v = _positive_fraction(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"Q must be at least 1: {text!r}")
    return v


def _phi_source(text: str):
    if text == "empirical":
        return "empirical"
    if text.startswith("fixed:"):
        v = _positive_fraction(text[6:])
        if v > Fraction(1, 4):
            raise argparse.ArgumentTypeError("fixed phi must lie in (0, 1/4]")
        return v
    raise argparse.ArgumentTypeError("phi must be 'empirical' or 'fixed:<value>'")


def _int_like(text: str) -> int:
    v = _positive_fraction(text)
    if v.denominator != 1:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def _real(text: str):
    try:
        return parse_real(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="multdioph", description="Certified counts for multiplicative Diophantine approximation.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, eps=True, t=True, q=True, phi=False):
        p.add_argument("--alpha", type=_real, default=None, help="first irrational (default sqrt:2)")
        p.add_argument("--beta", type=_real, default=None, help="second irrational (default sqrt:3)")
        p.add_argument("--pair", choices=sorted(PAIRS), default=None)
        if eps:
            p.add_argument("--eps", type=_positive_eps, required=True)
        if t:
            p.add_argument("--t", type=_positive_fraction, default=Fraction(1, 2))
        if q:
            p.add_argument("--q", type=_q_value, nargs="+", required=True)
        if phi:
            p.add_argument("--phi", type=_phi_source, default="empirical")
        out(p)

    def out(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None, help="write to this file instead of stdout")
        p.add_argument("--cache", default=None, help=f"cache directory (default ${CACHE_ENV})")
        p.add_argument("--jobs", type=_int_like, default=1)

    common(sub.add_parser("count", help="exact |M(eps,T,Q)|"))
    common(sub.add_parser("theorem-check", help="count against main term and error bound"), phi=True)
    common(sub.add_parser("corollary-check", help="T = 1/2 estimate"), t=False, phi=True)

    p = sub.add_parser("phi", help="running minima of q||qa||||qb||")
    common(p, eps=False, t=False, q=False)
    p.add_argument("--q-max", type=_int_like, required=True)
    p.add_argument("--stride", type=_int_like, default=None)

    common(sub.add_parser("recsum", help="sum of 1/(||qa|| ||qb||)"), eps=False, t=False, phi=True)
    common(sub.add_parser("dyadic-check", help="reciprocal sum vs dyadic majorant"), eps=False, t=False, phi=True)

    p = sub.add_parser("decomp-verify", help="partition, flow, containment and cover checks")
    common(p, q=False)
    p.add_argument("--q", type=_q_value, required=True)
    p.add_argument("--samples", type=_int_like, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("lattice-min", help="lambda_1 of flowed lattices vs its lower bound")
    common(p, q=False, phi=True)
    p.add_argument("--q", type=_q_value, required=True)
    p.add_argument("--i", type=int, default=None, help="single flow index (default: all)")
    p.add_argument("--j", type=int, default=None, choices=(1, 2, 3, 4))

    p = sub.add_parser("sweep", help="theorem-check over a parameter grid")
    p.add_argument("--pair", choices=sorted(PAIRS), action="append", default=None)
    p.add_argument("--alpha", type=_real, default=None)
    p.add_argument("--beta", type=_real, default=None)
    p.add_argument("--eps", type=_positive_eps, nargs="+", required=True)
    p.add_argument("--t", type=_positive_fraction, nargs="+", default=[Fraction(1, 2)])
    p.add_argument("--q", type=_q_value, nargs="+", required=True)
    p.add_argument("--phi", type=_phi_source, default="empirical")
    p.add_argument("--seed", type=int, default=0)
    out(p)
    return ap


def _pairs(args) -> list[tuple[str, tuple]]:
    names = args.pair if isinstance(args.pair, list) else ([args.pair] if args.pair else [])
    out = []
    for n in names:
        a, b = PAIRS[n]
        out.append((n, (parse_real(a), parse_real(b))))
    if args.alpha is not None or args.beta is not None or not out:
        a = args.alpha if args.alpha is not None else parse_real("sqrt:2")
        b = args.beta if args.beta is not None else parse_real("sqrt:3")
        out.append((f"{a} {b}", (a, b)))
    return out


# ---------------------------------------------------------------------------
# cell formatting

def _num(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else repr(float(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _width(iv) -> float:
    return float(iv.hi - iv.lo)


def _fmt_q(q: Fraction) -> str:
    return _num(q)


# ---------------------------------------------------------------------------
# commands; each returns (header, rows) with rows of python values

def _phi_for(pair, phi_src, Qs):
    if phi_src != "empirical":
        return {Q: phi_src for Q in Qs}
    from .phi import phi_at, phi_profile
    qmax = max(math.floor(Q) for Q in Qs)
    prof = phi_profile(pair, qmax, stride=qmax)
    return {Q: phi_at(prof, Q) for Q in Qs}


def cmd_count(args):
    header = ["alpha", "beta", "eps", "T", "Q", "count"]
    rows = []
    for _, pair in _pairs(args):
        counts = count_M_series(pair, args.eps, args.t, args.q, jobs=args.jobs)
        for Q, c in zip(args.q, counts):
            rows.append([str(pair[0]), str(pair[1]), str(args.eps), _num(args.t), _fmt_q(Q), c])
    return header, rows


REPORT_HEADER = ["alpha", "beta", "eps", "T", "Q", "phi", "count", "main_term", "main_term_width",
                 "error_bound", "error_bound_width", "discrepancy", "holds", "note"]


def _report_row(pair, eps, T, Q, phi, rep):
    return [str(pair[0]), str(pair[1]), str(eps), _num(T), _fmt_q(Q), repr(float(phi)), rep.count,
            rep.main_term, _width(rep.main_term_interval), rep.error_bound,
            _width(rep.error_bound_interval), rep.discrepancy, rep.holds, rep.note]


def cmd_theorem(args):
    rows = []
    for _, pair in _pairs(args):
        for Q in args.q:
            CountParams(args.eps, args.t, Q).require_theorem_mode()
        phis = _phi_for(pair, args.phi, args.q)
        counts = count_M_series(pair, args.eps, args.t, args.q, jobs=args.jobs)
        for Q, c in zip(args.q, counts):
            rep = theorem_report(pair, CountParams(args.eps, args.t, Q), phis[Q], count=c)
            rows.append(_report_row(pair, args.eps, args.t, Q, phis[Q], rep))
    return REPORT_HEADER, rows


def cmd_corollary(args):
    rows = []
    T = Fraction(1, 2)
    for _, pair in _pairs(args):
        for Q in args.q:
            CountParams(args.eps, T, Q).require_corollary_mode()
        phis = _phi_for(pair, args.phi, args.q)
        counts = count_M_diag_series(pair, args.eps, args.q, jobs=args.jobs)
        for Q, c in zip(args.q, counts):
            rep = corollary_report(pair, args.eps, Q, phis[Q], count=c)
            rows.append(_report_row(pair, args.eps, T, Q, phis[Q], rep))
    return REPORT_HEADER, rows


def cmd_phi(args):
    from .phi import phi_profile
    header = ["alpha", "beta", "q", "value_lo", "value_width", "running_min_lo", "running_min_width"]
    rows = []
    stride = args.stride or max(1, args.q_max // 1000)
    for _, pair in _pairs(args):
        prof = phi_profile(pair, args.q_max, stride)
        for q, vlo, vhi, mlo, mhi in prof.rows():
            rows.append([str(pair[0]), str(pair[1]), q, vlo, vhi - vlo, mlo, mhi - mlo])
    return header, rows


def cmd_recsum(args):
    from .recsum import dyadic_report, recsum_series
    header = ["alpha", "beta", "Q", "phi", "sum_lo", "sum_hi", "sum_width", "upper_bound", "upper_bound_width",
              "lower_ratio", "holds"]
    rows = []
    for _, pair in _pairs(args):
        phis = _phi_for(pair, args.phi, args.q)
        series = recsum_series(pair, args.q)
        for k, Q in enumerate(args.q):
            rep = dyadic_report(pair, Q, phis[Q], series, k)
            rows.append([str(pair[0]), str(pair[1]), _fmt_q(Q), repr(float(phis[Q])), float(rep.sum.lo),
                         float(rep.sum.hi), _width(rep.sum), rep.upper_bound, rep.upper_bound_width, rep.lower_ratio,
                         rep.holds_upper])
    return header, rows


def cmd_dyadic(args):
    from .recsum import dyadic_report, recsum_series
    header = ["alpha", "beta", "Q", "phi", "K", "sum_lo", "sum_width", "dyadic_majorant", "holds_dyadic",
              "empty_beyond_K", "coarse_bound", "holds_coarse", "lower_sandwich", "upper_sandwich",
              "upper_bound", "upper_bound_width", "holds_upper", "holds"]
    rows = []
    for _, pair in _pairs(args):
        phis = _phi_for(pair, args.phi, args.q)
        series = recsum_series(pair, args.q)
        for k, Q in enumerate(args.q):
            r = dyadic_report(pair, Q, phis[Q], series, k)
            ok = r.holds_dyadic and r.empty_beyond_K and r.holds_coarse and r.holds_upper
            rows.append([str(pair[0]), str(pair[1]), _fmt_q(Q), repr(float(phis[Q])), r.K, float(r.sum.lo),
                         _width(r.sum), r.dyadic_majorant, r.holds_dyadic, r.empty_beyond_K, r.coarse_bound,
                         r.holds_coarse, r.lower_sandwich, r.upper_sandwich, r.upper_bound, r.upper_bound_width,
                         r.holds_upper, ok])
    return header, rows


def cmd_decomp(args):
    from . import domain
    from .lattice import decomposition_identity_check, slice_partition_check
    header = ["check", "subject", "observed", "limit", "holds"]
    plan = domain.make_plan(args.eps, args.t, args.q)
    rows = []
    rep = domain.partition_check(plan, args.samples, args.seed)
    rows.append(["partition", "Z-level", rep.z_misclassified, 0, rep.z_misclassified == 0])
    rows.append(["partition", "H1-level", rep.h1_misclassified, 0, rep.h1_misclassified == 0])
    rows.append(["tiling", "ratio windows", int(rep.tiling_exact), 1, rep.tiling_exact])
    rows.append(["g_i(S_i)=S_0", f"{rep.gi_checked} points", rep.gi_failures, 0, rep.gi_failures == 0])
    V = plan.V()
    eQ = plan.eps.interval(128) * plan.Q
    lower_ok, upper_ok = plan.volume_bounds()
    rows.append(["volume", "eps*Q/2 <= V", float(V.mid), float((eQ / 2).mid), lower_ok])
    rows.append(["volume", "V <= eps*Q", float(V.mid), float(eQ.mid), upper_ok])
    for i in plan.indices:
        d = domain.flow_map(plan, i).det_interval()
        rows.append(["flow det", f"phi_{i}", float(d.mid), 1, d.contains(1)])
    small = max(1, args.samples // 10)
    regions = [domain.DELTA_X, domain.DELTA_Y] + [domain.Slice(i) for i in plan.indices]
    for k, lab in enumerate(regions):
        c = domain.containment_check(plan, lab, small, args.seed + k)
        rows.append(["containment", str(lab), c.max_coord, c.bound, c.holds])
    for k, lab in enumerate(regions):
        cv = domain.lipschitz_cover(plan, lab, small, args.seed + k)
        rows.append(["lipschitz", str(lab), cv.max_observed, cv.lipschitz_bound, cv.max_observed <= cv.lipschitz_bound])
        if lab.kind == "Slice":
            rows.append(["lipschitz sheet", str(lab), cv.sheet_observed, cv.sheet_bound,
                         cv.sheet_observed <= cv.sheet_bound])
        rows.append(["coverage", str(lab), cv.coverage_gap, cv.mesh, cv.coverage_gap <= cv.mesh])
    if args.q <= 10 ** 5:
        for _, pair in _pairs(args):
            d = decomposition_identity_check(pair, CountParams(args.eps, args.t, args.q))
            rows.append(["decomposition identity", str(pair[0]) + " " + str(pair[1]), d.total,
                         sum(d.z_counts) + d.r1 + d.r2, d.identity_holds])
            rows.append(["R-counts", f"computed vs stated {d.stated_r}", d.r1 + d.r2, 2 * d.stated_r, True])
            rows.append(["decomposition slack", "|Z - sum Z_j| < 4(T+1)", d.total - sum(d.z_counts), d.slack, d.inequality_holds])
            for j in range(1, 5):
                sp = slice_partition_check(pair, plan, j)
                rows.append(["slice partition", f"j={j}", sp.h1_count,
                             sp.delta_x + sp.delta_y + sum(sp.slices.values()), sp.holds])
    return header, rows


def cmd_lattice_min(args):
    from .domain import make_plan
    from .lattice import minbound_check
    header = ["alpha", "beta", "i", "j", "lambda1_lo", "lambda1_width", "threshold", "holds",
              "witness_p1", "witness_p2", "witness_q"]
    plan = make_plan(args.eps, args.t, args.q)
    rows = []
    if args.i is not None:
        plan.check_index(args.i)
    for _, pair in _pairs(args):
        phi = _phi_for(pair, args.phi, [args.q])[args.q]
        for j in ([args.j] if args.j else range(1, 5)):
            for i in ([args.i] if args.i is not None else plan.indices):
                r = minbound_check(pair, plan, i, j, phi)
                rows.append([str(pair[0]), str(pair[1]), i, j, r.lambda1_lo, r.lambda1_width,
                             r.threshold, r.holds, *r.witness])
    return header, rows


def _sweep_group(task):
    pair, eps, T, Qs, phi_src = task
    phis = _phi_for(pair, phi_src, Qs)
    counts = count_M_series(pair, eps, T, Qs)
    out = []
    for Q, c in zip(Qs, counts):
        rep = theorem_report(pair, CountParams(eps, T, Q), phis[Q], count=c)
        out.append(_report_row(pair, eps, T, Q, phis[Q], rep))
    return out


def cmd_sweep(args):
    tasks = []
    for _, pair in _pairs(args):
        for eps in args.eps:
            for T in args.t:
                try:
                    CountParams(eps, T, args.q[0]).require_theorem_mode()
                except ConditionViolated:
                    continue  # eps/T^2 > e^-2: outside the estimate's range
                tasks.append((pair, eps, T, list(args.q), args.phi))
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            groups = list(ex.map(_sweep_group, tasks))
    else:
        groups = [_sweep_group(t) for t in tasks]
    return REPORT_HEADER, [row for g in groups for row in g]


COMMANDS = {
    "count": cmd_count, "theorem-check": cmd_theorem, "corollary-check": cmd_corollary,
    "phi": cmd_phi, "recsum": cmd_recsum, "dyadic-check": cmd_dyadic, "decomp-verify": cmd_decomp,
    "lattice-min": cmd_lattice_min, "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# cache

def cache_key(args) -> str:
    parts = [f"v={__version__}", f"cmd={args.command}"]
    for k in sorted(vars(args)):
        if k in ("command", "out", "cache", "format", "jobs"):
            continue
        v = getattr(args, k)
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        parts.append(f"{k}={v}")
    return ";".join(parts)


def _digest(payload: str) -> str:
    return hashlib.sha256(payload.encode()).hexdigest()


class Cache:
    """One JSON file per key, holding the formatted rows and their checksum."""

    def __init__(self, root):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / f"{_digest(key)[:32]}.json"

    def get(self, key: str):
        path = self._path(key)
        if not path.exists():
            return None
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            payload = json.dumps(doc["payload"], sort_keys=False)
            if doc.get("key") != key or doc.get("checksum") != _digest(payload):
                raise CacheCorrupt(f"checksum mismatch in {path}")
        except (ValueError, KeyError, TypeError) as exc:
            raise CacheCorrupt(f"unreadable cache file {path}") from exc
        return doc["payload"]

    def put(self, key: str, payload) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        body = json.dumps(payload, sort_keys=False)
        doc = {"key": key, "version": __version__, "checksum": _digest(body), "payload": payload}
        tmp = self._path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(doc), encoding="utf-8")
        os.replace(tmp, self._path(key))


# ---------------------------------------------------------------------------
# output

def render(header, rows, fmt: str) -> str:
    if fmt == "json":
        objs = [dict(zip(header, r)) for r in rows]
        return json.dumps(objs, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def _jsonable(rows):
    out = []
    for r in rows:
        out.append([v if isinstance(v, (bool, int, float, str)) or v is None else _num(v) for v in r])
    return out


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    cache_dir = args.cache or os.environ.get(CACHE_ENV)
    cache = Cache(cache_dir) if cache_dir else None
    key = cache_key(args)
    payload = None
    if cache is not None:
        try:
            payload = cache.get(key)
        except CacheCorrupt as exc:
            print(f"warning: {exc}; recomputing", file=stderr)
    try:
        if payload is None:
            header, rows = COMMANDS[args.command](args)
            payload = {"header": header, "rows": _jsonable(rows)}
            if cache is not None:
                cache.put(key, payload)
    except UndecidablePredicate as exc:
        print(f"undecidable: {exc}", file=stderr)
        return 3
    except (ConditionViolated, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except MultDiophError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    text = render(payload["header"], payload["rows"], args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    header = payload["header"]
    if "holds" in header:
        k = header.index("holds")
        if any(r[k] is False for r in payload["rows"]):
            return 1
    return 0


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    raise SystemExit(main())
