"""Time the pure-Python and compiled q-loop kernels on the same segments.

    python benchmarks/bench_kernels.py --q 200000 --repeat 3

Results of both backends are compared for equality before any timing is
reported.
"""
import argparse
import sys
import time

from multdioph import kernels
from multdioph.realnum import frac_mantissa64, parse_real


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", default="sqrt:2")
    ap.add_argument("--beta", default="sqrt:3")
    ap.add_argument("--q", type=int, default=200_000, help="segment length (q = 1..Q)")
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    py, cc = kernels.python_backend, kernels.compiled_backend
    if cc is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
        return 1
    (A, wa), (B, wb) = (frac_mantissa64(parse_real(s)) for s in (args.alpha, args.beta))
    Q, eps, T = args.q, args.eps, args.t
    cases = {
        "count_diag_seg": lambda m: m.count_diag_seg(A, wa, B, wb, 1, Q, eps, eps),
        "count_box_seg": lambda m: m.count_box_seg(A, wa, B, wb, 1, Q, T, T, eps, eps),
        "recsum_seg": lambda m: m.recsum_seg(A, wa, B, wb, 1, Q),
        "phi_seg": lambda m: m.phi_seg(A, wa, B, wb, 1, Q, max(1, Q // 1000), Q, float("inf"), float("inf")),
    }
    print(f"{'kernel':16s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}  identical")
    for name, fn in cases.items():
        tp, rp = _best(lambda: fn(py), args.repeat)
        tc, rc = _best(lambda: fn(cc), args.repeat)
        print(f"{name:16s} {tp:11.4f} {tc:13.5f} {tp / tc:8.1f}  {rp == rc}")
        if rp != rc:
            return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
