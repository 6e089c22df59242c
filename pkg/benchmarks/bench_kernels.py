"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--resolution 128] [--points 1000000]

Reports the best-of-N wall time for each kernel and backend, and checks that
both backends return identical results.
"""

import argparse
import time

import numpy as np

from levelgeom._kernels import _pure
from levelgeom.fields import builtin_field, BoundingBox
from levelgeom.meshing import GridSpec, grid_values

try:
    from levelgeom._kernels import _ckernels
except ImportError:
    _ckernels = None


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--resolution", type=int, default=128)
    ap.add_argument("--points", type=int, default=1_000_000)
    args = ap.parse_args()

    if _ckernels is None:
        print("compiled backend not built; run `pip install -e . --no-build-isolation` first")
        return 1

    cases = []
    for name, t, lo, hi in [("sphere", 1.0, -2.0, 2.0), ("torus", 0.5, -3.5, 3.5)]:
        field = builtin_field(name)
        vals = grid_values(field, GridSpec(BoundingBox.cube(lo, hi, 3), args.resolution))
        cases.append((f"mc_triangle_keys {name} res={args.resolution}", lambda k, v=vals, t=t: k.mc_triangle_keys(v, t)))

    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, size=(args.points, 3))
    _, g, h = builtin_field("double_well").jets(pts)
    cases.append((f"curvature3 double_well n={args.points}", lambda k: k.curvature3(g, h, 1e-10)))

    print(f"{'kernel':<40} {'numpy [s]':>10} {'cython [s]':>11} {'speedup':>8}  match")
    for label, run in cases:
        tp, outp = best_time(lambda: run(_pure), args.repeat)
        tc, outc = best_time(lambda: run(_ckernels), args.repeat)
        outp = outp if isinstance(outp, tuple) else (outp,)
        outc = outc if isinstance(outc, tuple) else (outc,)
        same = all(np.array_equal(a, b) or np.allclose(a, b, rtol=1e-13, atol=0) for a, b in zip(outp, outc))
        print(f"{label:<40} {tp:>10.4f} {tc:>11.4f} {tp / tc:>7.2f}x  {'yes' if same else 'NO'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
