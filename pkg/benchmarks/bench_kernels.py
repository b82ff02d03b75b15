"""Time the compiled kernels against the numpy fallback on identical inputs.

    python3 benchmarks/bench_kernels.py [--n 100000] [--repeat 5]

Prints one row per kernel with the best-of-``repeat`` wall time for each
backend and the speed-up, plus the largest relative disagreement.
"""

import argparse
import timeit

import numpy as np

from wpcdelay import _kernels_py
from wpcdelay._backend import available_backends

try:
    from wpcdelay import _kernels as _compiled
except ImportError:
    _compiled = None


def cases(n, rng):
    c = 10.0 ** rng.uniform(-3, 3, n)
    rows = 10.0 ** rng.uniform(-1, 2, (max(n // 10, 1), 2))
    return {
        "lambert_w0": (np.concatenate([rng.uniform(-0.3678, 0, n // 2), c[: n - n // 2]]),),
        "harvest_exponent": (c,),
        "p4_exponent": (c,),
        "slot_ratio": (rng.uniform(1e-4, 0.9999, n),),
        "p5_omega (K=2)": (rows,),
        "p6_omega (K=2)": (rows, 1.5),
    }


def _fn(module, name):
    return getattr(module, name.split(" ")[0])


def rel_diff(a, b):
    a, b = np.asarray(a), np.asarray(b)
    ok = np.isfinite(a) & np.isfinite(b)
    return float(np.max(np.abs(a[ok] - b[ok]) / np.maximum(np.abs(b[ok]), 1e-300))) if ok.any() else 0.0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"backends available: {', '.join(available_backends())}; n = {args.n}")
    print(f"{'kernel':<18} {'python [ms]':>12} {'cython [ms]':>12} {'speed-up':>9} {'max rel diff':>13}")
    for name, call_args in cases(args.n, rng).items():
        py = _fn(_kernels_py, name)
        t_py = min(timeit.repeat(lambda: py(*call_args), number=1, repeat=args.repeat))
        if _compiled is None:
            print(f"{name:<18} {t_py * 1e3:12.2f} {'n/a':>12} {'n/a':>9} {'n/a':>13}")
            continue
        cy = _fn(_compiled, name)
        t_cy = min(timeit.repeat(lambda: cy(*call_args), number=1, repeat=args.repeat))
        diff = rel_diff(cy(*call_args), py(*call_args))
        print(f"{name:<18} {t_py * 1e3:12.2f} {t_cy * 1e3:12.2f} {t_py / t_cy:8.1f}x {diff:13.2e}")


if __name__ == "__main__":
    main()
