"""Compiled vs numpy kernels of the dbar solver.

Run with ``python3 benchmarks/bench_kernels.py``; prints best-of-N timings
and the max deviation between the two backends.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from hbundle.kernels import _pykernels

try:
    from hbundle.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _cases(rng: np.random.Generator, nr: int, nt: int, m: int):
    a = rng.normal(size=(nr, nt)) + 1j * rng.normal(size=(nr, nt))
    b = rng.normal(size=(nr, nt)) + 1j * rng.normal(size=(nr, nt))
    q = np.exp(-rng.uniform(0, 0.1, size=nt))
    x, y = rng.uniform(-1, 1, size=(2, m))
    w = rng.normal(size=m) + 1j * rng.normal(size=m)
    return {
        "geometric_scan": ((a, b, q), f"{nr}x{nt}"),
        "cauchy_direct": ((x, y, x, y, w), f"{m} points"),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nr", type=int, default=1024)
    ap.add_argument("--nt", type=int, default=256)
    ap.add_argument("--points", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not available; build with pip install -e .")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'size':>14}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>9}{'max dev':>11}")
    for name, (args_, size) in _cases(rng, args.nr, args.nt, args.points).items():
        fp, fc = getattr(_pykernels, name), getattr(_ckernels, name)
        tp = min(timeit.repeat(lambda: fp(*args_), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fc(*args_), number=1, repeat=args.repeat))
        dev = float(np.abs(fp(*args_) - fc(*args_)).max())
        print(f"{name:<16}{size:>14}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}{dev:>11.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
