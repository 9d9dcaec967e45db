"""Compare the numba and numpy paths of every hot kernel.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Both variants are called directly, so the benchmark ignores
OSSFIELD_DISABLE_NUMBA. Each row reports the best-of-N wall time and the
largest disagreement between the two results.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ossfield import kernels
from ossfield._accel import HAVE_NUMBA
from ossfield.covariance import DEFAULT_QUAD, _nodes
from ossfield.polar import PolarConfig


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    rho, w, cphi, sphi = _nodes(DEFAULT_QUAD)
    s, t = np.array([0.3, -0.7]), np.array([0.9, 0.2])
    yield "ofbf_polar_sum", (rho, w, cphi, sphi, s, t, 3.0)

    cfg = PolarConfig(np.array([[1.0, 0.4], [-0.4, 1.0]]))
    props = cfg._tables["props_f"]
    yield "node_norms", (props, np.array([0.3, -1.2]), 0)

    rng = np.random.default_rng(0)
    counters = rng.integers(0, 2**63, size=(200_000, 4), dtype=np.uint64)
    yield "philox4x64", (counters, np.array([12345, 0], dtype=np.uint64))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy path can run")

    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max diff':>12}")
    for name, call_args in cases():
        np_fn = getattr(kernels, f"{name}_numpy")
        nb_fn = getattr(kernels, f"{name}_numba")
        t_np, r_np = best_of(lambda: np_fn(*call_args), args.repeat)
        if not HAVE_NUMBA:
            print(f"{name:<16}{1e3 * t_np:>12.3f}{'-':>12}{'-':>10}{'-':>12}")
            continue
        nb_fn(*call_args)  # compile outside the timed region
        t_nb, r_nb = best_of(lambda: nb_fn(*call_args), args.repeat)
        a, b = np.asarray(r_np), np.asarray(r_nb)
        diff = 0 if a.dtype.kind == "u" and np.array_equal(a, b) else float(np.abs(a.astype(float) - b.astype(float)).max())
        print(f"{name:<16}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}{diff:>12.3g}")


if __name__ == "__main__":
    main()
