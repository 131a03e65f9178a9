"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Shapes match one chunk of 50 trials at the reference scale.
"""
import argparse
import time

import numpy as np

from mddsim import _kernels
from mddsim.channel import complex_normal


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _kernels.USE_NUMBA:
        print("numba disabled; only the numpy path is timed")

    rng = np.random.default_rng(0)
    white = complex_normal(rng, (28, 50 * 32, 8, 4))
    scale = np.linspace(0.5, 1.0, 8)[:, None]
    h = complex_normal(rng, (50 * 64, 8, 32))
    h_hat = h + complex_normal(rng, h.shape, 0.1)
    cases = {
        "ar1_trajectory": lambda nb: _kernels.ar1_trajectory(white, 0.99, scale, use_numba=nb),
        "zf_gains": lambda nb: _kernels.zf_gains(h, h_hat, use_numba=nb),
    }
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, fn in cases.items():
        t_np = best_of(lambda: fn(False), args.repeat)
        if _kernels.USE_NUMBA:
            fn(True)                                    # compile outside the timing
            t_nb = best_of(lambda: fn(True), args.repeat)
            print(f"{name:<16}{1e3 * t_np:12.1f}{1e3 * t_nb:12.1f}{t_np / t_nb:10.2f}")
        else:
            print(f"{name:<16}{1e3 * t_np:12.1f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
