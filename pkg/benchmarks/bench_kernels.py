"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--grid-points 4096]
"""

import argparse
import math
import time

import numpy as np

from hybridcap import _kernels
from hybridcap.env import PhysicalEnvironment, validate
from hybridcap.noise import build_model, sample


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--grid-points", type=int, default=4096)
    ap.add_argument("--freq-grid-points", type=int, default=2048)
    args = ap.parse_args(argv)

    env = validate(PhysicalEnvironment(bandwidth=1e4, frequency=1e8, temperature=290.0,
                                       photons=1000.0))
    m = build_model(env, grid_points=args.grid_points, freq_grid_points=args.freq_grid_points)
    n = m.grid.copy()
    w = np.exp(m.y_logw - m.y_logw.max())
    w /= w.sum()
    ni = sample(m, 10, 42)
    sigma = math.sqrt(m.classical.variance)
    nb = _kernels.backend("numba") if _kernels.HAVE_NUMBA else None
    npk = _kernels.backend("numpy")

    cases = {
        "convolve_grid": lambda k: k["convolve_grid"](n, m.y_nodes, m.y_logw, m.classical.variance),
        "cdf_grid": lambda k: k["cdf_grid"](n, m.y_nodes, w, sigma),
        "convolve_printed": lambda k: k["convolve_printed"](n, m.photons, m.quantum.log_norm,
                                                              m.classical.variance, m.freq_grid_points),
        "published_sums": lambda k: k["published_sums"](ni, m.photons, m.quantum.log_norm,
                                                m.classical.variance, m.freq_grid_points, 1.0),
    }
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, call in cases.items():
        t_np = _best(lambda: call(npk), args.repeat)
        if nb is None:
            print(f"{name:<18}{t_np:>12.4g}{'n/a':>12}{'':>10}")
            continue
        call(nb)  # compile outside the timed loop
        t_nb = _best(lambda: call(nb), args.repeat)
        print(f"{name:<18}{t_np:>12.4g}{t_nb:>12.4g}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
