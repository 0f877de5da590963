"""Benchmark the numba event-walk kernel against the pure-numpy fallback.

Usage: python3 benchmarks/bench_tempotron.py [n_repeats]

The same workload (peak-potential search of 4 class neurons over a realistic
spike pattern) runs through both implementations; results are checked to
agree before timing.
"""

import sys
import time

import numpy as np

from spikecode import tempotron
from spikecode._kernels import _peak_potential_numpy, _peak_potential_walk

try:
    from numba import njit
    walk = njit(cache=True)(_peak_potential_walk)
    HAS_NUMBA = True
except ImportError:
    walk = _peak_potential_walk
    HAS_NUMBA = False
    print("numba not available; timing the pure-python walk instead")


def make_workload(n_afferents=200, n_spikes=3000, duration=0.5,
                  n_classes=4, seed=0):
    rng = np.random.default_rng(seed)
    times = np.sort(rng.uniform(0.0, duration, n_spikes))
    neurons = rng.integers(0, n_afferents, n_spikes)
    weights = rng.normal(0.0, 0.01, size=(n_classes, n_afferents))
    tp = tempotron.kernel_peak_time(tempotron.DEFAULT_TAU_M,
                                    tempotron.DEFAULT_TAU_S)
    grid = np.unique(np.concatenate(
        [times, times + tp, np.arange(0.0, duration, 0.001)]))
    return times, neurons, weights, grid


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 50
    times, neurons, weights, grid = make_workload()
    args = (times, neurons, weights, grid,
            tempotron.DEFAULT_TAU_M, tempotron.DEFAULT_TAU_S,
            tempotron.kernel_norm(tempotron.DEFAULT_TAU_M,
                                  tempotron.DEFAULT_TAU_S))
    v_walk, t_walk = walk(*args)  # compile before timing
    v_np, t_np = _peak_potential_numpy(*args)
    assert np.allclose(v_walk, v_np, atol=1e-9), "implementations disagree"
    assert np.array_equal(t_walk, t_np), "peak locations disagree"

    t0 = time.perf_counter()
    for _ in range(repeats):
        walk(*args)
    walk_s = (time.perf_counter() - t0) / repeats

    t0 = time.perf_counter()
    for _ in range(repeats):
        _peak_potential_numpy(*args)
    numpy_s = (time.perf_counter() - t0) / repeats

    label = "numba walk" if HAS_NUMBA else "python walk"
    print("%-12s %8.3f ms/eval" % (label, walk_s * 1e3))
    print("%-12s %8.3f ms/eval" % ("numpy", numpy_s * 1e3))
    print("speedup      %8.1fx" % (numpy_s / walk_s))


if __name__ == "__main__":
    main()
