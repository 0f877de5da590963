"""Hot numeric kernels for Tempotron membrane-potential evaluation.

Two implementations of the same contract: a numba @njit event-walk kernel
(default) and a pure-numpy fallback selected by setting the environment
variable SPIKECODE_NO_NUMBA=1 before import.  `benchmarks/bench_tempotron.py`
compares the two.

The walk kernel exploits the double-exponential kernel structure: between
events the two accumulator sums decay by a scalar factor, so evaluating the
potential of C class neurons on a G-point grid over S spikes costs
O((G + S) * C) with only 2 * (G + S) exponentials.
"""

from __future__ import annotations

import math
import os

import numpy as np

USE_NUMBA = os.environ.get("SPIKECODE_NO_NUMBA", "") not in ("1", "true", "yes")
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:
        USE_NUMBA = False


def _peak_potential_walk(times, neurons, weights, grid, tau_m, tau_s, v0):
    """Peak potential per class neuron over a sorted evaluation grid.

    times: (S,) sorted spike times; neurons: (S,) afferent ids;
    weights: (C, A) synaptic efficacies; grid: (G,) sorted candidate times.
    Returns (best_v (C,), best_t (C,)).
    """
    n_classes = weights.shape[0]
    acc_m = np.zeros(n_classes)
    acc_s = np.zeros(n_classes)
    best_v = np.full(n_classes, -np.inf)
    best_t = np.zeros(n_classes)
    last = 0.0
    si = 0
    n_spikes = len(times)
    for gi in range(len(grid)):
        tg = grid[gi]
        while si < n_spikes and times[si] <= tg:
            s = times[si]
            dm = math.exp(-(s - last) / tau_m)
            ds = math.exp(-(s - last) / tau_s)
            for c in range(n_classes):
                w = weights[c, neurons[si]]
                acc_m[c] = acc_m[c] * dm + w
                acc_s[c] = acc_s[c] * ds + w
            last = s
            si += 1
        dm = math.exp(-(tg - last) / tau_m)
        ds = math.exp(-(tg - last) / tau_s)
        for c in range(n_classes):
            v = v0 * (acc_m[c] * dm - acc_s[c] * ds)
            if v > best_v[c]:
                best_v[c] = v
                best_t[c] = tg
    return best_v, best_t


def _peak_potential_numpy(times, neurons, weights, grid, tau_m, tau_s, v0):
    """Pure-numpy fallback: chunked outer-product evaluation, same contract."""
    n_classes = weights.shape[0]
    best_v = np.full(n_classes, -np.inf)
    best_t = np.zeros(n_classes)
    if len(grid) == 0:
        return best_v, best_t
    wv = weights[:, neurons] if len(times) else np.zeros((n_classes, 0))
    chunk = 512
    for start in range(0, len(grid), chunk):
        g = grid[start:start + chunk]
        if len(times):
            dt = g[:, None] - times[None, :]
            mask = dt >= 0
            dt = np.where(mask, dt, 0.0)
            k = v0 * (np.exp(-dt / tau_m) - np.exp(-dt / tau_s))
            k[~mask] = 0.0
            v = k @ wv.T  # (chunk, C)
        else:
            v = np.zeros((len(g), n_classes))
        idx = np.argmax(v, axis=0)
        vmax = v[idx, np.arange(n_classes)]
        better = vmax > best_v
        best_v[better] = vmax[better]
        best_t[better] = g[idx[better]]
    return best_v, best_t


if USE_NUMBA:
    peak_potential = njit(cache=True)(_peak_potential_walk)
else:
    peak_potential = _peak_potential_numpy


def kernel_sums(times, neurons, n_afferents, t, tau_m, tau_s, v0):
    """Per-afferent sum of K(t - s) over spikes s <= t (the update direction)."""
    out = np.zeros(n_afferents)
    if len(times) == 0:
        return out
    mask = times <= t
    dt = t - times[mask]
    k = v0 * (np.exp(-dt / tau_m) - np.exp(-dt / tau_s))
    np.add.at(out, neurons[mask], k)
    return out
