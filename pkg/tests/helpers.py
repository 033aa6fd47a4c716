"""Shared test utilities: brute-force oracles and random instances."""

import numpy as np


def random_knots(rng, n_max=12, ecdf=False):
    """One random knot instance with strictly increasing x."""
    n = int(rng.integers(2, n_max + 1))
    x = np.sort(rng.uniform(-2.0, 3.0, size=n))
    while np.any(np.diff(x) <= 0):
        x = np.sort(rng.uniform(-2.0, 3.0, size=n))
    if ecdf:
        y = np.arange(1, n + 1, dtype=float) / n
        y[0] = 0.0
    else:
        y = rng.uniform(-1.0, 2.0, size=n)
    return x, y


def oracle_majorant_values(x, y):
    """All-chords envelope: max over every chord through two knots.

    O(n^3) but exact; the least concave majorant evaluated at the input
    x values.
    """
    n = len(x)
    m = y.astype(float).copy()
    for j in range(n):
        for k in range(j + 1, n):
            t = (x[j + 1 : k] - x[j]) / (x[k] - x[j])
            chord = y[j] + t * (y[k] - y[j])
            m[j + 1 : k] = np.maximum(m[j + 1 : k], chord)
    return m


def oracle_vertices(x, y, slope_tol=1e-12, touch_tol=1e-12):
    """Indices of majorant vertices per the all-chords oracle.

    A vertex is an input knot the envelope touches where the slope
    strictly changes (beyond slope_tol), plus the two endpoints. This
    mirrors the collinear-merge rule of the implementation.
    """
    m = oracle_majorant_values(x, y)
    scale = 1.0 + np.max(np.abs(y))
    touch = np.flatnonzero(m - y <= touch_tol * scale)
    keep = [touch[0]]
    for t in range(1, len(touch) - 1):
        i_prev, i, i_next = keep[-1], touch[t], touch[t + 1]
        s_in = (y[i] - y[i_prev]) / (x[i] - x[i_prev])
        s_out = (y[i_next] - y[i]) / (x[i_next] - x[i])
        if s_in - s_out > slope_tol:
            keep.append(i)
    keep.append(touch[-1])
    return np.asarray(keep), m
