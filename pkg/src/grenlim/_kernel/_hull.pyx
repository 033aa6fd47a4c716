# cython: boundscheck=False, wraparound=False, cdivision=True
"""Monotone-stack scan for the upper concave hull of points sorted by x.

Compiled twin of ``_hull_py.upper_hull_indices``; both must perform the
same float64 operations in the same order so the retained index sets are
bit-identical.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def upper_hull_indices(double[::1] x, double[::1] y):
    """Indices of the vertices of the upper concave hull of (x, y).

    x must be strictly increasing. The first and last points are always
    retained; a middle point lying on or below the chord of its
    neighbours is dropped, so exactly-collinear runs collapse.
    """
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] stack = out
    cdef Py_ssize_t top = 0, i, a, b
    cdef double cross
    stack[0] = 0
    for i in range(1, n):
        while top >= 1:
            a = stack[top - 1]
            b = stack[top]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (x[i] - x[a]) * (y[b] - y[a])
            if cross >= 0.0:
                top -= 1
            else:
                break
        top += 1
        stack[top] = i
    return np.asarray(out[: top + 1]).copy()
