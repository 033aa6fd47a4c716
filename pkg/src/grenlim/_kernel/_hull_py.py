"""Pure-Python fallback for the upper-hull kernel.

Same scan, same float64 arithmetic, same comparisons as the compiled
version in ``_hull.pyx``; the two must stay bit-identical.
"""

import numpy as np


def upper_hull_indices(x, y):
    xs = np.ascontiguousarray(x, dtype=np.float64).tolist()
    ys = np.ascontiguousarray(y, dtype=np.float64).tolist()
    n = len(xs)
    stack = [0]
    for i in range(1, n):
        xi = xs[i]
        yi = ys[i]
        while len(stack) >= 2:
            a = stack[-2]
            b = stack[-1]
            cross = (xs[b] - xs[a]) * (yi - ys[a]) - (xi - xs[a]) * (ys[b] - ys[a])
            if cross >= 0.0:
                stack.pop()
            else:
                break
        stack.append(i)
    return np.asarray(stack, dtype=np.intp)
