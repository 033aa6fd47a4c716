"""Least concave majorants of finite knot sets.

This module is the geometric core of the package: majorants of knot
sequences, their left derivatives (``gren``), majorants restricted to a
subset of active knots, and the switching relation that links the left
derivative to an argmax over the input function.

Conventions, used consistently everywhere:

* step functions are left-continuous and carry their values on
  left-open intervals ``(b[i], b[i+1]]``;
* majorants are piecewise linear through their retained knots, with
  strictly decreasing segment slopes (segments whose slopes agree
  within ``SLOPE_MERGE_TOL`` are merged);
* the switching argmax returns the largest maximizer, which is always
  attained at an input knot or at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernel import upper_hull_indices
from .exceptions import InvalidInputError

__all__ = [
    "SLOPE_MERGE_TOL",
    "StepFunction",
    "KnotSequence",
    "ConcaveMajorant",
    "lcm_of_knots",
    "restricted_lcm",
    "gren",
    "switching_argmax",
]

# Segments with slope difference at or below this merge into one.
SLOPE_MERGE_TOL = 1e-12


def _as_float_array(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class StepFunction:
    """Left-continuous step function.

    Parameters
    ----------
    breakpoints : array, shape (m+1,)
        Strictly increasing. ``breakpoints[0]`` is the left edge of the
        domain.
    levels : array, shape (m,)
        ``levels[i]`` is the value on ``(breakpoints[i], breakpoints[i+1]]``.

    Evaluation at ``t <= breakpoints[0]`` returns the first level and at
    ``t > breakpoints[-1]`` the last one; callers that need different
    boundary behaviour (densities vanishing off their support, say)
    wrap the call.
    """

    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        bp = _as_float_array(self.breakpoints, "breakpoints")
        lv = _as_float_array(self.levels, "levels")
        if lv.size < 1 or bp.size != lv.size + 1:
            raise InvalidInputError("need len(breakpoints) == len(levels) + 1 >= 2")
        if not np.all(np.diff(bp) > 0):
            raise InvalidInputError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.breakpoints, t_arr, side="left")
        idx = np.clip(idx, 1, self.levels.size)
        out = self.levels[idx - 1]
        return float(out) if np.ndim(t) == 0 else out

    def integral(self) -> float:
        """Integral over the whole domain, sum of level * width."""
        return float(np.sum(self.levels * np.diff(self.breakpoints)))

    @property
    def support(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])


@dataclass(frozen=True)
class KnotSequence:
    """Finite set of planar knots with strictly increasing x."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _as_float_array(self.x, "x")
        y = _as_float_array(self.y, "y")
        if x.size < 2:
            raise InvalidInputError("need at least 2 knots")
        if x.size != y.size:
            raise InvalidInputError("x and y must have equal length")
        if not np.all(np.diff(x) > 0):
            raise InvalidInputError("knot x values must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class ConcaveMajorant:
    """Piecewise-linear concave majorant through retained knots.

    ``slopes[i]`` is the slope on ``(x[i], x[i+1]]``; slopes are strictly
    decreasing. Evaluation interpolates linearly and clamps outside the
    knot range.
    """

    x: np.ndarray
    y: np.ndarray
    slopes: np.ndarray

    def __call__(self, t):
        out = np.interp(t, self.x, self.y)
        return float(out) if np.ndim(t) == 0 else out

    def gren(self) -> StepFunction:
        """Left derivative: the decreasing step function of segment slopes."""
        return StepFunction(self.x, self.slopes)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])


def _merge_collinear(kx: np.ndarray, ky: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    # Drop interior vertices where adjacent slopes agree within tol.
    if kx.size <= 2:
        return kx, ky
    s = np.diff(ky) / np.diff(kx)
    keep = np.empty(kx.size, dtype=bool)
    keep[0] = keep[-1] = True
    keep[1:-1] = np.abs(np.diff(s)) > tol
    return kx[keep], ky[keep]


def _lcm_arrays(x: np.ndarray, y: np.ndarray, tol: float = SLOPE_MERGE_TOL) -> ConcaveMajorant:
    """Majorant of pre-validated float64 arrays. Hot path, no checks."""
    idx = upper_hull_indices(np.ascontiguousarray(x), np.ascontiguousarray(y))
    kx, ky = _merge_collinear(x[idx], y[idx], tol)
    return ConcaveMajorant(kx, ky, np.diff(ky) / np.diff(kx))


def lcm_of_knots(knots: KnotSequence) -> ConcaveMajorant:
    """Least concave majorant of a knot sequence.

    The result dominates every input knot, touches the two endpoints,
    and is minimal among concave piecewise-linear dominators: every
    retained vertex coincides with an input knot.
    """
    if not isinstance(knots, KnotSequence):
        raise InvalidInputError("lcm_of_knots expects a KnotSequence")
    return _lcm_arrays(knots.x, knots.y)


def restricted_lcm(knots: KnotSequence, active) -> ConcaveMajorant:
    """Majorant computed over the active knots only.

    ``active`` is a boolean mask or an index array into ``knots``; it
    must include both endpoints. Between retained active knots the
    majorant interpolates linearly, exactly as if the inactive knots
    had been removed from the input.
    """
    if not isinstance(knots, KnotSequence):
        raise InvalidInputError("restricted_lcm expects a KnotSequence")
    sel = np.asarray(active)
    if sel.dtype == bool:
        if sel.shape != knots.x.shape:
            raise InvalidInputError("boolean mask must match the knot count")
        idx = np.flatnonzero(sel)
    else:
        idx = np.unique(sel.astype(np.intp))
        if idx.size and (idx[0] < 0 or idx[-1] >= len(knots)):
            raise InvalidInputError("active indices out of range")
    if idx.size < 2 or idx[0] != 0 or idx[-1] != len(knots) - 1:
        raise InvalidInputError("active set must include both endpoint knots")
    return _lcm_arrays(knots.x[idx], knots.y[idx])


def gren(majorant: ConcaveMajorant) -> StepFunction:
    """Left derivative of a concave majorant as a step function."""
    return majorant.gren()


def switching_argmax(cdf: StepFunction, level: float) -> float:
    """Largest maximizer of ``cdf(z) - level * z`` over ``{0} ∪ knots``.

    ``cdf`` must be a non-decreasing step function starting from 0 at
    its left edge (an empirical CDF, typically). The maximizer of the
    switching objective is always attained at a knot or at zero, and
    ties resolve to the largest candidate.
    """
    if not isinstance(cdf, StepFunction):
        raise InvalidInputError("switching_argmax expects a StepFunction")
    if np.any(np.diff(cdf.levels) < 0):
        raise InvalidInputError("switching_argmax needs a non-decreasing step")
    level = float(level)
    if not np.isfinite(level):
        raise InvalidInputError("level must be finite")
    z = cdf.breakpoints
    vals = np.concatenate(([0.0], cdf.levels))
    if z[0] > 0.0:
        z = np.concatenate(([0.0], z))
        vals = np.concatenate(([0.0], vals))
    obj = vals - level * z
    best = obj.size - 1 - int(np.argmax(obj[::-1]))
    return float(z[best])
