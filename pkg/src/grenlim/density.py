"""Piecewise-polynomial densities on [0, x_max] and their projection
onto decreasing densities.

The projection minimizes Kullback-Leibler divergence over decreasing
densities; it is computed as the left derivative of the least concave
majorant of the true CDF. Where the majorant touches the CDF the
projected density keeps the curved shape of the input; where it skips
above, the projection is flat on a block whose level is the block
average of the input density.

Regions are classified relative to a gap tolerance: the misspecified
open set is where the majorant sits strictly above the CDF, its
complement is the well-specified (touch) set.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import quad

from .exceptions import DomainError, InvalidInputError, NumericError
from .integrands import Integrand, get_integrand
from .lcm import _lcm_arrays
from .rng import as_generator

__all__ = [
    "DEFAULT_PROJECTION_GRID",
    "FLAT_MERGE_TOL",
    "PiecewisePolyDensity",
    "FlatBlock",
    "KlProjection",
    "RegionDecomposition",
    "GBar",
    "preset_density",
    "kl_projection",
    "decompose_regions",
    "functional_mean",
    "gbar",
    "region_tolerance",
]

DEFAULT_PROJECTION_GRID = 2**14 + 1
MIN_PROJECTION_GRID = 2**10 + 1
# Consecutive grid slopes closer than this merge into one flat block.
FLAT_MERGE_TOL = 1e-9
MAX_DEGREE = 6
QUANTILE_TOL = 1e-12
MASS_TOL = 1e-9


def region_tolerance(cdf_scale: float = 1.0) -> float:
    """Gap tolerance separating touch points from the misspecified set."""
    return 1e-9 * (1.0 + abs(cdf_scale))


class PiecewisePolyDensity:
    """Probability density that is polynomial on each of finitely many
    segments tiling [0, x_max].

    Parameters
    ----------
    segments : sequence of (lo, hi, coeffs)
        Contiguous segments starting at 0; ``coeffs`` are ascending
        polynomial coefficients, degree at most 6.

    The density must be strictly positive on its support and integrate
    to 1 within 1e-9 (it is renormalized internally so the CDF ends at
    exactly 1).
    """

    def __init__(self, segments):
        segs = []
        for item in segments:
            try:
                lo, hi, coeffs = item
            except (TypeError, ValueError):
                raise InvalidInputError(
                    "each segment must be (lo, hi, coeffs)"
                ) from None
            coeffs = np.asarray(coeffs, dtype=np.float64)
            if coeffs.ndim != 1 or coeffs.size < 1 or coeffs.size > MAX_DEGREE + 1:
                raise InvalidInputError(
                    f"coeffs must be 1..{MAX_DEGREE + 1} ascending coefficients"
                )
            if not (np.all(np.isfinite(coeffs)) and np.isfinite(lo) and np.isfinite(hi)):
                raise InvalidInputError("segment data must be finite")
            segs.append((float(lo), float(hi), coeffs))
        if not segs:
            raise InvalidInputError("need at least one segment")
        if segs[0][0] != 0.0:
            raise InvalidInputError("support must start at 0")
        for (lo, hi, _), (lo2, _, _) in zip(segs, segs[1:] + [(segs[-1][1], 0, 0)]):
            if hi <= lo:
                raise InvalidInputError("segments must have positive width")
            if lo2 != hi:
                raise InvalidInputError("segments must tile the support contiguously")

        self.breaks = np.array([s[0] for s in segs] + [segs[-1][1]])
        raw_coeffs = [s[2] for s in segs]

        # positivity check on a dense per-segment grid
        for lo, hi, c in segs:
            t = np.linspace(lo, hi, 257)
            if np.min(npoly.polyval(t, c)) <= 0.0:
                raise InvalidInputError("density must be strictly positive on its support")

        total = 0.0
        for lo, hi, c in segs:
            a = npoly.polyint(c)
            total += npoly.polyval(hi, a) - npoly.polyval(lo, a)
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidInputError(
                f"density must integrate to 1 within {MASS_TOL:g}; got {total:.12g}"
            )

        scale = 1.0 / total
        self.coeffs = tuple(c * scale for c in raw_coeffs)
        self._antis = tuple(npoly.polyint(c) for c in self.coeffs)
        cum = np.zeros(len(segs) + 1)
        for i, (a, (lo, hi)) in enumerate(zip(self._antis, zip(self.breaks, self.breaks[1:]))):
            cum[i + 1] = cum[i] + (npoly.polyval(hi, a) - npoly.polyval(lo, a))
        cum[-1] = 1.0
        self._cum = cum

    # -- basic queries ------------------------------------------------

    @property
    def x_max(self) -> float:
        return float(self.breaks[-1])

    @property
    def n_segments(self) -> int:
        return len(self.coeffs)

    def _segment_of(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breaks, x, side="left") - 1
        return np.clip(idx, 0, self.n_segments - 1)

    def _check_domain(self, x: np.ndarray):
        if x.size and (np.min(x) < 0.0 or np.max(x) > self.x_max):
            raise DomainError(f"x outside the support [0, {self.x_max}]")

    def pdf(self, x):
        """Density value; the segment owning a breakpoint is the left one."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
        self._check_domain(x_arr)
        out = np.empty_like(x_arr)
        seg = self._segment_of(x_arr)
        for j, c in enumerate(self.coeffs):
            m = seg == j
            if np.any(m):
                out[m] = npoly.polyval(x_arr[m], c)
        return float(out[0]) if np.ndim(x) == 0 else out

    def pdf_at(self, x: float, side: str = "-") -> float:
        """One-sided density value at a breakpoint ('-' left, '+' right)."""
        x = float(x)
        if side == "-":
            j = int(np.clip(np.searchsorted(self.breaks, x, side="left") - 1, 0, self.n_segments - 1))
        else:
            j = int(np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, self.n_segments - 1))
        return float(npoly.polyval(x, self.coeffs[j]))

    def cdf(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
        self._check_domain(x_arr)
        out = np.empty_like(x_arr)
        seg = self._segment_of(x_arr)
        for j, a in enumerate(self._antis):
            m = seg == j
            if np.any(m):
                lo = self.breaks[j]
                out[m] = self._cum[j] + (npoly.polyval(x_arr[m], a) - npoly.polyval(lo, a))
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if np.ndim(x) == 0 else out

    def quantile(self, u):
        """Inverse CDF, accurate to |cdf(x) - u| <= 1e-12.

        Safeguarded per-segment bisection with Newton acceleration: the
        bracket is never abandoned, Newton steps are taken only when
        they stay inside it.
        """
        u_arr = np.atleast_1d(np.asarray(u, dtype=np.float64))
        if u_arr.size and (np.min(u_arr) < 0.0 or np.max(u_arr) > 1.0):
            raise DomainError("quantile argument must lie in [0, 1]")
        seg = np.clip(np.searchsorted(self._cum, u_arr, side="left") - 1, 0, self.n_segments - 1)
        lo = self.breaks[seg].copy()
        hi = self.breaks[seg + 1].copy()
        width = self._cum[seg + 1] - self._cum[seg]
        frac = np.where(width > 0, (u_arr - self._cum[seg]) / np.where(width > 0, width, 1.0), 0.5)
        x = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
        for _ in range(200):
            fx = self._cdf_by_segment(x, seg) - u_arr
            live = np.abs(fx) > QUANTILE_TOL
            if not np.any(live):
                break
            above = fx > 0
            hi = np.where(live & above, x, hi)
            lo = np.where(live & ~above, x, lo)
            dens = self._pdf_by_segment(x, seg)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = x - fx / dens
            mid = 0.5 * (lo + hi)
            ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
            x = np.where(live, np.where(ok, newton, mid), x)
        else:
            raise NumericError("quantile iteration failed to reach 1e-12")
        return float(x[0]) if np.ndim(u) == 0 else x

    def _pdf_by_segment(self, x, seg):
        out = np.empty_like(x)
        for j, c in enumerate(self.coeffs):
            m = seg == j
            if np.any(m):
                out[m] = npoly.polyval(x[m], c)
        return out

    def _cdf_by_segment(self, x, seg):
        out = np.empty_like(x)
        for j, a in enumerate(self._antis):
            m = seg == j
            if np.any(m):
                out[m] = self._cum[j] + (npoly.polyval(x[m], a) - npoly.polyval(self.breaks[j], a))
        return out

    def sample(self, n: int, seed) -> np.ndarray:
        """n inverse-CDF draws, sorted ascending."""
        if n < 1:
            raise InvalidInputError("need n >= 1")
        rng = as_generator(seed)
        return np.sort(self.quantile(rng.random(int(n))))

    def entropy(self) -> float:
        """Integral of f log f over the support."""
        total = 0.0
        for j, c in enumerate(self.coeffs):
            lo, hi = self.breaks[j], self.breaks[j + 1]
            val, _ = quad(lambda t, c=c: npoly.polyval(t, c) * np.log(npoly.polyval(t, c)),
                          lo, hi, epsabs=1e-11, limit=200)
            total += val
        return total

    # -- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "segments": [
                {"lo": float(self.breaks[j]), "hi": float(self.breaks[j + 1]),
                 "coeffs": [float(v) for v in c]}
                for j, c in enumerate(self.coeffs)
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewisePolyDensity":
        if not isinstance(d, dict) or set(d) != {"segments"}:
            raise InvalidInputError('density spec must be {"segments": [...]}')
        segs = []
        for s in d["segments"]:
            if not isinstance(s, dict) or set(s) != {"lo", "hi", "coeffs"}:
                raise InvalidInputError('each segment must be {"lo", "hi", "coeffs"}')
            segs.append((s["lo"], s["hi"], s["coeffs"]))
        return cls(segs)

    @classmethod
    def from_json_file(cls, path) -> "PiecewisePolyDensity":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidInputError(f"cannot read density spec {path}: {e}") from None
        return cls.from_dict(d)

    def spec_hash(self) -> str:
        """Short stable hash of the canonical JSON spec."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


_PRESETS = {
    # flat at 1.5 then linearly rising: misspecified on the right half
    "eg1": [(0.0, 0.5, [1.5]), (0.5, 1.0, [-0.25, 1.0])],
    # symmetric parabola 12(x-1/2)^2 with a low plateau bridging the dip
    "eg2": [(0.0, 0.4, [3.0, -12.0, 12.0]),
            (0.4, 0.6, [0.04]),
            (0.6, 1.0, [3.0, -12.0, 12.0])],
    "uniform": [(0.0, 1.0, [1.0])],
}


def preset_density(name: str) -> PiecewisePolyDensity:
    """Built-in densities: eg1, eg2, uniform."""
    try:
        segs = _PRESETS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown preset {name!r}; available: {sorted(_PRESETS)}"
        ) from None
    return PiecewisePolyDensity(segs)


# -- projection -------------------------------------------------------


@dataclass(frozen=True)
class FlatBlock:
    """One maximal interval (a, b] on which the projection is constant."""

    a: float
    b: float
    qhat: float  # block level, equals the block average of the density
    p: float     # probability mass of the block under the true density


class KlProjection:
    """Projection of a density onto decreasing densities.

    Alternating structure of curved stretches (where the projection
    coincides with the input density) and flat blocks (chords of the
    input CDF). ``cdf`` is the least concave majorant of the input CDF,
    ``pdf`` its left derivative.
    """

    def __init__(self, density: PiecewisePolyDensity, grid: int,
                 bounds: np.ndarray, kinds: tuple, blocks: tuple):
        self.density = density
        self.grid = int(grid)
        self.bounds = bounds
        self.kinds = kinds
        self.blocks = blocks
        self._block_of_structure = {}
        b_iter = iter(range(len(blocks)))
        for i, k in enumerate(kinds):
            if k == "flat":
                self._block_of_structure[i] = next(b_iter)
        self._cache = {}

    @property
    def curved(self) -> list[tuple[float, float]]:
        return [(float(self.bounds[i]), float(self.bounds[i + 1]))
                for i, k in enumerate(self.kinds) if k == "curved"]

    def _structure_of(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.bounds, x, side="left") - 1
        return np.clip(idx, 0, len(self.kinds) - 1)

    def pdf(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
        self.density._check_domain(x_arr)
        out = np.empty_like(x_arr)
        st = self._structure_of(x_arr)
        for i, k in enumerate(self.kinds):
            m = st == i
            if not np.any(m):
                continue
            if k == "curved":
                out[m] = self.density.pdf(x_arr[m])
            else:
                out[m] = self.blocks[self._block_of_structure[i]].qhat
        return float(out[0]) if np.ndim(x) == 0 else out

    def cdf(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
        self.density._check_domain(x_arr)
        out = np.empty_like(x_arr)
        st = self._structure_of(x_arr)
        for i, k in enumerate(self.kinds):
            m = st == i
            if not np.any(m):
                continue
            if k == "curved":
                out[m] = self.density.cdf(x_arr[m])
            else:
                blk = self.blocks[self._block_of_structure[i]]
                base = self.density.cdf(blk.a)
                out[m] = base + blk.qhat * (x_arr[m] - blk.a)
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if np.ndim(x) == 0 else out

    def entropy(self) -> float:
        """Integral of pdf * log(pdf): exact on blocks, quadrature on
        curved stretches."""
        total = 0.0
        for blk in self.blocks:
            total += blk.p * np.log(blk.qhat)
        f = self.density
        for lo, hi in self.curved:
            for plo, phi in _split_at_breaks(f, lo, hi):
                val, _ = quad(lambda t: f.pdf(np.asarray([t]))[0]
                              * np.log(f.pdf(np.asarray([t]))[0]),
                              plo, phi, epsabs=1e-11, limit=200)
                total += val
        return total

    def as_density(self) -> PiecewisePolyDensity:
        """Re-materialize the projection as a piecewise-polynomial density."""
        segs = []
        for i, k in enumerate(self.kinds):
            lo, hi = float(self.bounds[i]), float(self.bounds[i + 1])
            if k == "flat":
                segs.append((lo, hi, [self.blocks[self._block_of_structure[i]].qhat]))
            else:
                for plo, phi in _split_at_breaks(self.density, lo, hi):
                    j = int(self.density._segment_of(np.asarray([0.5 * (plo + phi)]))[0])
                    segs.append((plo, phi, list(self.density.coeffs[j])))
        # snap tiny float drift so the segments tile exactly
        fixed = []
        cursor = 0.0
        for lo, hi, c in segs:
            fixed.append((cursor, hi, c))
            cursor = hi
        return PiecewisePolyDensity(fixed)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "blocks": [
                {"a": blk.a, "b": blk.b, "qhat": blk.qhat, "p": blk.p}
                for blk in self.blocks
            ],
            "curved": [[lo, hi] for lo, hi in self.curved],
        }


def _split_at_breaks(density: PiecewisePolyDensity, lo: float, hi: float):
    """Split [lo, hi] at interior density breakpoints."""
    cuts = [lo] + [float(b) for b in density.breaks if lo < b < hi] + [hi]
    return list(zip(cuts, cuts[1:]))


def _flat_runs(cm, h: float):
    """Group majorant segments into flat runs and curved cells.

    A run of consecutive segments whose slopes pairwise agree within
    FLAT_MERGE_TOL, or any single segment skipping more than one grid
    cell, is flat; remaining single-cell segments are curved. Returns a
    list of (kind, lo, hi) structures covering the support.
    """
    xs, sl = cm.x, cm.slopes
    groups = []
    start = 0
    for i in range(1, sl.size):
        if abs(sl[i] - sl[i - 1]) > FLAT_MERGE_TOL:
            groups.append((start, i))
            start = i
    groups.append((start, sl.size))
    structures = []
    for g0, g1 in groups:
        lo, hi = xs[g0], xs[g1]
        ncells = (hi - lo) / h
        kind = "flat" if ncells > 1.5 else "curved"
        if structures and structures[-1][0] == kind == "curved":
            structures[-1] = ("curved", structures[-1][1], hi)
        else:
            structures.append((kind, lo, hi))
    return [(k, float(lo), float(hi)) for k, lo, hi in structures]


def _chord_gap_ok(density, a, fa, b, fb, probes, tol=1e-12) -> bool:
    if b <= a:
        return False
    s = (fb - fa) / (b - a)
    for x in probes:
        if a <= x <= b and fa + s * (x - a) - density.cdf(x) < -tol:
            return False
    return True


def _bisect(fn, lo, hi, tol=1e-13):
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        return None
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if (fm > 0) == (fhi > 0):
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _refine_boundary(density, p0, h, left_kind, right_kind, left_anchor, right_anchor):
    """Sharpen one structure boundary within its grid cell.

    Corner contacts snap to a density breakpoint when the supporting
    chord stays above the CDF near it; tangential contacts solve the
    slope-match residual by bisection (the CDF gap itself is
    quadratically flat there, so its sign cannot localize the root).
    """
    F = density.cdf
    f = density.pdf
    window = (p0 - 1.0001 * h, p0 + 1.0001 * h)

    # breakpoint candidates, nearest first
    cands = [float(b) for b in density.breaks if window[0] <= b <= window[1]]
    cands.sort(key=lambda b: abs(b - p0))
    for beta in cands:
        probes = np.linspace(max(0.0, beta - h), min(density.x_max, beta + h), 9)
        ok = True
        if left_kind == "flat":
            ok = ok and _chord_gap_ok(density, left_anchor, F(left_anchor), beta, F(beta), probes)
        if right_kind == "flat":
            ok = ok and _chord_gap_ok(density, beta, F(beta), right_anchor, F(right_anchor), probes)
        if ok:
            return beta

    # tangency: the chord slope matches the density at the touch point
    if right_kind == "flat" and left_kind == "curved":
        b = right_anchor

        def resid(t):
            return (F(b) - F(t)) - f(t) * (b - t)

        root = _bisect(resid, max(0.0, window[0]), min(density.x_max, window[1]))
        if root is not None:
            return root
    if left_kind == "flat" and right_kind == "curved":
        a = left_anchor

        def resid(t):
            return (F(t) - F(a)) - f(t) * (t - a)

        root = _bisect(resid, max(0.0, window[0]), min(density.x_max, window[1]))
        if root is not None:
            return root
    return p0


def kl_projection(density: PiecewisePolyDensity,
                  grid: int = DEFAULT_PROJECTION_GRID) -> KlProjection:
    """Project a density onto decreasing densities.

    Pipeline: sample the CDF on a uniform grid, take the least concave
    majorant of the sampled knots, merge equal-slope segments into flat
    blocks, then refine every block boundary inside its grid cell (see
    ``_refine_boundary``). Curved stretches between blocks carry the
    input density unchanged.
    """
    if not isinstance(density, PiecewisePolyDensity):
        raise InvalidInputError("kl_projection expects a PiecewisePolyDensity")
    if grid < MIN_PROJECTION_GRID:
        raise InvalidInputError(f"grid must be at least {MIN_PROJECTION_GRID}")
    xs = np.linspace(0.0, density.x_max, int(grid))
    F = density.cdf(xs)
    cm = _lcm_arrays(xs, F)
    h = xs[1] - xs[0]
    structures = _flat_runs(cm, h)

    # iterative boundary refinement; anchors are the current opposite
    # ends of the flat structures meeting each boundary
    bounds = [structures[0][1]] + [s[2] for s in structures]
    kinds = [s[0] for s in structures]
    for _ in range(40):
        moved = 0.0
        for i in range(1, len(bounds) - 1):
            lk, rk = kinds[i - 1], kinds[i]
            new = _refine_boundary(density, bounds[i], h, lk, rk,
                                   bounds[i - 1], bounds[i + 1])
            moved = max(moved, abs(new - bounds[i]))
            bounds[i] = new
        if moved < 1e-11:
            break

    bounds_arr = np.asarray(bounds)
    blocks = []
    for i, k in enumerate(kinds):
        if k != "flat":
            continue
        a, b = bounds_arr[i], bounds_arr[i + 1]
        fa, fb = density.cdf(a), density.cdf(b)
        blocks.append(FlatBlock(float(a), float(b), float((fb - fa) / (b - a)),
                                float(fb - fa)))
    return KlProjection(density, grid, bounds_arr, tuple(kinds), tuple(blocks))


# -- region decomposition ---------------------------------------------


@dataclass(frozen=True)
class RegionBlock:
    """Flat block with its touch-set classification."""

    a: float
    b: float
    qhat: float
    p: float
    touch: str  # "full" | "endpoints-only" | "mixed"

    @property
    def has_interior_touch(self) -> bool:
        return self.touch != "endpoints-only"


class RegionDecomposition:
    """Support split into misspecified intervals and their complement.

    ``misspecified`` are the maximal open intervals where the majorant
    exceeds the CDF by more than ``tol``; ``well_specified`` is the
    complement within the support; ``curved`` are the stretches where
    the projection keeps the input density; ``flat_blocks`` carry the
    touch classification used by the limit samplers.
    """

    def __init__(self, density, projection, tol, flat_blocks, misspecified,
                 well_specified, curved):
        self.density = density
        self.projection = projection
        self.tol = tol
        self.flat_blocks = flat_blocks
        self.misspecified = misspecified
        self.well_specified = well_specified
        self.curved = curved
        self._cache = {}

    def gap(self, x):
        """Majorant minus CDF, nonnegative up to rounding."""
        return self.projection.cdf(x) - self.density.cdf(x)

    def well_specified_mask(self, x) -> np.ndarray:
        return np.asarray(self.gap(x)) <= self.tol

    def block_containing(self, x0: float) -> RegionBlock | None:
        for blk in self.flat_blocks:
            if blk.a < x0 <= blk.b or (blk.a == 0.0 and x0 == 0.0):
                return blk
        return None

    def to_dict(self) -> dict:
        return {
            "blocks": [
                {"a": blk.a, "b": blk.b, "qhat": blk.qhat, "p": blk.p,
                 "touch": blk.touch}
                for blk in self.flat_blocks
            ],
            "misspecified": [[lo, hi] for lo, hi in self.misspecified],
            "well_specified": [[lo, hi] for lo, hi in self.well_specified],
            "curved": [[lo, hi] for lo, hi in self.curved],
        }


def decompose_regions(density: PiecewisePolyDensity,
                      projection: KlProjection | None = None,
                      tol: float | None = None,
                      grid: int = DEFAULT_PROJECTION_GRID) -> RegionDecomposition:
    """Classify the support relative to the projection.

    Within each flat block the gap majorant-minus-CDF is scanned on the
    projection grid; runs of nodes with gap above ``tol`` become
    misspecified intervals, bounded by the adjacent touch nodes.
    """
    if projection is None:
        projection = kl_projection(density, grid=grid)
    if tol is None:
        tol = region_tolerance(1.0)

    miss = []
    blocks = []
    for blk in projection.blocks:
        n_local = max(9, int(round((blk.b - blk.a) / (density.x_max / (projection.grid - 1)))) + 1)
        xs = np.linspace(blk.a, blk.b, n_local)
        gap = (density.cdf(blk.a) + blk.qhat * (xs - blk.a)) - density.cdf(xs)
        touch = gap <= tol
        touch[0] = touch[-1] = True
        runs = []
        i = 1
        while i < n_local - 1:
            if not touch[i]:
                j = i
                while j < n_local - 1 and not touch[j]:
                    j += 1
                runs.append((float(xs[i - 1]), float(xs[j])))
                i = j
            i += 1
        if not runs:
            label = "full"
        elif len(runs) == 1 and runs[0] == (blk.a, blk.b):
            label = "endpoints-only"
        else:
            label = "mixed"
        miss.extend(runs)
        blocks.append(RegionBlock(blk.a, blk.b, blk.qhat, blk.p, label))

    # complement of the misspecified set within the support
    well = []
    cursor = 0.0
    for lo, hi in miss:
        if lo > cursor:
            well.append((cursor, lo))
        cursor = hi
    if cursor < density.x_max:
        well.append((cursor, density.x_max))
    elif not miss:
        well.append((0.0, density.x_max))

    return RegionDecomposition(density, projection, tol, tuple(blocks),
                               tuple(miss), tuple(well),
                               tuple(projection.curved))


# -- functionals ------------------------------------------------------


def functional_mean(target, g) -> float:
    """Mean of g under a density or a projection.

    Exact when a flat piece meets an integrand with an antiderivative;
    adaptive quadrature (absolute tolerance 1e-10) otherwise.
    """
    gi = get_integrand(g)
    if isinstance(target, PiecewisePolyDensity):
        pieces = [(float(target.breaks[j]), float(target.breaks[j + 1]), target.coeffs[j])
                  for j in range(target.n_segments)]
    elif isinstance(target, KlProjection):
        pieces = []
        d = target.density
        for i, k in enumerate(target.kinds):
            lo, hi = float(target.bounds[i]), float(target.bounds[i + 1])
            if k == "flat":
                q = target.blocks[target._block_of_structure[i]].qhat
                pieces.append((lo, hi, np.array([q])))
            else:
                for plo, phi in _split_at_breaks(d, lo, hi):
                    j = int(d._segment_of(np.asarray([0.5 * (plo + phi)]))[0])
                    pieces.append((plo, phi, d.coeffs[j]))
    else:
        raise InvalidInputError("functional_mean expects a density or projection")

    eps_each = 1e-10 / max(1, len(pieces))
    total = 0.0
    for lo, hi, coeffs in pieces:
        if coeffs.size == 1 and gi.antiderivative is not None:
            total += float(coeffs[0]) * float(gi.antiderivative(hi) - gi.antiderivative(lo))
        else:
            val, err = quad(lambda t: float(gi.fn(t)) * npoly.polyval(t, coeffs),
                            lo, hi, epsabs=eps_each, limit=200)
            if err > 1e-7:
                raise NumericError(f"quadrature failed on [{lo}, {hi}] (err {err:g})")
            total += val
    return total


class GBar:
    """Projection of an integrand for the linear-functional limit:
    g itself on curved stretches, the block average of g under the
    density on each flat block."""

    def __init__(self, decomp: RegionDecomposition, g):
        self.decomp = decomp
        self.g = get_integrand(g)
        self.block_values = tuple(
            _block_average(self.g, blk) for blk in decomp.flat_blocks
        )

    def __call__(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
        out = np.asarray(self.g.fn(x_arr), dtype=np.float64).copy()
        for blk, val in zip(self.decomp.flat_blocks, self.block_values):
            m = (x_arr > blk.a) & (x_arr <= blk.b)
            out[m] = val
        return float(out[0]) if np.ndim(x) == 0 else out

    def rescaled(self, j: int):
        """g pulled back to [0, 1] over block j: u -> g(a + (b-a)u)."""
        blk = self.decomp.flat_blocks[j]

        def gj(u):
            return self.g.fn(blk.a + (blk.b - blk.a) * np.asarray(u, dtype=np.float64))

        return gj


def _block_average(gi: Integrand, blk) -> float:
    # plain average of g over the block; the projection is flat there,
    # so this is also the block average under the projected density
    if gi.antiderivative is not None:
        return float(gi.antiderivative(blk.b) - gi.antiderivative(blk.a)) / (blk.b - blk.a)
    val, _ = quad(lambda t: float(gi.fn(t)), blk.a, blk.b, epsabs=1e-12, limit=200)
    return val / (blk.b - blk.a)


def gbar(decomp: RegionDecomposition, g) -> GBar:
    """Blockwise-averaged integrand used by the linear-functional limit."""
    return GBar(decomp, g)
