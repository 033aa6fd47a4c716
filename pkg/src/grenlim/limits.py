"""Samplers for the limiting distributions of the decreasing-density
MLE when the truth need not be decreasing.

Three limits are covered, all driven by Brownian bridges restricted to
the well-specified (touch) set of the projection:

* pointwise: sqrt(n) * (fit(x0) - projection(x0)) at a point interior
  to a flat block converges to the left derivative, at x0, of the least
  concave majorant of the time-changed bridge restricted to the touch
  set of the block. When the block touches only at its endpoints this
  is exactly Gaussian.
* linear functionals: a Gaussian term with variance var(gbar(X)) plus
  one independent restricted-bridge functional per flat block with
  interior touch points.
* entropy: Gaussian, with variance equal to the variance of the log
  projected density under either the true or the projected density
  (the two coincide).

Every sampler consumes randomness through a single generator in a
fixed documented order, so draws are reproducible from (seed, path).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .density import RegionDecomposition, _split_at_breaks, gbar
from .exceptions import (
    DomainError,
    InvalidInputError,
    NotApplicableError,
    NumericError,
)
from .integrands import get_integrand
from .lcm import StepFunction, _lcm_arrays
from .rng import as_generator

__all__ = [
    "DEFAULT_BRIDGE_GRID",
    "BridgePath",
    "sample_bridge",
    "gren_of_bridge",
    "sample_timechanged_bridge",
    "sigma2_pointwise",
    "sample_pointwise_limit",
    "sample_pointwise_limit_decomposed",
    "PointwiseLimitSampler",
    "check_integrand_conditions",
    "sigma2_linear",
    "sample_linear_limit",
    "LinearLimitSampler",
    "sigma2_entropy",
    "sample_entropy_limit",
    "EntropyLimitSampler",
]

DEFAULT_BRIDGE_GRID = 4097
MIN_BRIDGE_GRID = 257


def _check_grid(grid: int):
    if grid < MIN_BRIDGE_GRID:
        raise InvalidInputError(f"bridge grid must be at least {MIN_BRIDGE_GRID}")


def _eval_vec(fn, x: np.ndarray) -> np.ndarray:
    # tolerate scalar-only callables for custom integrands
    try:
        out = np.asarray(fn(x), dtype=np.float64)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.asarray([float(fn(float(v))) for v in x], dtype=np.float64)


@dataclass(frozen=True)
class BridgePath:
    """A Brownian bridge realization on a grid in [0, 1]."""

    t: np.ndarray
    values: np.ndarray


def _bridge_values(t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Brownian motion over the partition of [0,1] refined by t, pinned
    # by subtracting t * W(1). t[0] = 0 and t[-1] = 1 are required.
    dt = np.diff(t)
    z = rng.standard_normal(dt.size) * np.sqrt(dt)
    w = np.concatenate(([0.0], np.cumsum(z)))
    u = w - t * w[-1]
    u[0] = 0.0
    u[-1] = 0.0
    return u


def sample_bridge(grid: int = DEFAULT_BRIDGE_GRID, seed=0) -> BridgePath:
    """Standard Brownian bridge on a uniform grid of [0, 1]."""
    _check_grid(grid)
    t = np.linspace(0.0, 1.0, int(grid))
    return BridgePath(t, _bridge_values(t, as_generator(seed)))


def sample_timechanged_bridge(density, xs: np.ndarray, seed=0) -> np.ndarray:
    """Bridge composed with the CDF: values of U(F(x)) at the given x.

    The variance at each x is F(x)(1 - F(x)). Exactly ``len(xs) + 1``
    normals are consumed (the partition is padded to cover [0, 1]).
    """
    rng = as_generator(seed)
    s = density.cdf(np.asarray(xs, dtype=np.float64))
    return _timechanged_values(s, rng)


def _timechanged_values(s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    full = np.concatenate(([0.0], s, [1.0]))
    ds = np.clip(np.diff(full), 0.0, None)
    z = rng.standard_normal(ds.size) * np.sqrt(ds)
    wtot = float(np.sum(z))
    w = np.cumsum(z[:-1])
    return w - s * wtot


def gren_of_bridge(path: BridgePath, active=None) -> StepFunction:
    """Left derivative of the majorant of a bridge path, optionally
    restricted to the active grid nodes (endpoints always active)."""
    t, v = path.t, path.values
    if active is not None:
        sel = np.asarray(active, dtype=bool)
        if sel.shape != t.shape:
            raise InvalidInputError("active mask must match the grid")
        if not (sel[0] and sel[-1]):
            raise InvalidInputError("endpoints must stay active")
        t, v = t[sel], v[sel]
    return _lcm_arrays(t, v).gren()


# -- pointwise --------------------------------------------------------


def _require_block(decomp: RegionDecomposition, x0: float):
    if not 0.0 <= x0 <= decomp.density.x_max:
        raise DomainError("x0 outside the support")
    blk = decomp.block_containing(x0)
    if blk is None or not (blk.a < x0 < blk.b):
        raise NotApplicableError(
            "x0 is not interior to a flat block of the projection; the "
            "flat-block limit theory does not apply there"
        )
    return blk


def sigma2_pointwise(decomp: RegionDecomposition, x0: float) -> float:
    """Variance of the pointwise limit when the block touches the CDF
    only at its endpoints: qhat * (1/(b-a) - qhat)."""
    blk = _require_block(decomp, x0)
    if blk.has_interior_touch:
        raise NotApplicableError(
            "block has interior touch points; the limit is not Gaussian, "
            "use sample_pointwise_limit"
        )
    return blk.qhat * (1.0 / (blk.b - blk.a) - blk.qhat)


class PointwiseLimitSampler:
    """Reusable sampler for the pointwise limit at one location.

    Precomputes the grid, the time change, and the touch mask; ``draw``
    then costs one bridge plus one restricted majorant. When the block
    touches only at its endpoints the draw collapses to a single
    Gaussian (one normal consumed).
    """

    def __init__(self, decomp: RegionDecomposition, x0: float,
                 grid: int = DEFAULT_BRIDGE_GRID):
        _check_grid(grid)
        blk = _require_block(decomp, x0)
        self.block = blk
        self.x0 = float(x0)
        self.grid = int(grid)
        self.xs = np.linspace(blk.a, blk.b, self.grid)
        self.s = decomp.density.cdf(self.xs)
        active = decomp.well_specified_mask(self.xs)
        active[0] = active[-1] = True
        self.active = active
        self.gaussian = not bool(np.any(active[1:-1]))
        p = blk.p
        self._scale = np.sqrt(p * (1.0 - p)) / (blk.b - blk.a)

    def draw(self, seed) -> float:
        rng = as_generator(seed)
        if self.gaussian:
            return float(self._scale * rng.standard_normal())
        u = _timechanged_values(self.s, rng)
        f = _lcm_arrays(self.xs[self.active], u[self.active]).gren()
        return f(self.x0)


def sample_pointwise_limit(decomp: RegionDecomposition, x0: float, seed,
                           grid: int = DEFAULT_BRIDGE_GRID) -> float:
    """One draw of the pointwise limit at x0.

    Construction: a Brownian bridge time-changed by the true CDF on a
    grid of the block, its majorant restricted to the grid nodes in the
    well-specified set, and the left derivative evaluated at x0. The
    endpoints-only case shortcuts to the exact Gaussian.
    """
    return PointwiseLimitSampler(decomp, x0, grid).draw(seed)


def sample_pointwise_limit_decomposed(decomp: RegionDecomposition, x0: float,
                                      seed,
                                      grid: int = DEFAULT_BRIDGE_GRID) -> float:
    """One draw of the same limit via the block-local decomposition:
    (Z + sqrt(p) * gren(U_mod)(u0)) / (b - a), with Z Gaussian of
    variance p(1-p) and U an independent standard bridge restricted to
    the rescaled touch set. Z is drawn first, then the bridge."""
    _check_grid(grid)
    blk = _require_block(decomp, x0)
    rng = as_generator(seed)
    width = blk.b - blk.a
    z = rng.standard_normal() * np.sqrt(blk.p * (1.0 - blk.p))
    t = np.linspace(0.0, 1.0, int(grid))
    active = decomp.well_specified_mask(blk.a + width * t)
    active[0] = active[-1] = True
    u = _bridge_values(t, rng)
    f = _lcm_arrays(t[active], u[active]).gren()
    u0 = (x0 - blk.a) / width
    return float((z + np.sqrt(blk.p) * f(u0)) / width)


# -- linear functionals ----------------------------------------------


def check_integrand_conditions(decomp: RegionDecomposition, g) -> None:
    """Validate the integrand for the linear-functional limit.

    Requires g finite on the support and integrable to power 2.5 on the
    flat region; the limit law needs that much integrability from g.
    """
    gi = get_integrand(g)
    probes = np.linspace(0.0, decomp.density.x_max, 513)
    vals = _eval_vec(gi.fn, probes)
    if not np.all(np.isfinite(vals)):
        raise InvalidInputError("g must be finite on the support")
    for blk in decomp.flat_blocks:
        val, _ = quad(lambda t: abs(float(gi.fn(t))) ** 2.5, blk.a, blk.b,
                      epsabs=1e-8, limit=200)
        if not np.isfinite(val):
            raise InvalidInputError(
                "g fails the moment condition on a flat block"
            )


def sigma2_linear(decomp: RegionDecomposition, g) -> float:
    """Variance of the Gaussian term: var of gbar(X) under the truth."""
    gi = get_integrand(g)
    key = ("sigma2_linear", gi.name) if gi.name != "custom" else None
    if key is not None and key in decomp._cache:
        return decomp._cache[key]
    check_integrand_conditions(decomp, gi)
    gb = gbar(decomp, gi)
    d = decomp.density
    e1 = 0.0
    e2 = 0.0
    for lo, hi in decomp.curved:
        for plo, phi in _split_at_breaks(d, lo, hi):
            v1, _ = quad(lambda t: float(gi.fn(t)) * d.pdf(np.asarray([t]))[0],
                         plo, phi, epsabs=1e-11, limit=200)
            v2, _ = quad(lambda t: float(gi.fn(t)) ** 2 * d.pdf(np.asarray([t]))[0],
                         plo, phi, epsabs=1e-11, limit=200)
            e1 += v1
            e2 += v2
    for blk, val in zip(decomp.flat_blocks, gb.block_values):
        e1 += val * blk.p
        e2 += val * val * blk.p
    out = e2 - e1 * e1
    if out < -1e-12:
        raise NumericError("negative variance from quadrature")
    out = max(out, 0.0)
    if key is not None:
        decomp._cache[key] = out
    return out


class LinearLimitSampler:
    """Reusable sampler for the linear-functional limit.

    One Gaussian with variance var(gbar(X)), plus, for every flat block
    with interior touch points, sqrt(p_j) times the integral over [0,1]
    of the rescaled integrand against the left derivative of the
    restricted-bridge majorant. Blocks are processed in order; blocks
    touching only at their endpoints contribute exactly zero and are
    skipped without consuming randomness.
    """

    def __init__(self, decomp: RegionDecomposition, g,
                 grid: int = DEFAULT_BRIDGE_GRID):
        _check_grid(grid)
        gi = get_integrand(g)
        self.sigma_gauss = float(np.sqrt(sigma2_linear(decomp, gi)))
        self.grid = int(grid)
        self.t = np.linspace(0.0, 1.0, self.grid)
        gb = gbar(decomp, gi)
        self.bridge_blocks = []
        for j, blk in enumerate(decomp.flat_blocks):
            if not blk.has_interior_touch:
                continue
            active = decomp.well_specified_mask(blk.a + (blk.b - blk.a) * self.t)
            active[0] = active[-1] = True
            gj = _eval_vec(gb.rescaled(j), self.t)
            self.bridge_blocks.append((np.sqrt(blk.p), active, gj))

    def draw(self, seed) -> float:
        rng = as_generator(seed)
        total = self.sigma_gauss * rng.standard_normal()
        for sqrt_p, active, gj in self.bridge_blocks:
            u = _bridge_values(self.t, rng)
            f = _lcm_arrays(self.t[active], u[active]).gren()
            total += sqrt_p * float(np.trapezoid(gj * f(self.t), self.t))
        return float(total)


def sample_linear_limit(decomp: RegionDecomposition, g, seed,
                        grid: int = DEFAULT_BRIDGE_GRID) -> float:
    """One draw of the linear-functional limit for integrand g."""
    return LinearLimitSampler(decomp, g, grid).draw(seed)


# -- entropy ----------------------------------------------------------


def sigma2_entropy(decomp: RegionDecomposition) -> float:
    """Variance of the entropy limit: var of log projected density.

    Computed under the true density by quadrature and under the
    projected density by exact block sums; the two must agree (they are
    equal identities) and the truth-side value is returned.
    """
    if "sigma2_entropy" in decomp._cache:
        return decomp._cache["sigma2_entropy"]
    d = decomp.density
    proj = decomp.projection

    def moments_under_truth():
        e1 = 0.0
        e2 = 0.0
        for lo, hi in decomp.curved:
            for plo, phi in _split_at_breaks(d, lo, hi):
                v1, _ = quad(lambda t: np.log(d.pdf(np.asarray([t]))[0])
                             * d.pdf(np.asarray([t]))[0], plo, phi,
                             epsabs=1e-11, limit=200)
                v2, _ = quad(lambda t: np.log(d.pdf(np.asarray([t]))[0]) ** 2
                             * d.pdf(np.asarray([t]))[0], plo, phi,
                             epsabs=1e-11, limit=200)
                e1 += v1
                e2 += v2
        for blk in decomp.flat_blocks:
            mass = d.cdf(blk.b) - d.cdf(blk.a)
            e1 += np.log(blk.qhat) * mass
            e2 += np.log(blk.qhat) ** 2 * mass
        return e1, e2

    def moments_under_projection():
        e1 = 0.0
        e2 = 0.0
        for lo, hi in decomp.curved:
            for plo, phi in _split_at_breaks(d, lo, hi):
                v1, _ = quad(lambda t: np.log(proj.pdf(np.asarray([t]))[0])
                             * proj.pdf(np.asarray([t]))[0], plo, phi,
                             epsabs=1e-11, limit=200)
                v2, _ = quad(lambda t: np.log(proj.pdf(np.asarray([t]))[0]) ** 2
                             * proj.pdf(np.asarray([t]))[0], plo, phi,
                             epsabs=1e-11, limit=200)
                e1 += v1
                e2 += v2
        for blk in decomp.flat_blocks:
            e1 += np.log(blk.qhat) * blk.p
            e2 += np.log(blk.qhat) ** 2 * blk.p
        return e1, e2

    a1, a2 = moments_under_truth()
    b1, b2 = moments_under_projection()
    va = a2 - a1 * a1
    vb = b2 - b1 * b1
    if abs(va - vb) > 1e-6:
        raise NumericError(
            f"entropy variance mismatch between measures: {va!r} vs {vb!r}"
        )
    out = max(va, 0.0)
    decomp._cache["sigma2_entropy"] = out
    return out


class EntropyLimitSampler:
    """Gaussian sampler for the entropy limit."""

    def __init__(self, decomp: RegionDecomposition):
        self.sigma = float(np.sqrt(sigma2_entropy(decomp)))

    def draw(self, seed) -> float:
        return float(self.sigma * as_generator(seed).standard_normal())


def sample_entropy_limit(decomp: RegionDecomposition, seed) -> float:
    """One draw of the entropy limit."""
    return EntropyLimitSampler(decomp).draw(seed)
