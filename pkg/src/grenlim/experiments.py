"""Desk-scale experiments: finite-sample distributions of functionals
of the decreasing-density MLE against their limit laws.

A *target* names the functional under study (the fit at a point, a
linear functional, or the entropy), and knows how to evaluate itself on
a fit, on the projection, and how to sample its limit law. A
*replication* draws B data sets of size n, computes the centered and
scaled functional on each, samples R draws of the limit, and packages
the comparison (moments, Kolmogorov-Smirnov distance, QQ table) in a
report that embeds the effective configuration.

Randomness is keyed by (seed, namespace, index): namespace 0 for data
replicates, 1 for limit draws, 2 for tail audits. Results are therefore
byte-identical for any worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .density import (
    DEFAULT_PROJECTION_GRID,
    PiecewisePolyDensity,
    RegionDecomposition,
    decompose_regions,
    functional_mean,
)
from .exceptions import InvalidInputError, NotApplicableError
from .grenander import GrenanderFit, fit
from .integrands import get_integrand
from .limits import (
    DEFAULT_BRIDGE_GRID,
    EntropyLimitSampler,
    LinearLimitSampler,
    PointwiseLimitSampler,
    sigma2_entropy,
    sigma2_linear,
    sigma2_pointwise,
)
from .rng import stream

__all__ = [
    "PointwiseTarget",
    "LinearTarget",
    "EntropyTarget",
    "get_target",
    "run_finite_sample",
    "run_limit",
    "run_replication",
    "ReplicationReport",
    "ks_two_sample",
    "qq_pairs",
    "tail_bound_audit",
]


# -- targets -----------------------------------------------------------


@dataclass(frozen=True)
class PointwiseTarget:
    """The fitted density at a fixed location."""

    x0: float
    kind: ClassVar[str] = "pointwise"

    @property
    def label(self) -> str:
        return f"pointwise_x{self.x0:g}"

    def finite_value(self, f: GrenanderFit) -> float:
        return f.pdf(self.x0)

    def projection_value(self, decomp: RegionDecomposition) -> float:
        return float(decomp.projection.pdf(np.asarray([self.x0]))[0])

    def true_value(self, density: PiecewisePolyDensity) -> float:
        return float(density.pdf(np.asarray([self.x0]))[0])

    def make_sampler(self, decomp, bridge_grid: int):
        return PointwiseLimitSampler(decomp, self.x0, bridge_grid)

    def sigma2(self, decomp) -> float | None:
        try:
            return sigma2_pointwise(decomp, self.x0)
        except NotApplicableError:
            return None


@dataclass(frozen=True)
class LinearTarget:
    """The integral of g against the fitted density.

    With multiple worker processes g must be a preset name or a
    picklable callable.
    """

    g: object = "identity"
    kind: ClassVar[str] = "linear"

    @property
    def label(self) -> str:
        return f"linear_{get_integrand(self.g).name}"

    def finite_value(self, f: GrenanderFit) -> float:
        return f.linear_functional(self.g)

    def projection_value(self, decomp: RegionDecomposition) -> float:
        return functional_mean(decomp.projection, self.g)

    def true_value(self, density: PiecewisePolyDensity) -> float:
        return functional_mean(density, self.g)

    def make_sampler(self, decomp, bridge_grid: int):
        return LinearLimitSampler(decomp, self.g, bridge_grid)

    def sigma2(self, decomp) -> float:
        # Gaussian part only; the full limit adds the bridge terms
        return sigma2_linear(decomp, self.g)


@dataclass(frozen=True)
class EntropyTarget:
    """The integral of f log f for the fitted density."""

    kind: ClassVar[str] = "entropy"

    @property
    def label(self) -> str:
        return "entropy"

    def finite_value(self, f: GrenanderFit) -> float:
        return f.entropy()

    def projection_value(self, decomp: RegionDecomposition) -> float:
        return decomp.projection.entropy()

    def true_value(self, density: PiecewisePolyDensity) -> float:
        return density.entropy()

    def make_sampler(self, decomp, bridge_grid: int):
        return EntropyLimitSampler(decomp)

    def sigma2(self, decomp) -> float:
        return sigma2_entropy(decomp)


def get_target(kind: str, x0: float | None = None, g=None):
    """Build a target from CLI-style arguments."""
    if kind == "pointwise":
        if x0 is None:
            raise InvalidInputError("pointwise target needs x0")
        return PointwiseTarget(float(x0))
    if kind == "linear":
        return LinearTarget(g if g is not None else "identity")
    if kind == "entropy":
        return EntropyTarget()
    raise InvalidInputError(
        f"unknown target {kind!r}; expected pointwise, linear, or entropy"
    )


# -- replicated computation --------------------------------------------


def _chunk_indices(total: int, workers: int) -> list[np.ndarray]:
    pieces = max(1, min(int(workers) * 4, total))
    return [a for a in np.array_split(np.arange(total), pieces) if a.size]


def _finite_chunk(args):
    density_dict, target, n, seed, indices = args
    d = PiecewisePolyDensity.from_dict(density_dict)
    out = np.empty(len(indices))
    for k, i in enumerate(indices):
        f = fit(d.sample(n, stream(seed, 0, int(i))))
        out[k] = target.finite_value(f)
    return indices, out


def run_finite_sample(density: PiecewisePolyDensity, target, n: int, B: int,
                      seed: int, workers: int = 1,
                      grid: int = DEFAULT_PROJECTION_GRID,
                      decomp: RegionDecomposition | None = None) -> np.ndarray:
    """B draws of sqrt(n) * (T(fit) - T(projection)), in replicate order.

    Replicate i always consumes the stream (seed, 0, i), so the output
    does not depend on the worker count.
    """
    if B < 1 or n < 1:
        raise InvalidInputError("need n >= 1 and B >= 1")
    if decomp is None:
        decomp = decompose_regions(density, grid=grid)
    theta_proj = target.projection_value(decomp)
    raw = np.empty(B)
    if workers <= 1:
        for i in range(B):
            f = fit(density.sample(n, stream(seed, 0, i)))
            raw[i] = target.finite_value(f)
    else:
        jobs = [(density.to_dict(), target, n, seed, idx)
                for idx in _chunk_indices(B, workers)]
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            for indices, vals in pool.map(_finite_chunk, jobs):
                raw[indices] = vals
    return np.sqrt(n) * (raw - theta_proj)


def _limit_chunk(args):
    density_dict, target, grid, bridge_grid, seed, indices = args
    d = PiecewisePolyDensity.from_dict(density_dict)
    sampler = target.make_sampler(decompose_regions(d, grid=grid), bridge_grid)
    out = np.empty(len(indices))
    for k, j in enumerate(indices):
        out[k] = sampler.draw(stream(seed, 1, int(j)))
    return indices, out


def run_limit(density: PiecewisePolyDensity, target, R: int, seed: int,
              workers: int = 1, grid: int = DEFAULT_PROJECTION_GRID,
              bridge_grid: int = DEFAULT_BRIDGE_GRID,
              decomp: RegionDecomposition | None = None) -> np.ndarray:
    """R independent draws of the target's limit law, in draw order.

    Draw j always consumes the stream (seed, 1, j).
    """
    if R < 1:
        raise InvalidInputError("need R >= 1")
    out = np.empty(R)
    if workers <= 1:
        if decomp is None:
            decomp = decompose_regions(density, grid=grid)
        sampler = target.make_sampler(decomp, bridge_grid)
        for j in range(R):
            out[j] = sampler.draw(stream(seed, 1, j))
    else:
        jobs = [(density.to_dict(), target, grid, bridge_grid, seed, idx)
                for idx in _chunk_indices(R, workers)]
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            for indices, vals in pool.map(_limit_chunk, jobs):
                out[indices] = vals
    return out


# -- comparison statistics ---------------------------------------------


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (sup gap of the ECDFs)."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("both samples must be nonempty")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


DEFAULT_QQ_PROBS = np.round(np.arange(0.01, 0.995, 0.01), 2)


def qq_pairs(empirical, limit, probs=None):
    """Matched quantiles of two samples at common probabilities.

    Returns (probs, empirical_quantiles, limit_quantiles).
    """
    if probs is None:
        probs = DEFAULT_QQ_PROBS
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size == 0 or np.min(probs) <= 0.0 or np.max(probs) >= 1.0:
        raise InvalidInputError("probabilities must lie strictly in (0, 1)")
    qe = np.quantile(np.asarray(empirical, dtype=np.float64), probs)
    ql = np.quantile(np.asarray(limit, dtype=np.float64), probs)
    return probs, qe, ql


# -- replication reports -----------------------------------------------


@dataclass
class ReplicationReport:
    """Finite-sample versus limit comparison for one target.

    ``finite_values`` hold sqrt(n) * (T(fit) - T(projection)); ``config``
    embeds everything needed to reproduce the run except the worker
    count, which never changes the numbers.
    """

    config: dict
    finite_values: np.ndarray
    limit_values: np.ndarray
    theta_true: float
    theta_proj: float
    sigma2: float | None
    probs: np.ndarray = field(repr=False, default=None)
    emp_quantiles: np.ndarray = field(repr=False, default=None)
    limit_quantiles: np.ndarray = field(repr=False, default=None)

    @property
    def ks(self) -> float:
        return ks_two_sample(self.finite_values, self.limit_values)

    @property
    def centering_drift(self) -> float:
        # scaled gap between the projected and true functional values:
        # the bias incurred by centering at the truth instead of the
        # projection
        return float(np.sqrt(self.config["n"]) * (self.theta_proj - self.theta_true))

    def summary(self) -> dict:
        return {
            "config": self.config,
            "theta_true": self.theta_true,
            "theta_proj": self.theta_proj,
            "centering_drift": self.centering_drift,
            "sigma2": self.sigma2,
            "finite_mean": float(np.mean(self.finite_values)),
            "finite_var": float(np.var(self.finite_values)),
            "limit_mean": float(np.mean(self.limit_values)),
            "limit_var": float(np.var(self.limit_values)),
            "ks": self.ks,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def qq_csv(self, path) -> None:
        rows = np.column_stack([self.probs, self.emp_quantiles,
                                self.limit_quantiles])
        header = "prob,empirical_quantile,limit_quantile"
        np.savetxt(path, rows, delimiter=",", header=header, comments="",
                   fmt="%.17g")


def effective_config(density, target, seed, n=None, B=None, R=None,
                     grid=DEFAULT_PROJECTION_GRID,
                     bridge_grid=DEFAULT_BRIDGE_GRID) -> dict:
    """The run parameters that determine the numbers, and nothing else."""
    cfg = {
        "density_hash": density.spec_hash(),
        "target": target.label,
        "seed": int(seed),
        "projection_grid": int(grid),
        "bridge_grid": int(bridge_grid),
    }
    if n is not None:
        cfg["n"] = int(n)
    if B is not None:
        cfg["B"] = int(B)
    if R is not None:
        cfg["R"] = int(R)
    return cfg


def run_replication(density: PiecewisePolyDensity, target, n: int, B: int,
                    R: int, seed: int, workers: int = 1,
                    grid: int = DEFAULT_PROJECTION_GRID,
                    bridge_grid: int = DEFAULT_BRIDGE_GRID) -> ReplicationReport:
    """Full comparison: B finite-sample replicates against R limit draws."""
    decomp = decompose_regions(density, grid=grid)
    finite = run_finite_sample(density, target, n, B, seed, workers,
                               grid=grid, decomp=decomp)
    limit = run_limit(density, target, R, seed, workers, grid=grid,
                      bridge_grid=bridge_grid, decomp=decomp)
    probs, qe, ql = qq_pairs(finite, limit)
    return ReplicationReport(
        config=effective_config(density, target, seed, n=n, B=B, R=R,
                                grid=grid, bridge_grid=bridge_grid),
        finite_values=finite,
        limit_values=limit,
        theta_true=target.true_value(density),
        theta_proj=target.projection_value(decomp),
        sigma2=target.sigma2(decomp),
        probs=probs,
        emp_quantiles=qe,
        limit_quantiles=ql,
    )


# -- tail-probability audit --------------------------------------------


def _tail_bounds(blk, alpha0: float, x: float, t: float, n: int,
                 t_floor: float):
    # exponential envelopes for the upper and lower deviations of the
    # scaled fit above/below the block level
    c0hat = alpha0 / blk.qhat
    k0 = 3.0 * np.sqrt(n)
    c0 = t_floor / (blk.qhat + t_floor / k0)
    upper = float(np.exp(-c0hat * c0 * t * (x - blk.a) / 2.0))
    if t <= np.sqrt(n) * blk.qhat:
        lower = float(np.exp(-c0hat * t * t * (blk.b - x) / (2.0 * blk.qhat)))
    else:
        lower = 0.0  # the fit is nonnegative, so this deviation is impossible
    return upper, lower


def tail_bound_audit(density: PiecewisePolyDensity, x_points, t_values,
                     n_values, B: int, seed: int,
                     grid: int = DEFAULT_PROJECTION_GRID) -> list[dict]:
    """Monte Carlo check of the exponential tail bounds on flat blocks.

    For each x interior to a flat block, each deviation t, and each
    sample size n, estimates P(sqrt(n)(fit(x) - qhat) > t) and
    P(sqrt(n)(fit(x) - qhat) < -t) from B replicates and compares them
    with the proved envelopes. A row is flagged when the frequency
    exceeds its bound by more than three standard errors.
    """
    if B < 1:
        raise InvalidInputError("need B >= 1")
    t_values = sorted(float(t) for t in t_values)
    if not t_values or t_values[0] <= 0.0:
        raise InvalidInputError("deviations t must be positive")
    decomp = decompose_regions(density, grid=grid)
    points = []
    for x in x_points:
        blk = decomp.block_containing(float(x))
        if blk is None or not (blk.a < float(x) < blk.b):
            raise NotApplicableError(
                f"x={x} is not interior to a flat block; the tail bounds "
                "are stated on flat blocks"
            )
        # infimum of the density over the open block: interior grid plus
        # one-sided limits at the edges (the pdf is left-continuous, so
        # plain evaluation at the left edge would read the wrong side)
        xs = np.linspace(blk.a, blk.b, 257)[1:-1]
        alpha0 = min(float(np.min(density.pdf(xs))),
                     density.pdf_at(blk.a, "+"), density.pdf_at(blk.b, "-"))
        points.append((float(x), blk, alpha0))
    rows = []
    for k, n in enumerate(int(v) for v in n_values):
        vals = np.empty((B, len(points)))
        for i in range(B):
            f = fit(density.sample(n, stream(seed, 2, k, i)))
            for c, (x, _, _) in enumerate(points):
                vals[i, c] = f.pdf(x)
        for c, (x, blk, alpha0) in enumerate(points):
            dev = np.sqrt(n) * (vals[:, c] - blk.qhat)
            for t in t_values:
                upper, lower = _tail_bounds(blk, alpha0, x, t, n, t_values[0])
                for side, bound, freq in (
                    ("upper", upper, float(np.mean(dev > t))),
                    ("lower", lower, float(np.mean(dev < -t))),
                ):
                    se = float(np.sqrt(freq * (1.0 - freq) / B))
                    rows.append({
                        "x": x, "t": t, "n": n, "side": side,
                        "bound": bound, "freq": freq, "se": se,
                        "violated": bool(freq > bound + 3.0 * se),
                    })
    return rows
