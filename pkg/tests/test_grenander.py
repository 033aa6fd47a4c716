"""Decreasing-density MLE: exact small examples, characterizing
identities, and concentration behavior."""

import numpy as np
import pytest

from grenlim.density import PiecewisePolyDensity, preset_density
from grenlim.exceptions import DomainError, InvalidInputError
from grenlim.grenander import fit
from grenlim.lcm import switching_argmax
from grenlim.rng import stream

EXAMPLE = np.array([0.2, 0.4, 0.9])


def test_three_point_example_exact():
    f = fit(EXAMPLE)
    assert f.steps.breakpoints.tolist() == [0.0, 0.4, 0.9]
    assert f.steps.levels == pytest.approx([5.0 / 3.0, 2.0 / 3.0], abs=1e-15)
    assert f.pdf(0.3) == pytest.approx(5.0 / 3.0, abs=1e-15)
    assert f.pdf(0.4) == pytest.approx(5.0 / 3.0, abs=1e-15)   # left continuous
    assert f.pdf(0.4 + 1e-12) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert f.pdf(0.95) == 0.0
    assert f.pdf(-0.1) == 0.0
    assert f.cdf(0.4) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert f.cdf(2.0) == 1.0
    assert f.linear_functional("identity") == pytest.approx(0.35, abs=1e-14)
    want_entropy = (5 / 3) * 0.4 * np.log(5 / 3) + (2 / 3) * 0.5 * np.log(2 / 3)
    assert f.entropy() == pytest.approx(want_entropy, abs=1e-14)


def test_single_observation():
    f = fit(np.array([2.0]))
    assert f.steps.breakpoints.tolist() == [0.0, 2.0]
    assert f.steps.levels == pytest.approx([0.5], abs=1e-15)


def test_ties_pooled():
    f = fit(np.array([0.5, 0.5, 0.5, 1.0]))
    assert f.steps.breakpoints.tolist() == [0.0, 0.5, 1.0]
    assert f.steps.levels == pytest.approx([1.5, 0.5], abs=1e-15)


def test_validation():
    with pytest.raises(InvalidInputError):
        fit(np.array([]))
    with pytest.raises(DomainError):
        fit(np.array([0.3, -0.1]))
    with pytest.raises(DomainError):
        fit(np.array([0.0, 0.5]))
    with pytest.raises(InvalidInputError):
        fit(np.array([0.3, np.nan]))


def test_ecdf_gap_two_points():
    assert fit(np.array([0.5, 1.0])).ecdf_gap() == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("seed", range(8))
def test_integrates_to_one(seed):
    rng = stream(100 + seed)
    s = rng.uniform(0.01, 3.0, size=int(rng.integers(1, 400)))
    assert fit(s).steps.integral() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_scale_equivariance(c):
    rng = stream(7)
    s = rng.uniform(0.05, 2.0, size=200)
    f = fit(s)
    fc = fit(c * s)
    for x in [0.1, 0.5, 0.9, 1.5]:
        assert c * fc.pdf(c * x) == pytest.approx(f.pdf(x), rel=1e-12)
        assert fc.cdf(c * x) == pytest.approx(f.cdf(x), rel=1e-12)


def _log_likelihood_of_steps(samples, breaks, levels):
    idx = np.searchsorted(breaks, samples, side="left")
    out = 0.0
    for x, i in zip(samples, idx):
        if i == 0 or i > len(levels) or levels[i - 1] <= 0.0:
            return -np.inf
        out += np.log(levels[i - 1])
    return out


def test_maximizes_likelihood_over_decreasing_densities():
    rng = stream(41)
    for _ in range(10):
        s = rng.uniform(0.02, 1.0, size=int(rng.integers(5, 120)))
        f = fit(s)
        own = float(np.sum(np.log([f.pdf(v) for v in s])))
        hi = float(np.max(s))
        for _ in range(10):
            k = int(rng.integers(1, 6))
            cuts = np.concatenate(
                ([0.0], np.sort(rng.uniform(0.01, 1.0, size=k)) * hi, [hi]))
            raw = np.sort(rng.uniform(0.05, 1.0, size=k + 1))[::-1]
            levels = raw / np.sum(raw * np.diff(cuts))
            other = _log_likelihood_of_steps(s, cuts, levels)
            assert own >= other - 1e-10


@pytest.mark.parametrize("phi", [np.log, lambda v: v, lambda v: v * v])
def test_fit_self_consistency_identity(phi):
    # integrating any function of the fitted level against the fitted
    # CDF or against the empirical CDF gives the same value
    rng = stream(83)
    for _ in range(10):
        raw = rng.uniform(0.02, 2.0, size=int(rng.integers(3, 300)))
        if rng.random() < 0.4:
            raw = np.round(raw, 1)          # force ties
            raw = raw[raw > 0]
        f = fit(raw)
        widths = np.diff(f.steps.breakpoints)
        under_fit = float(np.sum(phi(f.steps.levels) * f.steps.levels * widths))
        under_data = float(np.mean([phi(f.pdf(v)) for v in raw]))
        assert under_fit == pytest.approx(under_data, abs=1e-10)


def test_switching_relation_on_fit():
    rng = stream(19)
    s = rng.uniform(0.05, 1.5, size=150)
    f = fit(s)
    ecdf = f.ecdf()
    levels = f.steps.levels
    lam_grid = np.concatenate([
        np.linspace(levels.min() / 2, levels.max() * 1.1, 23),
        levels[:-1] * 0.5 + levels[1:] * 0.5,
    ])
    for lam in lam_grid:
        if np.min(np.abs(levels - lam)) < 1e-9:
            continue
        zhat = switching_argmax(ecdf, lam)
        for xq in np.linspace(0.01, 1.5, 37):
            assert (f.pdf(xq) >= lam) == (zhat >= xq)


def test_concentration_at_chord_midpoint():
    # for the first preset the fitted CDF at the block boundary sits
    # near the true mass 0.75 at the parametric rate
    d = preset_density("eg1")
    f = fit(d.sample(10_000, stream(11)))
    assert abs(f.cdf(0.5) - 0.75) < 0.02


def test_ecdf_gap_shrinks_for_decreasing_truth():
    d = PiecewisePolyDensity([(0.0, 1.0, [1.5, -1.0])])
    medians = []
    for k, n in enumerate([100, 1000, 10_000]):
        gaps = [fit(d.sample(n, stream(600 + k, i))).ecdf_gap()
                for i in range(200)]
        medians.append(float(np.median(gaps)))
    assert medians[0] > medians[1] > medians[2]


def test_custom_linear_functional_matches_preset():
    rng = stream(5)
    s = rng.uniform(0.05, 1.0, size=80)
    f = fit(s)
    assert f.linear_functional(lambda t: t * t) == pytest.approx(
        f.linear_functional("square"), abs=1e-9)
