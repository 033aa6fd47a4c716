"""Replication machinery: determinism across worker counts, comparison
statistics, reports, and the tail-bound audit."""

import json

import numpy as np
import pytest
from scipy.stats import ks_2samp

from grenlim.density import preset_density
from grenlim.exceptions import InvalidInputError, NotApplicableError
from grenlim.experiments import (
    EntropyTarget,
    LinearTarget,
    PointwiseTarget,
    get_target,
    ks_two_sample,
    qq_pairs,
    run_finite_sample,
    run_limit,
    run_replication,
    tail_bound_audit,
)
from grenlim.rng import stream

EG1 = preset_density("eg1")
EG2 = preset_density("eg2")
UNIFORM = preset_density("uniform")


def test_get_target():
    assert isinstance(get_target("pointwise", x0=0.75), PointwiseTarget)
    assert isinstance(get_target("linear", g="square"), LinearTarget)
    assert isinstance(get_target("entropy"), EntropyTarget)
    assert get_target("linear").label == "linear_identity"
    assert get_target("pointwise", x0=0.75).label == "pointwise_x0.75"
    with pytest.raises(InvalidInputError):
        get_target("pointwise")
    with pytest.raises(InvalidInputError):
        get_target("median")


@pytest.mark.parametrize("target", [
    PointwiseTarget(0.75), LinearTarget("identity"), EntropyTarget()])
def test_finite_sample_worker_invariance(target):
    a = run_finite_sample(EG1, target, n=400, B=30, seed=21, workers=1)
    b = run_finite_sample(EG1, target, n=400, B=30, seed=21, workers=4)
    assert np.array_equal(a, b)


def test_limit_worker_invariance():
    t = LinearTarget("identity")
    a = run_limit(EG1, t, R=40, seed=22, workers=1, bridge_grid=1025)
    b = run_limit(EG1, t, R=40, seed=22, workers=3, bridge_grid=1025)
    assert np.array_equal(a, b)


def test_ks_two_sample_exact_and_against_reference():
    assert ks_two_sample([1.0, 2.0, 3.0], [1.5]) == pytest.approx(2.0 / 3.0)
    rng = stream(23)
    a = rng.normal(size=257)
    b = rng.normal(0.2, size=311)
    assert ks_two_sample(a, b) == pytest.approx(
        ks_2samp(a, b).statistic, abs=1e-12)
    with pytest.raises(InvalidInputError):
        ks_two_sample([], [1.0])


def test_qq_pairs():
    rng = stream(24)
    a = rng.normal(size=500)
    probs, qa, qb = qq_pairs(a, a)
    assert np.array_equal(qa, qb)
    assert probs[0] == pytest.approx(0.01) and probs[-1] == pytest.approx(0.99)
    with pytest.raises(InvalidInputError):
        qq_pairs(a, a, probs=[0.0, 0.5])


def test_replication_report_contents(tmp_path):
    t = PointwiseTarget(0.75)
    rep = run_replication(EG1, t, n=300, B=40, R=200, seed=25,
                          bridge_grid=1025)
    s = rep.summary()
    cfg = s["config"]
    assert cfg["density_hash"] == EG1.spec_hash()
    assert cfg["n"] == 300 and cfg["B"] == 40 and cfg["R"] == 200
    assert cfg["seed"] == 25
    assert "workers" not in cfg
    assert s["sigma2"] == pytest.approx(0.75, abs=1e-9)
    assert s["theta_proj"] == pytest.approx(0.5, abs=1e-8)
    assert s["theta_true"] == pytest.approx(0.5, abs=1e-12)
    assert 0.0 <= s["ks"] <= 1.0

    jpath = tmp_path / "rep.json"
    rep.to_json(jpath)
    assert json.loads(jpath.read_text())["config"]["B"] == 40
    cpath = tmp_path / "rep.csv"
    rep.qq_csv(cpath)
    lines = cpath.read_text().splitlines()
    assert lines[0] == "prob,empirical_quantile,limit_quantile"
    assert len(lines) == 1 + 99


def test_centering_drift_sign():
    t = LinearTarget("identity")
    rep = run_replication(EG1, t, n=100, B=5, R=20, seed=26, bridge_grid=1025)
    # the projection shifts the mean left of the truth
    want = np.sqrt(100) * (0.375 - 0.38541666666666663)
    assert rep.centering_drift == pytest.approx(want, abs=1e-8)


def test_entropy_excess_positive_in_mean():
    vals = run_finite_sample(EG1, EntropyTarget(), n=500, B=200, seed=27)
    assert np.mean(vals) > 0.0


def test_pointwise_replication_not_applicable():
    with pytest.raises(NotApplicableError):
        run_replication(EG2, PointwiseTarget(0.1), n=50, B=5, R=10, seed=0)


def test_audit_rows_and_impossible_deviation():
    rows = tail_bound_audit(UNIFORM, [0.5], [1.0, 25.0], [100], B=300,
                            seed=28)
    assert len(rows) == 4
    for r in rows:
        assert set(r) == {"x", "t", "n", "side", "bound", "freq", "se",
                          "violated"}
        assert not r["violated"]
    # t = 25 > sqrt(100) * 1: below the floor of the fit, impossible
    low = [r for r in rows if r["side"] == "lower" and r["t"] == 25.0][0]
    assert low["bound"] == 0.0 and low["freq"] == 0.0


def test_audit_input_validation():
    with pytest.raises(NotApplicableError):
        tail_bound_audit(EG2, [0.1], [1.0], [100], B=10, seed=0)
    with pytest.raises(InvalidInputError):
        tail_bound_audit(UNIFORM, [0.5], [-1.0], [100], B=10, seed=0)
    with pytest.raises(InvalidInputError):
        run_finite_sample(EG1, EntropyTarget(), n=0, B=5, seed=0)
    with pytest.raises(InvalidInputError):
        run_limit(EG1, EntropyTarget(), R=0, seed=0)
