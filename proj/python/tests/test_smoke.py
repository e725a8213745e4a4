import math
import os
from pathlib import Path

import pytest

import hofilt

ROOT = Path(os.environ.get("HOFILT_SOURCE_DIR", Path(__file__).resolve().parents[2]))
BENCH = ROOT / "models" / "benchmark_tanh.json"


def test_parse_and_diff():
    e = hofilt.parse("sin(x1)*x2", 2)
    assert e.eval([0.5, 2.0]) == pytest.approx(2.0 * math.sin(0.5))
    assert e.diff(1).eval([0.5, 2.0]) == pytest.approx(2.0 * math.cos(0.5))
    with pytest.raises(hofilt.SyntaxError):
        hofilt.parse("x1 +", 1)
    with pytest.raises(hofilt.UnknownVariable):
        hofilt.parse("x3", 2)


def test_multi_indices():
    assert len(hofilt.enumerate_m(2, 1)) == 7
    assert str(hofilt.enumerate_m(1, 1)[2]) == "(1)"
    assert len(hofilt.remainder_set(1, 2)) == 9


def test_truncation():
    assert hofilt.truncate(2.5, 1.0, 1.0) == pytest.approx(0.5)
    assert abs(hofilt.truncate(2.5, 0.1, 50.0)) <= 0.1
    with pytest.raises(hofilt.DomainError):
        hofilt.truncate(2.5, 0.0, 1.0)


def test_model_and_likelihood():
    m = hofilt.load_model(BENCH)
    assert m.delta0() == pytest.approx(1 / 0.6)
    b = hofilt.simulate(m, n=8, refine=16, seed=3)
    assert len(b.times) == 129
    r = hofilt.xi_bar(m, b, 3)
    assert len(r.xi_bar_j) == 8
    assert r.weight == pytest.approx(math.exp(r.xi_bar))
    assert all(abs(g) <= 0.125 for g in r.tamed_mu)
    assert "h1 () : " in hofilt.coefficient_table(m, 2)


def test_filter_estimates():
    m = hofilt.load_model(BENCH)
    obs = hofilt.simulate(m, n=8, refine=16, seed=4)
    one = hofilt.estimate(m, "1", obs, order=2, paths=200, seed=5)
    assert one.pi_phi == 1.0
    ref = hofilt.estimate(m, "x1", obs, paths=2000, seed=5)
    m2 = hofilt.estimate(m, "x1", obs, order=2, paths=2000, seed=5)
    assert abs(ref.pi_phi - m2.pi_phi) < 0.05


def test_kalman_and_dump(tmp_path):
    m = hofilt.load_model(ROOT / "models" / "linear.json")
    obs = hofilt.simulate(m, n=4, refine=32, seed=6)
    k = hofilt.kalman(m, obs)
    assert k["covariance"][0] > 0
    obs.save(tmp_path / "p.bin")
    back = hofilt.load_paths(tmp_path / "p.bin")
    assert back.y == obs.y
    with pytest.raises(hofilt.NotLinear):
        hofilt.kalman(hofilt.load_model(BENCH), obs)


def test_converge_small():
    csv = hofilt.converge(ROOT / "configs" / "converge.json", paths=100, y_draws=1)
    lines = csv.strip().splitlines()
    assert lines[0] == "m,n,delta,rms_error,mc_se,N,M_Y,skipped,reason"
    assert len(lines) == 13
