import numpy as np
import pytest

from metricline import catalog
from metricline.candidate import MetricCandidate
from metricline.config import CheckConfig
from metricline.necessary import (check_diagonal_positivity, check_first_order_bound, check_second_order,
                                  run_battery)
from metricline.search import brute_force_oracle

CFG = CheckConfig()


def cand(src):
    return MetricCandidate.from_source(src)


def test_first_order_witness_for_square():
    w = check_first_order_bound(cand("(x-y)^2"), ([1.0], [0.0]), CFG)
    assert w
    # |d2 d(1,0)| = 2 against the diagonal slope 0
    assert w[0]["value"] == pytest.approx(2.0) and w[0]["bound"] == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("src", ["abs(y - x)", "2*abs(y - x)/(sqrt(1 + x^2)*sqrt(1 + y^2))"])
def test_first_order_clean(src):
    assert check_first_order_bound(cand(src), None, CFG) == []


def test_diagonal_positivity():
    assert check_diagonal_positivity(cand("abs(y - x)"), None, CFG) == []
    assert check_diagonal_positivity(cand("2*abs(y - x)/(sqrt(1 + x^2)*sqrt(1 + y^2))"), None, CFG) == []
    w = check_diagonal_positivity(cand("(x-y)^2"), [0.0, 1.0, 2.0], CFG)
    assert {v["x"] for v in w if v["kind"] == "non-positive"} == {0.0, 1.0, 2.0}


def test_diagonal_asymmetry():
    w = check_diagonal_positivity(cand("pw(y > x, 2*(y - x), x - y)"), [0.0], CFG)
    assert any(v["kind"] == "asymmetric" for v in w)


def test_second_order_clean_for_abs():
    skips = {}
    assert check_second_order(cand("abs(y - x)"), None, CFG, skips) == []


def test_second_order_stress_candidate_agrees_with_oracle():
    d = cand("min((x-y)^2, abs(x-y))")
    rep = run_battery(d, CFG)
    oracle = [v for v in brute_force_oracle(d, np.linspace(-3, 3, 61)) if v.kind == "triangle"]
    # the candidate is not a metric; whatever the battery says must not contradict the oracle
    assert oracle
    assert rep.verdict_contribution in ("refuted", "consistent")
    if rep.verdict_contribution == "refuted":
        assert oracle


@pytest.mark.parametrize("name, params", [
    ("chordal", {}), ("p_relative", {"p": 1}), ("p_relative", {"p": 2}), ("p_relative", {"p": 3}),
    ("relative", {}), ("generalized_chordal", {}), ("concave_ti", {}), ("concave_ti", {"g": "x/(1+x)"}),
])
def test_no_witnesses_on_catalog(name, params):
    assert run_battery(catalog.get(name, params).d, CFG).verdict_contribution == "consistent"


def test_enlarging_tolerance_never_adds_witnesses():
    d = cand("min((x-y)^2, abs(x-y))")
    pts = ([0.5, 1.0, 2.0, -1.0], [0.0, 0.3, 1.0, 1.0])
    small = check_first_order_bound(d, pts, CFG)
    large = check_first_order_bound(d, pts, CFG.replace(tol_nec=1e-2))
    assert len(large) <= len(small)
    keys = {(w["x"], w["y"], w["direction"]) for w in small}
    assert {(w["x"], w["y"], w["direction"]) for w in large} <= keys


def test_report_dict():
    rep = run_battery(cand("(x-y)^2"), CFG)
    data = rep.to_dict()
    assert data["verdict_contribution"] == "refuted"
    assert rep.strongest() == rep.first_order[0]
