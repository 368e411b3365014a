import math

import numpy as np
import pytest

from metricline import catalog
from metricline.candidate import LambdaSet, MetricCandidate
from metricline.certify import (CONVERGED, DIVERGING, FAILED, OSCILLATING, PASSED, check_G_monotonicity, check_H1,
                                check_H2, check_H3, check_H4A, check_H4B, check_H4C, check_H4D, certify,
                                choose_reparametrization, estimate_limit, g_horizontal, g_vertical)
from metricline.config import CheckConfig
from metricline.expr import evaluate

CFG = CheckConfig()
CHORDAL = catalog.get("chordal").d


def cand(src, *kinds):
    return MetricCandidate.from_source(src, lambda_set=LambdaSet(tuple(kinds)))


def test_h1():
    assert check_H1(CHORDAL, CFG).passed
    w = check_H1(cand("x - y"), CFG).witness
    x, y = w["points"]
    assert x - y <= 0 and w["kind"] == "positivity"
    assert check_H1(cand("abs(x - y) + 1"), CFG).status == FAILED


def test_h2():
    assert check_H2(CHORDAL, CFG).evidence["method"] == "structural"
    assert check_H2(cand("abs(x - y)*(1 + x^2 + y^2)"), CFG).passed
    w = check_H2(cand("abs(x - y)*(1 + x^2)"), CFG).witness
    assert w["kind"] == "symmetry" and w["magnitude"] > 0


def test_h3():
    res = check_H3(CHORDAL, CFG)
    assert res.passed
    assert res.evidence["min_cross_partial"] >= 0
    assert res.evidence["smallest_band"] <= CFG.diag_band
    bad = check_H3(cand("(x-y)^2"), CFG)
    assert bad.status == FAILED and bad.witness["value"] == pytest.approx(-2.0)


def test_h3_p_relative_negative_cross_partial():
    # the true mixed partial is negative next to the axes for p = 2
    res = check_H3(catalog.get("p_relative", {"p": 2}).d, CFG)
    assert res.status == FAILED
    assert res.witness["value"] < 0


def test_h4a():
    assert check_H4A(cand("abs(y - x)"), CFG).passed
    assert check_H4A(cand("sqrt(abs(y - x))"), CFG).passed
    w = check_H4A(CHORDAL, CFG).witness
    assert w is not None and w["magnitude"] > 0


def test_h4b():
    assert check_H4B(cand("abs(y - x)"), CFG).passed
    assert check_H4B(CHORDAL, CFG).passed


def test_h4c():
    assert check_H4C(cand("abs(x - y)/(1 + abs(x) + abs(y))"), CFG).passed
    assert check_H4C(cand("abs(y - x)"), CFG).status == FAILED
    # the chordal partial in y at (R, 1) tends to -1/sqrt(2), not 0
    res = check_H4C(CHORDAL, CFG)
    assert res.status == FAILED
    assert res.witness["norm"] == pytest.approx(1 / math.sqrt(2), rel=1e-3)


def test_h4d():
    assert check_H4D(CHORDAL, CFG).passed
    assert check_H4D(catalog.get("p_relative", {"p": 2}).d, CFG).passed
    assert check_H4D(cand("abs(y - x)"), CFG).status == FAILED


def test_estimate_limit():
    e = catalog.get("p_relative", {"p": 1}).d.expr
    L = estimate_limit(lambda l: evaluate(e, {"x": 1.0, "y": l}), "+", CFG)
    assert L.status == CONVERGED and L.value == pytest.approx(1.0, rel=1e-9)
    for c in (0.0, 1.0, 5.0):
        L = estimate_limit(lambda l: evaluate(CHORDAL.expr, {"x": c, "y": l}), "-", CFG)
        assert L.value == pytest.approx(2 / math.sqrt(1 + c * c), rel=1e-9)
    assert estimate_limit(np.abs, "+", CFG).status == DIVERGING
    flip = estimate_limit(lambda l: np.where(np.round(np.log10(np.abs(l))) % 2 == 0, 1.0, -1.0), "+", CFG)
    assert flip.status == OSCILLATING


@pytest.mark.parametrize("src, n", [
    ("abs(y-x)/(1+abs(x)^0.8+abs(y)^0.8)", 1),
    ("abs(y-x)/(1+abs(x)^2+abs(y)^2)", 1),
    ("abs(y-x)/(1+abs(x)^2.5+abs(y)^2.5)", 0),
    ("abs(y-x)/(1+abs(x)^3+abs(y)^3)", 0),
])
def test_reparametrization_follows_the_power(src, n):
    # smallest n with (2n+1)p > 2
    assert choose_reparametrization(cand(src, "xy=0"), CFG).n == n


def test_reparametrization_catalog():
    assert choose_reparametrization(catalog.get("p_relative", {"p": 1}).d, CFG).n == 1
    assert choose_reparametrization(catalog.get("relative").d, CFG) is None
    assert choose_reparametrization(CHORDAL, CFG).n == 0


def test_g_functions():
    sq = cand("(x-y)^2")
    # G_H(lam) = integral of 2(s - lam) over [1, 2] = 3 - 2 lam
    assert g_horizontal(sq, 1.0, 2.0, 5.0) == pytest.approx(-7.0)
    assert g_vertical(sq, 0.0, 1.0, 3.0) == pytest.approx(-5.0)
    with pytest.raises(ValueError):
        g_horizontal(sq, 1.0, 2.0, 1.5)
    out = check_G_monotonicity(sq, (0.0, 1.0, 2.0), [-3.0, -1.0, 0.0, 1.0, 2.0, 3.0])
    assert not out["ok"] and out["inversions"]
    assert check_G_monotonicity(CHORDAL, (0.0, 1.0, 2.0), [-3.0, -1.0, 0.0, 1.0, 2.0, 3.0, 5.0])["ok"]
    with pytest.raises(ValueError):
        check_G_monotonicity(sq, (0.0, 1.0, 2.0), [1.5])


def test_g_function_across_a_kink():
    d = catalog.get("p_relative", {"p": 1}).d
    # d_1 d(s, 3) over [-1, 2]; the integral equals d(2, 3) - d(-1, 3)
    expected = float(d(2.0, 3.0) - d(-1.0, 3.0))
    assert g_horizontal(d, -1.0, 2.0, 3.0) == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("name, params, theorem, n", [
    ("chordal", {}, "T-H4D", None),
    ("p_relative", {"p": 1}, "T-combined", 1),
    ("generalized_chordal", {"alpha": 1, "beta": 1, "p": 3}, "T-combined", 0),
    ("generalized_chordal", {"alpha": 1, "beta": 1, "p": 1}, "T-combined", 1),
    ("concave_ti", {"g": "sqrt(x)"}, "T-H4A", None),
    ("concave_ti", {"g": "x/(1+x)"}, "T-H4A", None),
])
def test_certified(name, params, theorem, n):
    v = certify(catalog.get(name, params).d, CFG)
    assert (v.kind, v.theorem) == ("Certified", theorem)
    assert v.caveat == "numerical certificate on sampled sets"
    if n is not None:
        assert v.evidence["reparametrization"]["n"] == n


def test_relative_is_inconclusive():
    v = certify(catalog.get("relative").d, CFG)
    assert v.kind == "Inconclusive" and v.diagnostics


def test_refuted():
    v = certify(cand("(x-y)^2"), CFG)
    assert v.kind == "Refuted" and v.witness["kind"] == "triangle"
    v = certify(cand("x - y"), CFG)
    assert v.kind == "Refuted" and v.witness["kind"] == "positivity"


def test_domain_error_is_reported():
    v = certify(cand("log(x - y)"), CFG)
    assert v.kind == "Inconclusive" and "domain_error" in v.evidence
