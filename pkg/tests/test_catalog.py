import math

import numpy as np
import pytest

from metricline import catalog
from metricline.catalog import CatalogError
from metricline.expr import evaluate


def test_names_and_expected_theorems():
    assert catalog.NAMES == ("concave_ti", "p_relative", "relative", "chordal", "generalized_chordal")
    assert catalog.get("chordal").expected_theorem == "T-H4D"
    assert catalog.get("concave_ti").expected_theorem == "T-H4A"
    assert catalog.get("relative").expected_theorem is None


def test_sources():
    assert catalog.get("chordal").source == "2*abs(y - x)/(sqrt(1 + x^2)*sqrt(1 + y^2))"
    assert catalog.get("concave_ti", {"g": "sqrt(x)"}).source == "sqrt(abs(y - x))"
    assert catalog.get("p_relative", {"p": "2"}).params["p"] == 2.0


@pytest.mark.parametrize("name, params", [
    ("p_relative", {"p": 0.5}),
    ("p_relative", {"p": "abc"}),
    ("generalized_chordal", {"alpha": 0}),
    ("generalized_chordal", {"beta": -1}),
    ("chordal", {"p": 2}),
    ("concave_ti", {"g": "x - 1"}),
    ("concave_ti", {"g": "-x"}),
    ("nope", {}),
])
def test_invalid_parameters(name, params):
    with pytest.raises(CatalogError):
        catalog.get(name, params)


def test_non_concave_generator_is_noted():
    entry = catalog.get("concave_ti", {"g": "x^2"})
    assert any("concavity" in n for n in entry.notes)


def test_nonsmooth_sets():
    assert catalog.get("p_relative").nonsmooth_set.kinds == ("xy=0",)
    assert set(catalog.get("relative").nonsmooth_set.kinds) == {"xy=0", "|x|=|y|"}
    assert not catalog.get("chordal").nonsmooth_set


def test_chordal_closed_form():
    entry = catalog.get("chordal")
    assert catalog.closed_form_cross_partial(entry, (0.0, 1.0)) == pytest.approx(1 / math.sqrt(2), rel=1e-15)


def test_closed_form_refuses_singular_points():
    with pytest.raises(CatalogError):
        catalog.closed_form_cross_partial(catalog.get("chordal"), (1.0, 1.0))
    with pytest.raises(CatalogError):
        catalog.closed_form_cross_partial(catalog.get("p_relative"), (0.0, 1.0))


# sympy: diff(abs(y-x)/(abs(x)^p+abs(y)^p)^(1/p), x, y)
P_RELATIVE_SYMPY = [
    (1, (1.0, 2.0), 0.074074074074074074074),
    (1, (2.0, -1.0), 0.0),
    (1, (-3.0, -1.0), 0.0625),
    (2, (2.0, -1.0), -0.053665631459994952714),
    (2, (1.0, 2.0), 0.19677398201998149328),
    (2, (-3.0, -1.0), 0.12016655108639841462),
    (2, (0.5, -5.0), 0.030472465270228468384),
    (3, (2.0, -1.0), -0.017805550250708745461),
    (3, (-3.0, -1.0), 0.12433392332810679525),
]


@pytest.mark.parametrize("p, point, expected", P_RELATIVE_SYMPY)
def test_exact_p_relative_formula(p, point, expected):
    entry = catalog.get("p_relative", {"p": p})
    got = catalog.closed_form_cross_partial(entry, point, form="exact")
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-16)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_printed_p_relative_formula_holds_in_the_first_quadrant(p):
    x, y = np.array([2.0, 5.0, 0.3]), np.array([1.0, 0.2, 4.0])
    assert np.allclose(catalog.p_relative_d12_printed(x, y, p), catalog.p_relative_d12(x, y, p), rtol=1e-13)


def test_printed_p_relative_formula_differs_elsewhere():
    # third quadrant, p = 2: sympy gives 0.1201665..., the printed expression 0.0442718...
    assert catalog.p_relative_d12_printed(-3.0, -1.0, 2) == pytest.approx(0.04427188724235731, rel=1e-12)
    assert catalog.p_relative_d12(-3.0, -1.0, 2) == pytest.approx(0.12016655108639841462, rel=1e-12)


# sympy on abs(y-x)/((1+abs(x)^3)^(1/3)*(1+abs(y)^3)^(1/3))
@pytest.mark.parametrize("point, expected", [
    ((1.0, 2.0), 0.063595235697407325989),
    ((-1.0, 2.0), 0.10599205949567887665),
    ((-3.0, -0.5), 0.087955023295647827279),
])
def test_generalized_chordal_closed_form(point, expected):
    entry = catalog.get("generalized_chordal")
    assert catalog.closed_form_cross_partial(entry, point) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alpha, beta, p", [(16, 1, 2), (1, 1, 3), (2, 5, 1.5)])
def test_reduction_identity(alpha, beta, p):
    r = catalog.reduce_generalized_chordal(alpha, beta, p)
    d = catalog.get("generalized_chordal", {"alpha": alpha, "beta": beta, "p": p}).d
    x, y = np.array([1.0, -0.7, 3.0]), np.array([2.0, 4.0, -1.5])
    lhs = d(x, y)
    rhs = r.scaling * r.reduced(r.factor * x, r.factor * y)
    assert np.allclose(lhs, rhs, rtol=1e-13)


def test_degenerate_reduction():
    r = catalog.reduce_generalized_chordal(4, 0, 2)
    assert r.degenerate
    d = catalog.get("generalized_chordal", {"alpha": 4, "beta": 0, "p": 2}).d
    assert d(1.0, 3.0) == pytest.approx(2.0 / 4.0)


def test_describe():
    info = catalog.describe("generalized_chordal")
    assert set(info["params"]) == {"alpha", "beta", "p"}
    assert info["formula"] == catalog.get("generalized_chordal").source


def test_relative_is_the_large_p_limit():
    x, y = 1.5, -4.0
    rel = evaluate(catalog.get("relative").d.expr, {"x": x, "y": y})
    near = evaluate(catalog.get("p_relative", {"p": 200}).d.expr, {"x": x, "y": y})
    assert near == pytest.approx(rel, rel=1e-2)
