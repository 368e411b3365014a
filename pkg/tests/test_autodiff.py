"""Mixed partials against values frozen from sympy (symbolic differentiation, 20 digits)."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metricline import catalog
from metricline.autodiff import (CONVERGED, EXACT, NOT_CONVERGED, cross_partial, cross_partial_batch, gradient,
                                 hd_eval, one_sided_partial, one_sided_partial_batch, second_difference_batch,
                                 second_partials)
from metricline.expr import evaluate, parse

CHORDAL = "2*abs(y - x)/(sqrt(1 + x^2)*sqrt(1 + y^2))"

# sympy: diff(expr, x, y) evaluated at the point
SYMPY_D12 = [
    (CHORDAL, (0.0, 1.0), 0.70710678118654752440),
    (CHORDAL, (-2.0, 3.0), 0.028284271247461900976),
    (CHORDAL, (0.5, 4.0), 0.071459444928498503718),
    (CHORDAL, (3.0, -1.0), 0.089442719099991587856),
    (catalog.p_relative_source(2), (2.0, -1.0), -0.053665631459994952714),
    (catalog.p_relative_source(2), (1.0, 2.0), 0.19677398201998149328),
    (catalog.p_relative_source(2), (-3.0, -1.0), 0.12016655108639841462),
    (catalog.p_relative_source(3), (2.0, -1.0), -0.017805550250708745461),
    (catalog.p_relative_source(1), (1.0, 2.0), 0.074074074074074074074),
    (catalog.p_relative_source(1), (-3.0, -1.0), 0.0625),
    (catalog.gchordal_source(1, 1, 3), (1.0, 2.0), 0.063595235697407325989),
    (catalog.gchordal_source(1, 1, 3), (-1.0, 2.0), 0.10599205949567887665),
    (catalog.gchordal_source(1, 1, 3), (-3.0, -0.5), 0.087955023295647827279),
    ("sqrt(abs(y - x))", (2.0, -3.0), 0.022360679774997896964),
    ("abs(y - x)/(1 + abs(y - x))", (2.0, -3.0), 0.0092592592592592592593),
    ("abs(y - x)/max(abs(x), abs(y))", (-2.0, 5.0), 0.04),
]


@pytest.mark.parametrize("src, point, expected", SYMPY_D12)
def test_cross_partial_matches_sympy(src, point, expected):
    est = cross_partial(parse(src), point)
    assert est.status == EXACT
    assert est.value == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_p_relative_mixed_sign_is_exactly_zero_for_p1():
    # d = 1 on the whole open second/fourth quadrant when p = 1
    est = cross_partial(parse(catalog.p_relative_source(1)), (2.0, -1.0))
    assert abs(est.value) < 1e-15


def test_second_partials():
    d11, d22, d12, kink = second_partials(parse("x^2*y^3"), np.array([1.0]), np.array([2.0]))
    assert (d11[0], d22[0], d12[0]) == (16.0, 12.0, 24.0)
    assert not kink[0]


def test_gradient():
    g = gradient(parse("x^2*y"), (3.0, 2.0))
    assert (g.d1.value, g.d2.value) == (12.0, 9.0)
    assert g.norm == pytest.approx(15.0)


def test_kink_flag_and_fallback():
    e = parse("abs(x)*abs(y)")
    est, kink = cross_partial_batch(e, np.array([0.0, 1.0]), np.array([2.0, 2.0]))
    assert list(kink) == [True, False]
    assert est.status[0] == CONVERGED and est.status[1] == EXACT
    assert est.value[1] == 1.0


def test_kink_not_flagged_when_the_argument_is_stationary():
    # |u^3| at u = 0 has no first-order part, so it is smooth enough
    h = hd_eval(parse("abs(x^3)*y"), np.array([0.0]), np.array([1.0]))
    assert not h.kink[0]


def test_one_sided_partials():
    # the minus direction differentiates along (0, -1)
    assert one_sided_partial(parse("abs(y - x)"), (0.0, 0.0), 2, "-").value == pytest.approx(1.0)
    chordal = parse(CHORDAL)
    assert one_sided_partial(chordal, (0.0, 0.0), 2, "+").value == pytest.approx(2.0, rel=1e-7)
    assert one_sided_partial(chordal, (3.0, 3.0), 2, "+").value == pytest.approx(0.2, rel=1e-7)


def test_one_sided_blow_up_is_reported_as_infinite():
    est = one_sided_partial_batch(parse("sqrt(abs(y - x))"), np.array([0.0]), np.array([0.0]), 2, "+")
    assert est.status[0] == NOT_CONVERGED
    assert est.extended()[0] == np.inf


def test_second_difference():
    est = second_difference_batch(parse("abs(y - x)"), np.array([0.0, 0.0]), np.array([0.0, 1.0]))
    assert est.status[1] == CONVERGED and est.value[1] == 0.0
    assert est.extended()[0] == np.inf
    smooth = second_difference_batch(parse("x^3*y"), np.array([2.0]), np.array([1.0]))
    assert smooth.value[0] == pytest.approx(12.0, rel=1e-6)


coords = st.floats(-50, 50, allow_nan=False).filter(lambda v: abs(v) > 1e-3)


@settings(max_examples=100, deadline=None)
@given(coords, coords)
def test_value_slot_is_the_real_evaluation(x, y):
    e = parse(CHORDAL)
    h = hd_eval(e, np.array([x]), np.array([y]))
    assert h.v[0] == evaluate(e, {"x": np.array([x]), "y": np.array([y])})[0]


@settings(max_examples=100, deadline=None)
@given(coords, coords)
def test_swapping_seeds_is_bit_exact(x, y):
    e = parse(catalog.gchordal_source(1, 1, 3))
    a = hd_eval(e, np.array([x]), np.array([y]))
    b = hd_eval(e, np.array([x]), np.array([y]), seed_x=(0.0, 1.0), seed_y=(1.0, 0.0))
    assert a.dxy[0] == b.dxy[0]
