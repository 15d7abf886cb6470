import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rosenblatt_lab.errors import DomainError
from rosenblatt_lab.quadrature import (
    GridSpec,
    endpoint_rule,
    gauss_legendre,
    geometric_panels,
    graded_rule,
    merge_breakpoints,
    power_weighted_integral,
    power_weighted_rule,
)


@given(st.floats(-5, 5), st.floats(0.1, 10), st.integers(1, 200), st.floats(1.0, 4.0),
       st.sampled_from(["both", "lower", "upper"]))
def test_grid_invariants(lo, span, cells, q, toward):
    g = GridSpec(lo, lo + span, cells, q, toward)
    e = g.edges()
    assert e.size == cells + 1
    assert np.all(np.diff(e) > 0)
    assert g.widths().sum() == pytest.approx(span, rel=1e-12)
    assert e[0] == lo and e[-1] == lo + span


def test_grading_crowds_cells_toward_the_end():
    w = GridSpec(0.0, 1.0, 64, 3.0, "lower").widths()
    assert w[0] < w[-1] / 100


@pytest.mark.parametrize("bad", [dict(lower=1.0, upper=0.0, cells=4), dict(lower=0.0, upper=1.0, cells=0),
                                 dict(lower=0.0, upper=1.0, cells=4, grading_exponent=0.5)])
def test_grid_rejects_bad_input(bad):
    with pytest.raises(DomainError):
        GridSpec(**bad)


def test_refined_doubles_cells():
    assert GridSpec(0, 1, 8).refined().cells == 16


def test_merge_breakpoints_inserts_and_avoids_slivers():
    e = merge_breakpoints(np.linspace(0, 1, 5), [0.5 + 1e-12, 0.3])
    assert 0.3 in e
    assert np.all(np.diff(e) > 1e-6)


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(5, 1.0, 3.0)
    assert np.dot(w, x**9) == pytest.approx((3.0**10 - 1.0) / 10.0, rel=1e-13)


@pytest.mark.parametrize("p", [-0.9, -0.5, -0.1, 0.3])
def test_endpoint_rule_integrates_singular_weight(p):
    x, w = endpoint_rule(0.0, 2.0, p, 12, "left")
    assert np.dot(w, np.cos(x)) == pytest.approx(
        integrate.quad(np.cos, 0, 2, weight="alg", wvar=(p, 0))[0], rel=1e-12)
    x, w = endpoint_rule(0.0, 2.0, p, 12, "right")
    assert np.dot(w, np.cos(x)) == pytest.approx(
        integrate.quad(np.cos, 0, 2, weight="alg", wvar=(0, p))[0], rel=1e-12)


def test_geometric_panels_cover_interval():
    e = geometric_panels(0.0, 10.0, 0.01)
    assert e[0] == 0.0 and e[-1] == 10.0 and np.all(np.diff(e) > 0)
    assert e[1] - e[0] == pytest.approx(0.01)


@pytest.mark.parametrize("origin", [-1.0, 0.0, 0.4, 1.0, 2.5])
def test_power_weighted_integral_against_quadpack(origin):
    p = -0.7
    g = lambda x: np.exp(-x) * (1.0 + x * x)  # noqa: E731
    val = power_weighted_integral(g, 0.0, 1.0, p, origin, breakpoints=[0.5])
    if 0.0 < origin < 1.0:
        ref = integrate.quad(g, 0.0, origin, weight="alg", wvar=(0, p))[0] + \
            integrate.quad(g, origin, 1.0, weight="alg", wvar=(p, 0))[0]
    elif origin == 0.0:
        ref = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(p, 0))[0]
    elif origin == 1.0:
        ref = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(0, p))[0]
    else:
        ref = integrate.quad(lambda x: g(x) * abs(x - origin) ** p, 0.0, 1.0, epsrel=1e-13)[0]
    assert val == pytest.approx(ref, rel=1e-11)


def test_power_weighted_rule_rejects_nonintegrable_weight():
    with pytest.raises(DomainError):
        power_weighted_rule(0.0, 1.0, -1.0, 0.5)
    # outside the range the weight is smooth
    x, w = power_weighted_rule(0.0, 1.0, -1.5, -1.0)
    assert np.dot(w, np.ones_like(x)) == pytest.approx((1.0 - 2.0**-0.5) / 0.5, rel=1e-12)


def test_graded_rule_converges():
    p = -0.4
    exact = 1.0 / (p + 1.0)
    errs = [abs(graded_rule(0.0, 1.0, p, GridSpec(0.0, 1.0, n, 3.0, "lower"))[1].sum() - exact)
            for n in (2, 4, 8)]
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-9
    with pytest.raises(DomainError):
        graded_rule(0.0, 2.0, p, GridSpec(0.0, 1.0, 8))
