import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from oracles import beta_oracle, gamma_oracle
from rosenblatt_lab.special import beta, gamma, log_gamma


@pytest.mark.parametrize("x", [0.1, 0.5, 0.98, 1.0, 1.5, 2.0, 3.7, 10.25])
def test_gamma_matches_defining_integral(x):
    assert gamma(x) == pytest.approx(gamma_oracle(x), rel=1e-10)


@pytest.mark.parametrize("p,q", [(0.375, 0.25), (0.35, 0.3), (0.495, 0.01), (1.0, 1.0), (2.5, 0.7)])
def test_beta_matches_defining_integral(p, q):
    assert beta(p, q) == pytest.approx(beta_oracle(p, q), rel=1e-10)


def test_gamma_known_values():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-14)


def test_gamma_reflection_branch():
    assert gamma(-0.5) == pytest.approx(-2.0 * math.sqrt(math.pi), rel=1e-13)


@given(st.floats(min_value=0.01, max_value=30.0))
def test_log_gamma_against_mpmath(x):
    assert log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), rel=1e-12, abs=1e-13)


@given(st.floats(min_value=0.01, max_value=5.0), st.floats(min_value=0.01, max_value=5.0))
def test_beta_symmetric_and_against_mpmath(p, q):
    assert beta(p, q) == pytest.approx(beta(q, p), rel=1e-14)
    assert beta(p, q) == pytest.approx(float(mpmath.beta(p, q)), rel=1e-12)
