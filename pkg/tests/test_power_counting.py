from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rosenblatt_lab.cumulants import cyclic_integral
from rosenblatt_lab.errors import DomainError
from rosenblatt_lab.kernels import KernelSpec
from rosenblatt_lab.power_counting import (
    AffineFunctional,
    ExponentAssignment,
    FunctionalSet,
    check_integrability,
    critical_exponent_scan,
    is_padded,
    padded_subsets,
    rational_rank,
    span_closure,
)

C4 = FunctionalSet.cyclic(4)
C3 = FunctionalSet.cyclic(3)


def _uniform(n, a, b):
    return ExponentAssignment((a,) * n, (b,) * n)


# ---------------------------------------------------------------------------
# types


def test_functional_validation():
    with pytest.raises(DomainError):
        AffineFunctional((0, 0))
    assert AffineFunctional((0, 0), 1).offset == 1
    with pytest.raises(DomainError):
        FunctionalSet(((1, 0), (1, 0, 0)))
    with pytest.raises(DomainError):
        FunctionalSet(())


def test_rationals_are_exact():
    f = AffineFunctional((0.5, Fraction(1, 3)))
    assert f.coefficients == (Fraction(1, 2), Fraction(1, 3))


def test_exponent_gates():
    e = ExponentAssignment((-0.5, -0.9), (-1.0, -2.0))
    assert e.alpha_gate and not e.beta_gate
    with pytest.raises(DomainError):
        ExponentAssignment((0.0,), (0.0, 1.0))


# ---------------------------------------------------------------------------
# closures and padded subsets


def test_closure_examples():
    assert span_closure((), C4) == ()
    assert span_closure(range(4), C4) == (0, 1, 2, 3)
    for drop in range(4):
        W = tuple(i for i in range(4) if i != drop)
        assert span_closure(W, C4) == (0, 1, 2, 3)


def test_closure_rejects_foreign_index():
    with pytest.raises(DomainError):
        span_closure((5,), C4)


def test_padded_examples():
    assert not is_padded((0,), C4)
    assert is_padded((0, 1, 2, 3), C4)
    assert is_padded((), C4)
    assert padded_subsets(C4) == [(), (0, 1, 2, 3)]


def test_offsets_ignored_in_spans():
    T = FunctionalSet.from_rows([[1, 0], [2, 0], [0, 1]], offsets=[0, 5, -1])
    assert span_closure((0,), T) == (0, 1)
    assert is_padded((0, 1), T)


def test_cyclic_rank():
    assert C4.rank() == 3
    assert C3.rank() == 2


# ---------------------------------------------------------------------------
# verdicts


@pytest.mark.parametrize("H, ok", [(0.26, True), (0.24, False), (0.7, True)])
def test_cyclic4_near_zero(H, ok):
    v = check_integrability(C4, _uniform(4, H - 1, -2.0), which="zero")
    assert v.integrable is ok
    full = next(r for r in v.reports if r.subset == (0, 1, 2, 3))
    assert full.d0 == pytest.approx(3 + 4 * (H - 1))


@pytest.mark.parametrize("gamma, ok", [(0.8, True), (0.7, False)])
def test_cyclic4_at_infinity(gamma, ok):
    v = check_integrability(C4, _uniform(4, -0.5, -gamma), which="infinity")
    assert v.integrable is ok
    empty = next(r for r in v.reports if r.subset == ())
    assert empty.d_inf == pytest.approx(3 - 4 * gamma)


def test_one_dimensional_example():
    T = FunctionalSet.from_rows([[1]])
    v = check_integrability(T, ExponentAssignment((0.0,), (-2.0,)))
    assert v.integrable and v.near_zero_ok and v.at_infinity_ok
    assert bool(v)


def test_count_mismatch():
    with pytest.raises(DomainError):
        check_integrability(C4, _uniform(3, 0.0, -2.0))


def test_shortcut_off_checks_every_closed_subset():
    # alpha below -1 disables the padded shortcut near zero
    e = ExponentAssignment((-1.5, 0.0, 0.0, 0.0), (-2.0,) * 4)
    v = check_integrability(C4, e, which="zero")
    assert v.used_padded_shortcut[0] is False
    assert not v.integrable  # W = {0} gives d0 = 1 - 1.5 < 0


def test_shortcut_agrees_with_full_enumeration_under_gates():
    for H in (0.2, 0.3, 0.6):
        e = _uniform(4, H - 1, -H)
        a = check_integrability(C4, e, shortcut=True)
        b = check_integrability(C4, e, shortcut=False)
        assert a.integrable == b.integrable


# ---------------------------------------------------------------------------
# scans


def test_scan_cyclic4_threshold():
    r = critical_exponent_scan(C4, lambda H: _uniform(4, H - 1, -2.0), 0.0, 1.0, which="zero")
    assert r.threshold == pytest.approx(0.25, abs=1e-9)
    assert not r.verdict_below and r.verdict_above


def test_scan_cyclic3_threshold():
    r = critical_exponent_scan(C3, lambda H: _uniform(3, H - 1, -2.0), 0.0, 1.0, which="zero")
    assert r.threshold == pytest.approx(1 / 3, abs=1e-9)


def test_scan_gamma_threshold():
    r = critical_exponent_scan(C4, lambda g: _uniform(4, -0.5, -g), 0.5, 1.0, which="infinity")
    assert r.threshold == pytest.approx(0.75, abs=1e-9)


def test_scan_monotone_and_bad_range():
    r = critical_exponent_scan(C4, lambda H: _uniform(4, H - 1, -2.0), 0.5, 1.0, which="zero")
    assert r.monotone and r.threshold is None and r.verdict_below
    with pytest.raises(DomainError):
        critical_exponent_scan(C4, lambda H: _uniform(4, H - 1, -2.0), 1.0, 0.5)


# ---------------------------------------------------------------------------
# properties

small_rows = st.integers(1, 4).flatmap(
    lambda m: st.lists(st.lists(st.integers(-2, 2), min_size=m, max_size=m).filter(any), min_size=1, max_size=6)
)


@given(small_rows, st.data())
def test_closure_idempotent_and_monotone(rows, data):
    T = FunctionalSet.from_rows(rows)
    n = len(T)
    W2 = data.draw(st.sets(st.integers(0, n - 1)))
    W1 = data.draw(st.sets(st.sampled_from(sorted(W2)))) if W2 else set()
    c1, c2 = span_closure(W1, T), span_closure(W2, T)
    assert span_closure(c2, T) == c2
    assert set(W2) <= set(c2)
    assert set(c1) <= set(c2)


@given(small_rows)
def test_rank_bounds_and_float_oracle(rows):
    T = FunctionalSet.from_rows(rows)
    r = T.rank()
    assert 0 <= r <= min(len(rows), T.dimension)
    # small integer matrices are well conditioned enough for the SVD rank
    assert r == np.linalg.matrix_rank(np.array(rows, dtype=float))
    assert rational_rank([]) == 0


# ---------------------------------------------------------------------------
# cross-module consistency


@pytest.mark.parametrize("m, H", [(2, 0.6), (3, 0.4)])
def test_integrable_verdict_means_quadrature_converges(m, H):
    T = FunctionalSet.cyclic(m)
    assert check_integrability(T, _uniform(m, H - 1, -2.0), which="zero").integrable
    f = KernelSpec.indicator(0.0, 1.0)
    vals = [cyclic_integral(f, H, m, order) for order in (4, 8, 16, 32)]
    steps = [abs(b - a) for a, b in zip(vals, vals[1:])]
    floor = 1e-10 * abs(vals[-1])
    assert all(b <= max(a, floor) for a, b in zip(steps, steps[1:]))
    assert steps[-1] < floor
