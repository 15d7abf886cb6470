import math

import numpy as np
import pytest

from rosenblatt_lab.errors import DomainError
from rosenblatt_lab.kernels import ExpIndicatorAtom, KernelSpec, hh_inner
from rosenblatt_lab.limits import (
    DistributionTarget,
    cumulant_sweep,
    covariance_check,
    fdd_check_rou,
    identity_approximation_check,
    increment_bound_check,
    ks_critical_value,
    ks_test,
    ou_covariance,
)
from rosenblatt_lab.simulation import PathEnsemble, simulate_gaussian_ou, simulate_rou

unit = KernelSpec.indicator(0.0, 1.0)


# ---------------------------------------------------------------------------
# sweeps


def test_sweep_zero_kernel():
    s = cumulant_sweep(KernelSpec.zero(), [0.6, 0.9], cells=64)
    for row in s.rows():
        assert row.value == 0.0 and row.chi2_target == 0.0
        assert row.gaussian_target == 0.0


def test_sweep_rows_and_k2_identity():
    H_list = [0.9, 0.6]
    s = cumulant_sweep(unit, H_list, cells=512)
    rows = s.rows()
    assert [(r.H, r.m) for r in rows] == sorted((r.H, r.m) for r in rows)
    for h, cv in zip(s.H_values, s.cumulants):
        assert abs(cv[2] - hh_inner(unit, unit, h)) <= cv.error(2) + 1e-8
    assert s.series(2).shape == (2,)
    k4 = s.series(4)
    np.testing.assert_allclose(s.fourth_order_integral, k4 / (12 * np.array(H_list) ** 2))


def test_sweep_without_gaussian_target():
    f = KernelSpec.indicator(-1.0, 1.0)
    s = cumulant_sweep(f, [0.7], cells=128)
    assert s.gaussian_targets is None
    assert all(r.gaussian_deviation is None for r in s.rows())


def test_sweep_map_fn_keeps_order():
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(2) as ex:
        a = cumulant_sweep(unit, [0.7, 0.6, 0.8], cells=128, map_fn=ex.map)
    b = cumulant_sweep(unit, [0.7, 0.6, 0.8], cells=128)
    assert [cv.as_tuple() for cv in a.cumulants] == [cv.as_tuple() for cv in b.cumulants]


def test_k4_decreasing_toward_half():
    s = cumulant_sweep(unit, [0.6, 0.55, 0.52, 0.51], orders=(4,), cells=1024)
    k4 = s.series(4)
    assert np.all(np.diff(k4) < 0)


# ---------------------------------------------------------------------------
# distribution targets


def test_target_coherence_with_moments():
    a = 1 / math.sqrt(2)
    t = DistributionTarget.scaled_centered_chisq(a)
    c = t.cumulants()
    assert c[1] == 0.0
    assert c[2] == pytest.approx(1.0)
    assert c[3] == pytest.approx(2 * math.sqrt(2))
    assert c[4] == pytest.approx(12.0)
    # raw moments of Z^2 - 1: 0, 2, 8, 60
    m2, m3, m4 = 2 * a**2, 8 * a**3, 60 * a**4
    assert c[3] == pytest.approx(m3)
    assert c[4] == pytest.approx(m4 - 3 * m2**2)


def test_chisq_cdf_support_and_sign():
    t = DistributionTarget.scaled_centered_chisq(0.5)
    assert t.cdf(-0.5 - 1e-9) == 0.0
    assert t.cdf(-0.6) == 0.0
    assert t.cdf(1e6) == pytest.approx(1.0)
    neg = DistributionTarget.scaled_centered_chisq(-0.5, 1.0)
    x = np.array([-3.0, 0.0, 1.0, 1.4])
    rng = np.random.default_rng(0)
    s = neg.sample(rng, 200_000)
    emp = (s[:, None] <= x[None, :]).mean(axis=0)
    np.testing.assert_allclose(neg.cdf(x), emp, atol=5e-3)
    assert neg.cdf(1.5 + 1e-9) == 1.0


def test_target_validation():
    with pytest.raises(DomainError):
        DistributionTarget.gaussian(0.0)
    with pytest.raises(DomainError):
        DistributionTarget.scaled_centered_chisq(0.0)


def test_ks_self_test_gaussian():
    rng = np.random.default_rng(1)
    n = 10_000
    r = ks_test(rng.standard_normal(n), DistributionTarget.gaussian(1.0))
    assert r.passed and r.statistic < r.threshold
    assert r.threshold == pytest.approx(1.63 / math.sqrt(n), rel=0.01)


def test_ks_calibration():
    rng = np.random.default_rng(2)
    target = DistributionTarget.scaled_centered_chisq(1 / math.sqrt(2))
    passes = [ks_test(target.sample(rng, 1000), target).passed for _ in range(300)]
    assert np.mean(passes) >= 0.97


def test_ks_detects_wrong_law():
    rng = np.random.default_rng(3)
    r = ks_test(rng.standard_normal(5000), DistributionTarget.scaled_centered_chisq(1 / math.sqrt(2)))
    assert not r.passed


def test_ks_needs_samples():
    with pytest.raises(DomainError):
        ks_test(np.zeros(10), DistributionTarget.gaussian(1.0))
    assert ks_critical_value(1000) > ks_critical_value(10_000)


# ---------------------------------------------------------------------------
# finite-dimensional checks


def test_fdd_zero_alphas():
    rep = fdd_check_rou([0.0, 0.0], [0.5, 1.0], 1.0, 1.0, 0.9, cells=128)
    for m in (2, 3, 4):
        assert rep.cumulants[m] == 0.0 and rep.targets[m] == 0.0
    assert rep.within(1e-12)


def test_fdd_single_time_chi2_target():
    lam, sigma, t = 1.3, 0.7, 0.8
    rep = fdd_check_rou([1.0], [t], lam, sigma, 0.95, cells=256)
    assert rep.regime == "chi2"
    assert rep.targets[2] == pytest.approx((sigma / lam) ** 2 * (1 - math.exp(-lam * t)) ** 2, rel=1e-13)


def test_fdd_stationary_near_half():
    lam, sigma = 1.0, 1.0
    rep = fdd_check_rou([1.0], [0.0], lam, sigma, 0.51, mode="stationary", orders=(2,), cells=1024)
    assert rep.regime == "gaussian"
    assert rep.targets[2] == pytest.approx(sigma**2 / (2 * lam))
    assert abs(rep.relative_deviation[2]) < 0.05


def test_fdd_validation():
    with pytest.raises(DomainError):
        fdd_check_rou([1.0], [1.0, 2.0], 1.0, 1.0, 0.7)
    with pytest.raises(DomainError):
        fdd_check_rou([1.0], [1.0], 1.0, 1.0, 0.7, mode="other")


def test_ou_covariance_values():
    assert ou_covariance(1.0, 1.0, 2.0, 1.0, True) == pytest.approx(0.25)
    assert ou_covariance(0.0, 1.0, 2.0, 1.0, False) == pytest.approx(0.0)


# ---------------------------------------------------------------------------
# covariance checks


def test_covariance_check_gaussian_stationary():
    lam, sigma = 1.0, 1.0
    times = np.linspace(0.0, 3.0, 7)
    ens = simulate_gaussian_ou(0.0, lam, sigma, times, n=20_000, seed=31, stationary=True)
    rep = covariance_check(ens, lambda t, s: ou_covariance(t, s, lam, sigma, True), max_lag=3.0 / lam)
    assert rep.within_band
    np.testing.assert_allclose(sorted(rep.lag_deviation), 0.5 * np.arange(7))


def test_covariance_check_zero_process():
    ens = PathEnsemble(np.zeros((10_000, 3)), np.array([0.0, 1.0, 2.0]))
    rep = covariance_check(ens, lambda t, s: 0.0 * t * s)
    assert rep.max_abs_deviation == 0.0 and rep.within_band
    assert np.all(rep.empirical == 0.0)


def test_covariance_check_needs_samples():
    ens = PathEnsemble(np.zeros((100, 2)), np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        covariance_check(ens, lambda t, s: 0.0 * t)


# ---------------------------------------------------------------------------
# identity approximation


def test_identity_unit_indicator():
    rep = identity_approximation_check(unit, [0.6, 0.55, 0.52, 0.51])
    assert rep.limit == pytest.approx(1.0)
    assert rep.monotone
    assert max(rep.deviations) < 1e-8


def test_identity_exponential_kernel():
    lam, t = 1.0, 2.0
    f = KernelSpec((ExpIndicatorAtom(1.0, lam, t, 0.0),))
    rep = identity_approximation_check(f, [0.7, 0.6, 0.55, 0.52, 0.51])
    assert rep.limit == pytest.approx((1 - math.exp(-2 * lam * t)) / (2 * lam), rel=1e-12)
    assert rep.monotone
    assert rep.deviations[-1] < 0.05 * rep.limit


def test_identity_zero_and_support():
    rep = identity_approximation_check(KernelSpec.zero(), [0.6, 0.51])
    assert rep.norms == (0.0, 0.0)
    with pytest.raises(DomainError):
        identity_approximation_check(KernelSpec.indicator(-1.0, 1.0), [0.6])
    with pytest.raises(DomainError):
        identity_approximation_check(KernelSpec.ou_stationary([1.0], [1.0], 1.0, 1.0), [0.6])


# ---------------------------------------------------------------------------
# increment bound


def test_increment_gaussian_ou():
    times = np.arange(129) / 128
    ens = simulate_gaussian_ou(0.0, 1.0, 1.0, times, n=4000, seed=41)
    rep = increment_bound_check(ens, p=1)
    assert rep.slope >= 0.9 and rep.passed


@pytest.mark.parametrize("p, lower", [(1, 0.9), (2, 1.9)])
def test_increment_rou(p, lower):
    times = np.arange(129) / 128
    ens = simulate_rou(0.0, 1.0, 1.0, 0.7, times, grid=256, n=4000, seed=43)
    rep = increment_bound_check(ens, p=p)
    assert rep.slope >= lower
    assert rep.stable


def test_increment_validation():
    ens = PathEnsemble(np.ones((10, 3)), np.array([0.0, 1.0, 2.0]))
    with pytest.raises(DomainError):
        increment_bound_check(ens)
    ens = PathEnsemble(np.ones((10, 6)), np.arange(6.0))
    with pytest.raises(DomainError):
        increment_bound_check(ens, p=3)
    with pytest.raises(DomainError):
        increment_bound_check(ens)
