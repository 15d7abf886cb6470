"""Quantitative checks of the limit laws as ``H -> 1`` and ``H -> 1/2``.

* cumulant sweeps over ``H`` with both limit targets attached,
* Kolmogorov-Smirnov tests against Gaussian and scaled chi-square laws,
* finite-dimensional checks for Rosenblatt Ornstein-Uhlenbeck processes,
* covariance checks of simulated path ensembles,
* convergence of the ``H``-norm to the ``L^2`` norm,
* the moment bound on increments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import special, stats

from .cumulants import DEFAULT_CELLS, CumulantVector, chi2_limit_cumulants, gaussian_limit_variance, trace_cumulants
from .errors import DomainError
from .kernels import HurstLike, KernelSpec, hh_inner, hurst_value
from .simulation import PathEnsemble

__all__ = [
    "SweepRow",
    "SweepResult",
    "cumulant_sweep",
    "DistributionTarget",
    "KSResult",
    "ks_test",
    "FddReport",
    "ou_covariance",
    "fdd_check_rou",
    "CovarianceReport",
    "covariance_check",
    "IdentityReport",
    "identity_approximation_check",
    "IncrementReport",
    "increment_bound_check",
]

MIN_KS_SAMPLES = 1000
MIN_COVARIANCE_SAMPLES = 10_000


def _relative(value: float, target: float | None) -> float | None:
    if target is None or target == 0.0:
        return None
    return (value - target) / abs(target)


# ---------------------------------------------------------------------------
# cumulant sweeps


@dataclass(frozen=True)
class SweepRow:
    """One ``(H, m)`` entry of a sweep with both limit targets."""

    H: float
    m: int
    value: float
    error: float
    chi2_target: float
    gaussian_target: float | None
    chi2_deviation: float
    gaussian_deviation: float | None


@dataclass(frozen=True)
class SweepResult:
    """Trace cumulants along an ``H`` schedule.

    Attributes
    ----------
    H_values : tuple of float
    cumulants : tuple of CumulantVector
        One vector per ``H``, in schedule order.
    chi2_targets : dict
        ``H -> 1`` targets ``2^{m/2-1} (m-1)! (int f)^m`` by order.
    gaussian_targets : dict or None
        ``H -> 1/2`` targets ``(0, sigma_f^2, 0, 0)``; ``None`` when the
        kernel has no Gaussian limit (support reaching below 0).
    fourth_order_integral : tuple of float
        ``(2H-1)^2`` times the cyclic fourth-order integral, i.e.
        ``k_4 / (12 H^2)``, per ``H``. ``nan`` when ``4`` is not among the orders.
    """

    H_values: tuple
    cumulants: tuple
    chi2_targets: dict
    gaussian_targets: dict | None
    fourth_order_integral: tuple

    def rows(self) -> list:
        """Rows sorted by ``H`` then ``m``."""
        out = []
        for h, cv in sorted(zip(self.H_values, self.cumulants), key=lambda p: p[0]):
            for m in cv.orders:
                v = cv[m]
                c2 = self.chi2_targets[m]
                g = None if self.gaussian_targets is None else self.gaussian_targets[m]
                out.append(SweepRow(h, m, v, cv.error(m), c2, g, v - c2, None if g is None else v - g))
        return out

    def series(self, m: int) -> np.ndarray:
        """``k_m`` along the schedule order."""
        return np.array([cv[m] for cv in self.cumulants])


def cumulant_sweep(f: KernelSpec, H_list: Sequence[HurstLike], orders: Sequence[int] = (2, 3, 4),
                   cells: int = DEFAULT_CELLS, map_fn: Callable = map) -> SweepResult:
    """Trace-route cumulants of ``int f dZ`` over a schedule of Hurst indices.

    Parameters
    ----------
    f : KernelSpec
    H_list : sequence of float
        Hurst indices, kept in the given order.
    orders : sequence of int
        Cumulant orders in ``1..4``.
    cells : int
        Finest grid resolution of the trace route.
    map_fn : callable
        ``map``-like function used to evaluate the ``H`` points, e.g. an
        executor's ``map``. Results keep schedule order.
    """
    hs = tuple(hurst_value(h) for h in H_list)
    orders = tuple(orders)
    vectors = tuple(map_fn(lambda h: trace_cumulants(f, h, orders, cells=cells), hs))
    chi2 = {m: chi2_limit_cumulants(f, m) for m in orders}
    try:
        s2 = gaussian_limit_variance(f)
        gauss = {m: (s2 if m == 2 else 0.0) for m in orders}
    except DomainError:
        gauss = None
    fourth = tuple(cv[4] / (12.0 * h * h) if 4 in orders else math.nan for h, cv in zip(hs, vectors))
    return SweepResult(hs, vectors, chi2, gauss, fourth)


# ---------------------------------------------------------------------------
# distribution targets and KS tests


@dataclass(frozen=True)
class DistributionTarget:
    """Reference law for a KS test.

    ``kind`` is ``"gaussian"`` with ``params = (variance,)`` for
    ``N(0, variance)``, or ``"scaled_centered_chisq"`` with
    ``params = (a, shift)`` for ``a (Z^2 - 1) + shift``.
    """

    kind: Literal["gaussian", "scaled_centered_chisq"]
    params: tuple

    @classmethod
    def gaussian(cls, variance: float) -> "DistributionTarget":
        if not variance > 0:
            raise DomainError("Gaussian target needs a positive variance")
        return cls("gaussian", (float(variance),))

    @classmethod
    def scaled_centered_chisq(cls, a: float, shift: float = 0.0) -> "DistributionTarget":
        if a == 0:
            raise DomainError("chi-square target needs a nonzero scale")
        return cls("scaled_centered_chisq", (float(a), float(shift)))

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return 0.5 * (1.0 + special.erf(x / math.sqrt(2.0 * self.params[0])))
        a, shift = self.params
        y = (x - shift) / a + 1.0  # value of Z^2
        p = special.erf(np.sqrt(np.maximum(y, 0.0) / 2.0))  # P(Z^2 <= y)
        return p if a > 0 else 1.0 - p

    def cumulants(self, orders: Sequence[int] = (1, 2, 3, 4)) -> dict:
        out = {}
        for m in orders:
            if self.kind == "gaussian":
                out[m] = self.params[0] if m == 2 else 0.0
            else:
                a, shift = self.params
                out[m] = shift if m == 1 else a**m * 2.0 ** (m - 1) * math.factorial(m - 1)
        return out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal(n)
        if self.kind == "gaussian":
            return math.sqrt(self.params[0]) * z
        a, shift = self.params
        return a * (z * z - 1.0) + shift


@dataclass(frozen=True)
class KSResult:
    statistic: float
    threshold: float
    passed: bool
    n: int
    pvalue: float


def ks_critical_value(n: int, level: float = 0.01) -> float:
    """Exact two-sided KS critical value at significance ``level``."""
    return float(stats.kstwo.ppf(1.0 - level, n))


def ks_test(samples, target: DistributionTarget, threshold: float | None = None) -> KSResult:
    """Two-sided Kolmogorov-Smirnov statistic of ``samples`` against ``target``.

    The default threshold is the 1% critical value for the sample size.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < MIN_KS_SAMPLES:
        raise DomainError(f"KS test needs at least {MIN_KS_SAMPLES} samples, got {x.size}")
    res = stats.kstest(x, target.cdf)
    thr = ks_critical_value(x.size) if threshold is None else float(threshold)
    return KSResult(float(res.statistic), thr, bool(res.statistic <= thr), int(x.size), float(res.pvalue))


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck finite-dimensional checks


def ou_covariance(t, s, lam: float, sigma: float, stationary: bool):
    """Covariance of the Gaussian Ornstein-Uhlenbeck process driven by Brownian motion.

    ``sigma^2/(2 lam) (e^{-lam|t-s|} - e^{-lam(t+s)})`` from a zero start, or
    ``sigma^2/(2 lam) e^{-lam|t-s|}`` in the stationary regime.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    c = sigma * sigma / (2.0 * lam) * np.exp(-lam * np.abs(t - s))
    if not stationary:
        c = c - sigma * sigma / (2.0 * lam) * np.exp(-lam * (t + s))
    return c


@dataclass(frozen=True)
class FddReport:
    """Cumulants of ``sum_j alpha_j Y(t_j)`` against the limit law of the regime."""

    kernel: KernelSpec
    H: float
    mode: str
    regime: str
    cumulants: CumulantVector
    targets: dict
    relative_deviation: dict
    absolute_deviation: dict

    def within(self, tol: float, orders: Sequence[int] | None = None) -> bool:
        """Relative deviation (absolute when the target is 0) within ``tol``."""
        for m in orders or self.cumulants.orders:
            d = self.relative_deviation[m]
            if abs(self.absolute_deviation[m] if d is None else d) > tol:
                return False
        return True


def fdd_check_rou(alphas: Sequence[float], t_list: Sequence[float], lam: float, sigma: float,
                  H: HurstLike, mode: Literal["nonstationary", "stationary"] = "nonstationary",
                  orders: Sequence[int] = (2, 3, 4), cells: int = DEFAULT_CELLS) -> FddReport:
    """Compare a linear combination of ROU values with its limit law.

    For ``H > 3/4`` the target is the chi-square limit: cumulants
    ``2^{m/2-1} (m-1)! (int f)^m`` with ``int f = (sigma/lam) sum_j alpha_j
    (1 - e^{-lam t_j})`` (zero start) or ``(sigma/lam) sum_j alpha_j``
    (stationary). Otherwise the target is the Gaussian limit with variance
    ``sum_jk alpha_j alpha_k C(t_j, t_k)`` from the Brownian OU covariance.
    """
    h = hurst_value(H)
    if mode not in ("nonstationary", "stationary"):
        raise DomainError(f"unknown mode {mode!r}")
    alphas = [float(a) for a in alphas]
    t = [float(x) for x in t_list]
    if len(alphas) != len(t):
        raise DomainError("alphas and t_list must have equal length")
    if any(x < 0 for x in t):
        raise DomainError("times must be nonnegative")
    stationary = mode == "stationary"
    build = KernelSpec.ou_stationary if stationary else KernelSpec.ou_nonstationary
    f = build(alphas, t, lam, sigma)
    cv = trace_cumulants(f, h, tuple(orders), cells=cells)
    regime = "chi2" if h > 0.75 else "gaussian"
    if regime == "chi2":
        total = sigma / lam * sum(a * (1.0 if stationary else -math.expm1(-lam * x)) for a, x in zip(alphas, t))
        targets = {m: (0.0 if m == 1 else 2.0 ** (0.5 * m - 1.0) * math.factorial(m - 1) * total**m)
                   for m in orders}
    else:
        a = np.array(alphas)
        tt = np.array(t)
        var = float(a @ ou_covariance(tt[:, None], tt[None, :], lam, sigma, stationary) @ a)
        targets = {m: (var if m == 2 else 0.0) for m in orders}
    rel = {m: _relative(cv[m], targets[m]) for m in orders}
    ab = {m: cv[m] - targets[m] for m in orders}
    return FddReport(f, h, mode, regime, cv, targets, rel, ab)


# ---------------------------------------------------------------------------
# covariance checks


@dataclass(frozen=True)
class CovarianceReport:
    """Empirical against analytic covariance on the pairs with ``|t-s| <= max_lag``."""

    empirical: np.ndarray
    target: np.ndarray
    standard_error: np.ndarray
    mask: np.ndarray
    max_abs_deviation: float
    max_z: float
    z: float
    within_band: bool
    lag_deviation: dict = field(default_factory=dict)


def covariance_check(ensemble: PathEnsemble, target: Callable, max_lag: float | None = None,
                     z: float = 3.0) -> CovarianceReport:
    """Compare the ensemble covariance with ``target(t, s)``.

    The Monte Carlo standard error of each entry is the sample standard
    deviation of the centred products divided by ``sqrt(n)``. The check is
    inside the band when every deviation is at most ``z`` standard errors.

    Parameters
    ----------
    ensemble : PathEnsemble
        At least 10^4 samples.
    target : callable
        Vectorized ``target(t, s)`` returning the analytic covariance.
    max_lag : float, optional
        Restrict to pairs with ``|t - s| <= max_lag``.
    z : float
        Band width in standard errors.
    """
    X = np.asarray(ensemble.values, dtype=float)
    n = X.shape[0]
    if n < MIN_COVARIANCE_SAMPLES:
        raise DomainError(f"covariance check needs at least {MIN_COVARIANCE_SAMPLES} samples, got {n}")
    t = np.asarray(ensemble.times, dtype=float)
    D = X - X.mean(axis=0)
    emp = D.T @ D / (n - 1)
    sq = (D * D).T @ (D * D) / n
    se = np.sqrt(np.maximum(sq - (D.T @ D / n) ** 2, 0.0) / n)
    tgt = np.asarray(target(t[:, None], t[None, :]), dtype=float) * np.ones_like(emp)
    lag = np.abs(t[:, None] - t[None, :])
    mask = np.ones_like(emp, dtype=bool) if max_lag is None else lag <= max_lag + 1e-12
    dev = np.abs(emp - tgt)
    max_dev = float(dev[mask].max())
    with np.errstate(divide="ignore", invalid="ignore"):
        zs = np.where(dev == 0.0, 0.0, dev / se)
    max_z = float(zs[mask].max())
    per_lag = {}
    for L in np.unique(np.round(lag[mask], 12)):
        sel = mask & (np.abs(lag - L) < 1e-9)
        per_lag[float(L)] = float(dev[sel].max())
    return CovarianceReport(emp, tgt, se, mask, max_dev, max_z, float(z), bool(max_z <= z), per_lag)


# ---------------------------------------------------------------------------
# H-norm against L^2 norm


@dataclass(frozen=True)
class IdentityReport:
    H_values: tuple
    norms: tuple
    limit: float
    deviations: tuple
    monotone: bool


def identity_approximation_check(f: KernelSpec, H_list: Sequence[HurstLike],
                                 atol: float = 1e-10) -> IdentityReport:
    """``||f||_H^2`` along ``H_list`` against its ``H -> 1/2`` limit ``int f^2``.

    ``monotone`` is true when each absolute deviation is strictly below the
    previous one or below ``atol * max(1, int f^2)``, the quadrature noise
    floor (indicators of ``[0, t]`` have an exactly ``H``-independent norm).

    Raises
    ------
    DomainError
        If ``f`` has an atom reaching below 0 or an infinite atom. The
        limit can fail without the support condition.
    """
    atoms = f.nonzero()
    if any(not a.bounded or a.left_end < 0.0 for a in atoms):
        raise DomainError("identity approximation needs a kernel supported in [0, inf)")
    hs = tuple(hurst_value(h) for h in H_list)
    limit = f.square_integral()
    norms = tuple(hh_inner(f, f, h) for h in hs)
    devs = tuple(abs(v - limit) for v in norms)
    floor = atol * max(1.0, limit)
    mono = all(b < a or b <= floor for a, b in zip(devs[:-1], devs[1:]))
    return IdentityReport(hs, norms, limit, devs, mono)


# ---------------------------------------------------------------------------
# increment moment bound


@dataclass(frozen=True)
class IncrementReport:
    p: int
    lags: tuple
    moments: tuple
    constants: tuple
    slope: float
    stable: bool
    passed: bool


def increment_bound_check(ensemble: PathEnsemble, p: int = 1, stability_factor: float = 2.0) -> IncrementReport:
    """Fit ``log E|Y(t) - Y(s)|^{2p}`` against ``log |t - s|`` on dyadic lags.

    The ensemble must live on a uniform time grid. Lags are ``2^k`` grid
    steps up to half the horizon. Each moment averages over all start
    points and samples. The implied constants ``E|.|^{2p} / lag^p`` are
    stable when the largest constant over the finer half of the lags is
    at most ``stability_factor`` times the largest over the coarser half.
    The check passes when the slope is at least ``p - 0.1`` and the
    constants are stable.
    """
    if p not in (1, 2):
        raise DomainError("p must be 1 or 2")
    t = np.asarray(ensemble.times, dtype=float)
    steps = np.diff(t)
    if t.size < 5 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise DomainError("increment check needs a uniform grid with at least 5 times")
    dt = steps[0]
    X = np.asarray(ensemble.values, dtype=float)
    lags, moms = [], []
    k = 1
    while 2 * k <= t.size - 1:
        inc = X[:, k:] - X[:, :-k]
        lags.append(k * dt)
        moms.append(float(np.mean(np.abs(inc) ** (2 * p))))
        k *= 2
    lags_a, moms_a = np.array(lags), np.array(moms)
    if np.any(moms_a <= 0):
        raise DomainError("increment moments vanish; the process is degenerate")
    slope = float(np.polyfit(np.log(lags_a), np.log(moms_a), 1)[0])
    consts = moms_a / lags_a**p
    half = max(1, len(consts) // 2)
    stable = bool(consts[:half].max() <= stability_factor * consts[half:].max()) if len(consts) > 1 else True
    passed = bool(slope >= p - 0.1 and stable)
    return IncrementReport(p, tuple(lags), tuple(moms), tuple(consts.tolist()), slope, stable, passed)
