"""Monte Carlo generators for Rosenblatt-driven quantities.

Every second-chaos variable ``int f dZ`` is sampled through one Gaussian
field on a cell grid of the time axis:

``F(f) = sum_i g_i(f) (Y_i^2 - Kbar_ii) + sum_i fbar_i(f) eta_i``

* ``Y ~ N(0, Kbar)`` is the cell-averaged field with covariance
  ``|u-v|^{H-1}``.
* ``g_i = sqrt(H(2H-1)/2) fbar_i w_i``.
* ``eta ~ N(0, H(2H-1) deficit)`` carries the sub-cell variance that the
  cell averages miss.

For a single kernel the law of ``F`` has exactly the trace-route
cumulants of the same grid. Several kernels evaluated on one draw give
jointly coherent finite-dimensional distributions, and ``F`` is linear in
``f`` draw by draw.

Random numbers come from Philox streams keyed by
``(seed, stream_id, channel, block)``. Ensembles are therefore identical
whatever the batch schedule, and the first ``n`` rows do not depend on the
total sample count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .cumulants import CumulantVector, cell_pair_tables, quadratic_form_cumulants, truncation_point, _tail_variance
from .errors import AccuracyError, DomainError
from .kernels import HurstLike, KernelSpec, hh_inner, hurst_value
from .quadrature import GridSpec, merge_breakpoints

__all__ = [
    "RngSeed",
    "NoiseGrid",
    "PathEnsemble",
    "SecondChaosSurrogate",
    "noise_grid",
    "discretize_operator",
    "sample_second_chaos",
    "simulate_wr_integrals",
    "simulate_wr_integral",
    "simulate_rosenblatt_paths",
    "simulate_rou",
    "simulate_stationary_rou",
    "simulate_gaussian_ou",
    "empirical_cumulants",
]

BLOCK_ROWS = 4096
DEFAULT_CELLS = 1024

# independent random channels
_CH_CHAOS, _CH_COMP, _CH_INIT, _CH_GAUSS = 0, 1, 2, 3


@dataclass(frozen=True)
class RngSeed:
    """Seed and stream identifier of a reproducible ensemble."""

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) != self.stream_id or self.stream_id < 0:
            raise DomainError(f"stream_id must be a nonnegative integer, got {self.stream_id}")

    def generator(self, channel: int, block: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), channel, block))
        return np.random.Generator(np.random.Philox(ss))


SeedLike = Union[int, RngSeed]


def _as_seed(seed: SeedLike) -> RngSeed:
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed))


def _blocks(n: int):
    for b in range(math.ceil(n / BLOCK_ROWS)):
        yield b, b * BLOCK_ROWS, min(BLOCK_ROWS, n - b * BLOCK_ROWS)


@dataclass(frozen=True)
class NoiseGrid:
    """Cell grid of the time axis carrying the driving Gaussian field.

    Attributes
    ----------
    edges : ndarray
        Cell edges.
    truncation_lower : float
        Left end of the grid; kernel mass left of it is discarded.
    tail_bound : float
        Largest relative variance error caused by the truncation, over the
        kernels the grid was built for (bound ``tail + 2 sqrt(V tail)``
        divided by ``V``).
    tolerance : float
        Relative tolerance the truncation had to meet.
    """

    edges: np.ndarray
    truncation_lower: float
    tail_bound: float = 0.0
    tolerance: float = 1e-6

    def __post_init__(self) -> None:
        e = np.asarray(self.edges, dtype=float)
        if e.ndim != 1 or e.size < 2 or not np.all(np.diff(e) > 0):
            raise DomainError("noise grid edges must be strictly increasing")
        object.__setattr__(self, "edges", e)
        if self.tail_bound > self.tolerance:
            raise AccuracyError(f"tail bound {self.tail_bound:.3g} exceeds tolerance {self.tolerance:.3g}")

    @property
    def points(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def weights(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def cells(self) -> int:
        return self.edges.size - 1

    def summary(self) -> dict:
        return {
            "cells": int(self.cells),
            "lower": float(self.edges[0]),
            "upper": float(self.edges[-1]),
            "truncation_lower": float(self.truncation_lower),
            "tail_bound": float(self.tail_bound),
            "tolerance": float(self.tolerance),
        }


def noise_grid(kernels: Sequence[KernelSpec], H: HurstLike, cells: int = DEFAULT_CELLS,
               tolerance: float = 1e-6, grading_exponent: float = 1.0,
               lower: float | None = None, upper: float | None = None) -> NoiseGrid:
    """Build a grid covering every kernel, truncating infinite atoms.

    Parameters
    ----------
    kernels : sequence of KernelSpec
    H : float or HurstIndex
    cells : int
        Number of base cells before atom end points are inserted.
    tolerance : float
        Relative variance tolerance for the left truncation.
    grading_exponent : float
        Grading toward both grid ends (1 gives a uniform grid).
    lower, upper : float, optional
        Override the grid span. ``lower`` must not cut into a bounded
        kernel's support.
    """
    h = hurst_value(H)
    live = [k for k in kernels if not k.is_zero]
    if not live:
        lo, hi = (0.0 if lower is None else lower), (1.0 if upper is None else upper)
        return NoiseGrid(GridSpec(lo, hi, cells, grading_exponent).edges(), lo, 0.0, tolerance)
    los, his = [], []
    for k in live:
        lo, hi = k.support()
        his.append(hi)
        los.append(truncation_point(k, h, tolerance) if not k.bounded else lo)
    lo = min(los) if lower is None else lower
    hi = max(his) if upper is None else upper
    if not hi > lo:
        raise DomainError("empty grid span")
    bound = 0.0
    for k in live:
        klo, khi = k.support()
        if k.bounded:
            if klo < lo - 1e-12 * max(1.0, abs(lo)) or khi > hi + 1e-12 * max(1.0, abs(hi)):
                raise DomainError("grid does not cover a bounded kernel's support")
            continue
        V = hh_inner(k, k, h)
        t = _tail_variance(k, lo, h)
        if V > 0:
            bound = max(bound, (t + 2.0 * math.sqrt(V * t)) / V)
    bps = sorted({b for k in live for b in k.breakpoints()})
    edges = merge_breakpoints(GridSpec(lo, hi, cells, grading_exponent).edges(), bps)
    return NoiseGrid(edges, lo, bound, tolerance)


@dataclass(frozen=True)
class PathEnsemble:
    """``n_samples x n_times`` array of simulated values with metadata."""

    values: np.ndarray
    times: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def covariance(self) -> np.ndarray:
        """Sample covariance matrix across times (divisor ``n - 1``)."""
        return np.atleast_2d(np.cov(self.values, rowvar=False))


@dataclass(frozen=True)
class SecondChaosSurrogate:
    """Discrete stand-in ``xi^T A xi - tr(A) + sqrt(gaussian_variance) zeta``."""

    matrix: np.ndarray
    gaussian_variance: float = 0.0

    def cumulants(self, orders: Sequence[int] = (1, 2, 3, 4)) -> dict:
        out = quadratic_form_cumulants(self.matrix, orders)
        if 2 in out:
            out[2] += self.gaussian_variance
        return out

    def variance(self) -> float:
        return self.cumulants((2,))[2]


class _FieldModel:
    """Factorized field covariance and deficit on a noise grid."""

    def __init__(self, grid: NoiseGrid, H: float):
        self.grid = grid
        self.H = H
        self.kbar, self.deficit = cell_pair_tables(grid.edges, H)
        self.chol = _psd_factor(self.kbar)
        self.def_factor = _psd_factor(self.deficit)
        self.gscale = math.sqrt(H * (2.0 * H - 1.0) / 2.0)
        self.cscale = math.sqrt(H * (2.0 * H - 1.0))

    def weights(self, kernels: Sequence[KernelSpec]):
        e = self.grid.edges
        w = self.grid.weights
        fbar = np.empty((w.size, len(kernels)))
        for j, k in enumerate(kernels):
            kk = k.truncated(e[0]) if not k.bounded else k
            fbar[:, j] = kk.cell_integrals(e) / w
        return fbar, self.gscale * fbar * w[:, None]


def _psd_factor(S: np.ndarray) -> np.ndarray:
    """``L`` with ``L L^T = S`` for a symmetric PSD ``S`` (negative eigenvalues clipped)."""
    vals, vecs = np.linalg.eigh(S)
    vals = np.clip(vals, 0.0, None)
    keep = vals > vals.max() * 1e-15 if vals.max() > 0 else np.zeros_like(vals, dtype=bool)
    return vecs[:, keep] * np.sqrt(vals[keep])[None, :]


def _grid_for(kernels: Sequence[KernelSpec], H: float, grid) -> NoiseGrid:
    if isinstance(grid, NoiseGrid):
        return grid
    if isinstance(grid, GridSpec):
        return noise_grid(kernels, H, grid.cells, grading_exponent=grid.grading_exponent,
                          lower=grid.lower, upper=grid.upper)
    cells = DEFAULT_CELLS if grid is None else int(grid)
    return noise_grid(kernels, H, cells)


def discretize_operator(f_or_t: Union[KernelSpec, float], H: HurstLike,
                        grid: Union[NoiseGrid, GridSpec, int, None] = None) -> SecondChaosSurrogate:
    """Discrete second-chaos surrogate of ``int f dZ`` (or of ``Z(t)``).

    Parameters
    ----------
    f_or_t : KernelSpec or float
        Integrand, or a time ``t`` standing for ``1{0 < u <= t}``.
    H : float or HurstIndex
    grid : NoiseGrid, GridSpec or int, optional
        Grid or number of cells (default 1024).

    Returns
    -------
    SecondChaosSurrogate
        Symmetric ``A = L^T diag(g) L`` with ``L L^T = Kbar`` plus the
        Gaussian compensator variance. ``2 tr(A^2) + gaussian_variance``
        equals the trace-route variance on the same grid.
    """
    h = hurst_value(H)
    if isinstance(f_or_t, KernelSpec):
        f = f_or_t
    else:
        t = float(f_or_t)
        if t < 0:
            raise DomainError("time must be nonnegative")
        f = KernelSpec.indicator(0.0, t) if t > 0 else KernelSpec.zero()
    g_grid = _grid_for([f], h, grid)
    model = _FieldModel(g_grid, h)
    fbar, g = model.weights([f])
    L = model.chol
    A = L.T @ (g[:, 0][:, None] * L)
    A = 0.5 * (A + A.T)
    gv = h * (2.0 * h - 1.0) * float(fbar[:, 0] @ model.deficit @ fbar[:, 0])
    return SecondChaosSurrogate(A, max(gv, 0.0))


def sample_second_chaos(A, n: int, seed: SeedLike) -> np.ndarray:
    """Samples of ``xi^T A xi - tr(A)`` through the eigenbasis of ``A``.

    Parameters
    ----------
    A : array_like or SecondChaosSurrogate
        Symmetric array. A surrogate also adds its Gaussian compensator.
    n : int
        Number of samples.
    seed : int or RngSeed

    Returns
    -------
    ndarray of shape (n,)
    """
    seed = _as_seed(seed)
    gvar = 0.0
    if isinstance(A, SecondChaosSurrogate):
        gvar = A.gaussian_variance
        A = A.matrix
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1] or not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max(initial=0))):
        raise DomainError("A must be a symmetric square array")
    lam = np.linalg.eigvalsh(0.5 * (A + A.T))
    lam = lam[np.abs(lam) > 0.0]
    out = np.zeros(int(n))
    for b, start, rows in _blocks(int(n)):
        if lam.size:
            # full blocks keep the BLAS rounding independent of n
            z = seed.generator(_CH_CHAOS, b).standard_normal((BLOCK_ROWS, lam.size))
            out[start:start + rows] = ((z * z - 1.0) @ lam)[:rows]
        if gvar > 0:
            out[start:start + rows] += math.sqrt(gvar) * seed.generator(_CH_COMP, b).standard_normal(rows)
    return out


def simulate_wr_integrals(kernels: Sequence[KernelSpec], H: HurstLike,
                          grid: Union[NoiseGrid, GridSpec, int, None], n: int,
                          seed: SeedLike) -> tuple:
    """Joint samples of ``int f_k dZ`` for several kernels from shared draws.

    Returns
    -------
    values : ndarray of shape (n, len(kernels))
    grid : NoiseGrid
    """
    h = hurst_value(H)
    seed = _as_seed(seed)
    g_grid = _grid_for(kernels, h, grid)
    model = _FieldModel(g_grid, h)
    fbar, g = model.weights(kernels)
    diag = np.diag(model.kbar)
    Lt = model.chol.T
    comp = model.cscale * (model.def_factor.T @ fbar)  # (rank, K)
    out = np.empty((int(n), len(kernels)))
    for b, start, rows in _blocks(int(n)):
        # full blocks keep the BLAS rounding independent of n
        xi = seed.generator(_CH_CHAOS, b).standard_normal((BLOCK_ROWS, Lt.shape[0]))
        Y = xi @ Lt
        vals = (Y * Y - diag[None, :]) @ g
        if comp.shape[0]:
            zeta = seed.generator(_CH_COMP, b).standard_normal((BLOCK_ROWS, comp.shape[0]))
            vals += zeta @ comp
        out[start:start + rows] = vals[:rows]
    return out, g_grid


def simulate_wr_integral(f: KernelSpec, H: HurstLike, grid: Union[NoiseGrid, GridSpec, int, None] = None,
                         n: int = 10_000, seed: SeedLike = 0) -> np.ndarray:
    """Samples of ``int f dZ`` via the eigenbasis of the discretized operator."""
    return sample_second_chaos(discretize_operator(f, H, grid), n, seed)


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("times must be a nonempty 1-D sequence")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise DomainError("times must be nonnegative and strictly increasing")
    return t


def _meta(H, seed: RngSeed, scheme: str, grid: NoiseGrid, **extra) -> dict:
    out = {"H": float(H), "seed": int(seed.seed), "stream_id": int(seed.stream_id),
           "scheme_name": scheme, "grid": grid.summary()}
    out.update(extra)
    return out


def simulate_rosenblatt_paths(H: HurstLike, times, grid: Union[NoiseGrid, GridSpec, int, None] = None,
                              n: int = 10_000, seed: SeedLike = 0) -> PathEnsemble:
    """Rosenblatt process values at ``times`` sharing one field draw per sample."""
    h = hurst_value(H)
    seed = _as_seed(seed)
    t = _check_times(times)
    kernels = [KernelSpec.indicator(0.0, ti) if ti > 0 else KernelSpec.zero() for ti in t]
    if isinstance(grid, (int, type(None))):
        grid = noise_grid(kernels, h, DEFAULT_CELLS if grid is None else grid, lower=0.0,
                          upper=max(float(t[-1]), 1e-12))
    vals, g = simulate_wr_integrals(kernels, h, grid, n, seed)
    return PathEnsemble(vals, t, _meta(h, seed, "wick-field", g))


XiLike = Union[float, Callable[[np.random.Generator, int], np.ndarray]]


def _draw_xi(xi: XiLike, seed: RngSeed, n: int) -> np.ndarray:
    if callable(xi):
        out = np.empty(n)
        for b, start, rows in _blocks(n):
            out[start:start + rows] = np.asarray(xi(seed.generator(_CH_INIT, b), rows), dtype=float)
        return out
    return np.full(n, float(xi))


def simulate_rou(xi: XiLike, lam: float, sigma: float, H: HurstLike, times,
                 grid: Union[NoiseGrid, GridSpec, int, None] = None, n: int = 10_000,
                 seed: SeedLike = 0, driver: bool = False):
    """Rosenblatt Ornstein-Uhlenbeck process started from ``xi`` at time 0.

    ``Y(t) = e^{-lam t} xi + sigma int_0^t e^{-lam (t-u)} dZ(u)``.

    Parameters
    ----------
    xi : float or callable
        Initial value, or a sampler ``xi(rng, size)``. It is drawn on its own
        random channel, independently of the chaos draw.
    lam, sigma : float
        Positive mean-reversion rate and volatility.
    H : float or HurstIndex
    times : sequence of float
        Nonnegative increasing evaluation times.
    grid : NoiseGrid, GridSpec or int, optional
    n : int
    seed : int or RngSeed
    driver : bool
        Also return the driving Rosenblatt process at the same times, from
        the same draws.

    Returns
    -------
    PathEnsemble, or (PathEnsemble, PathEnsemble) when ``driver`` is set.
    """
    h = hurst_value(H)
    if not lam > 0 or not sigma > 0:
        raise DomainError("lambda and sigma must be positive")
    seed = _as_seed(seed)
    t = _check_times(times)
    kernels = [KernelSpec.ou_nonstationary([1.0], [ti], lam, sigma) for ti in t]
    if driver:
        kernels += [KernelSpec.indicator(0.0, ti) if ti > 0 else KernelSpec.zero() for ti in t]
    if isinstance(grid, (int, type(None))):
        grid = noise_grid(kernels, h, DEFAULT_CELLS if grid is None else grid, lower=0.0,
                          upper=max(float(t[-1]), 1e-12))
    vals, g = simulate_wr_integrals(kernels, h, grid, n, seed)
    x0 = _draw_xi(xi, seed, int(n))
    rou = vals[:, : t.size] + np.exp(-lam * t)[None, :] * x0[:, None]
    meta = _meta(h, seed, "wick-field", g, lam=float(lam), sigma=float(sigma))
    ens = PathEnsemble(rou, t, meta)
    if driver:
        return ens, PathEnsemble(vals[:, t.size:], t, dict(meta, scheme_name="wick-field-driver"))
    return ens


def simulate_stationary_rou(lam: float, sigma: float, H: HurstLike, times,
                            grid: Union[NoiseGrid, GridSpec, int, None] = None, n: int = 10_000,
                            seed: SeedLike = 0, tolerance: float = 1e-6) -> PathEnsemble:
    """Stationary Rosenblatt Ornstein-Uhlenbeck process ``sigma int_{-inf}^t e^{-lam(t-u)} dZ(u)``.

    The grid starts at a truncation point chosen so that the relative
    variance error of every evaluation time is below ``tolerance``.
    """
    h = hurst_value(H)
    if not lam > 0 or not sigma > 0:
        raise DomainError("lambda and sigma must be positive")
    seed = _as_seed(seed)
    t = _check_times(times)
    kernels = [KernelSpec.ou_stationary([1.0], [ti], lam, sigma) for ti in t]
    if isinstance(grid, (int, type(None))):
        grid = noise_grid(kernels, h, DEFAULT_CELLS if grid is None else grid, tolerance=tolerance)
    elif isinstance(grid, GridSpec):
        grid = noise_grid(kernels, h, grid.cells, tolerance=tolerance,
                          grading_exponent=grid.grading_exponent, lower=grid.lower, upper=grid.upper)
    vals, g = simulate_wr_integrals(kernels, h, grid, n, seed)
    return PathEnsemble(vals, t, _meta(h, seed, "wick-field", g, lam=float(lam), sigma=float(sigma)))


def simulate_gaussian_ou(xi: XiLike, lam: float, sigma: float, times, n: int = 10_000,
                         seed: SeedLike = 0, stationary: bool = False) -> PathEnsemble:
    """Gaussian Ornstein-Uhlenbeck reference paths by the exact recursion.

    ``Y(t_{k+1}) = e^{-lam D} Y(t_k) + eta_k`` with
    ``Var eta_k = sigma^2 (1 - e^{-2 lam D}) / (2 lam)``. The process starts
    from ``xi`` at time 0, or from its stationary law when ``stationary``.
    """
    if not lam > 0 or not sigma > 0:
        raise DomainError("lambda and sigma must be positive")
    seed = _as_seed(seed)
    t = _check_times(times)
    n = int(n)
    s2 = sigma * sigma / (2.0 * lam)
    out = np.empty((n, t.size))
    x0 = None if stationary else _draw_xi(xi, seed, n)
    for b, start, rows in _blocks(n):
        z = seed.generator(_CH_GAUSS, b).standard_normal((rows, t.size))
        if stationary:
            y = math.sqrt(s2) * z[:, 0]
        else:
            a = math.exp(-lam * t[0])
            y = a * x0[start:start + rows] + math.sqrt(s2 * -math.expm1(-2.0 * lam * t[0])) * z[:, 0]
        out[start:start + rows, 0] = y
        for k in range(1, t.size):
            d = t[k] - t[k - 1]
            y = math.exp(-lam * d) * y + math.sqrt(s2 * -math.expm1(-2.0 * lam * d)) * z[:, k]
            out[start:start + rows, k] = y
    meta = {"H": 0.5, "seed": int(seed.seed), "stream_id": int(seed.stream_id),
            "scheme_name": "exact-gaussian-recursion", "grid": {"times": t.size},
            "lam": float(lam), "sigma": float(sigma), "stationary": bool(stationary)}
    return PathEnsemble(out, t, meta)


def empirical_cumulants(samples, orders: Sequence[int] = (1, 2, 3, 4)) -> CumulantVector:
    """Sample cumulants with delta-method standard errors.

    The standard error of each cumulant is the standard deviation of its
    influence function over the sample, divided by ``sqrt(n)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise DomainError("need at least two samples")
    mu = x.mean()
    d = x - mu
    m2, m3, m4 = (d**2).mean(), (d**3).mean(), (d**4).mean()
    inf = {
        1: d,
        2: d**2 - m2,
        3: d**3 - m3 - 3.0 * m2 * d,
        4: (d**4 - m4 - 4.0 * m3 * d) - 6.0 * m2 * (d**2 - m2),
    }
    val = {1: mu, 2: m2, 3: m3, 4: m4 - 3.0 * m2 * m2}
    entries = {m: float(val[m]) for m in orders}
    errs = {m: float(inf[m].std() / math.sqrt(n)) for m in orders}
    return CumulantVector(entries, errs)
