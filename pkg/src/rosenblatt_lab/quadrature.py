"""Grids and Gauss rules for integrands with algebraic endpoint singularities.

The integrals in this package all have the shape
``int |x - x0|^p g(x) dx`` with ``p > -1`` and ``g`` smooth between known
breakpoints. Such integrals are integrated piece by piece. A
Gauss-Jacobi panel absorbs the singular weight at ``x0``. Geometrically
growing Gauss-Legendre panels cover the rest of each piece.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Literal

import numpy as np
from scipy.special import roots_jacobi

from .errors import DomainError

Grading = Literal["both", "lower", "upper"]


@dataclass(frozen=True)
class GridSpec:
    """Partition of ``[lower, upper]`` into ``cells`` cells.

    Parameters
    ----------
    lower, upper : float
        Interval end points, ``lower < upper``.
    cells : int
        Number of cells.
    grading_exponent : float
        Exponent ``q >= 1`` of the power-law map ``s -> s**q``. ``1`` gives a
        uniform grid. Larger values crowd cells toward the graded end(s).
    toward : {"both", "lower", "upper"}
        Which end points are treated as singular.
    """

    lower: float
    upper: float
    cells: int
    grading_exponent: float = 1.0
    toward: Grading = "both"

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise DomainError("grid end points must be finite")
        if not self.lower < self.upper:
            raise DomainError(f"grid needs lower < upper, got [{self.lower}, {self.upper}]")
        if int(self.cells) != self.cells or self.cells < 1:
            raise DomainError(f"cells must be a positive integer, got {self.cells}")
        if self.grading_exponent < 1.0:
            raise DomainError("grading_exponent must be >= 1")
        if self.toward not in ("both", "lower", "upper"):
            raise DomainError(f"unknown grading side {self.toward!r}")

    def edges(self) -> np.ndarray:
        """Cell edges, strictly increasing, of length ``cells + 1``."""
        s = np.linspace(0.0, 1.0, self.cells + 1)
        q = self.grading_exponent
        if self.toward == "lower":
            phi = s**q
        elif self.toward == "upper":
            phi = 1.0 - (1.0 - s) ** q
        else:
            phi = np.where(s <= 0.5, 0.5 * (2.0 * s) ** q, 1.0 - 0.5 * (2.0 - 2.0 * s) ** q)
        x = self.lower + (self.upper - self.lower) * phi
        x[0], x[-1] = self.lower, self.upper
        return x

    def widths(self) -> np.ndarray:
        return np.diff(self.edges())

    def midpoints(self) -> np.ndarray:
        e = self.edges()
        return 0.5 * (e[:-1] + e[1:])

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same grid with ``factor`` times as many cells."""
        return GridSpec(self.lower, self.upper, self.cells * factor, self.grading_exponent, self.toward)

    def covers(self, lo: float, hi: float) -> bool:
        return self.lower <= lo and hi <= self.upper


def merge_breakpoints(edges: np.ndarray, breakpoints: Iterable[float], rel_gap: float = 1e-9) -> np.ndarray:
    """Insert interior breakpoints into a set of cell edges.

    Edges closer than ``rel_gap`` times the span to an inserted breakpoint
    are dropped so that no degenerate cells appear.
    """
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[0], edges[-1]
    tol = rel_gap * (hi - lo)
    bps = np.array(sorted({float(b) for b in breakpoints if lo + tol < b < hi - tol}))
    if bps.size == 0:
        return edges.copy()
    keep = np.ones(edges.size, dtype=bool)
    idx = np.searchsorted(edges, bps)
    for j, b in zip(idx, bps):
        for k in (j - 1, j):
            if 0 < k < edges.size - 1 and abs(edges[k] - b) <= tol:
                keep[k] = False
    out = np.union1d(edges[keep], bps)
    return out


@lru_cache(maxsize=None)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _jacobi(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_jacobi(n, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """``n``-point Gauss-Legendre rule mapped to ``[a, b]``."""
    x, w = _legendre(int(n))
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


def gauss_jacobi(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi rule for the weight ``(1-t)**alpha (1+t)**beta`` on [-1, 1]."""
    if alpha <= -1 or beta <= -1:
        raise DomainError(f"Jacobi exponents must exceed -1, got ({alpha}, {beta})")
    return _jacobi(int(n), float(alpha), float(beta))


def endpoint_rule(a: float, b: float, exponent: float, n: int, singular_at: Literal["left", "right"]):
    """Rule for ``int_a^b |x - e|**exponent g(x) dx`` with ``e`` an end point.

    Returns nodes and weights; the weights already contain the singular factor.
    """
    h = b - a
    scale = (0.5 * h) ** (exponent + 1.0)
    if singular_at == "left":
        t, w = gauss_jacobi(n, 0.0, exponent)
        return a + 0.5 * h * (1.0 + t), scale * w
    t, w = gauss_jacobi(n, exponent, 0.0)
    return b - 0.5 * h * (1.0 - t), scale * w


def geometric_panels(a: float, b: float, first: float, from_left: bool = True,
                     ratio: float = 2.0, max_width: float = np.inf) -> np.ndarray:
    """Panel edges on ``[a, b]`` whose widths grow geometrically away from one end.

    Parameters
    ----------
    a, b : float
        Interval, ``a < b``.
    first : float
        Width of the panel adjacent to the starting end.
    from_left : bool
        Start at ``a`` if true, otherwise at ``b``.
    ratio : float
        Growth factor of successive widths.
    max_width : float
        Cap on any single width.
    """
    length = b - a
    first = min(max(first, 1e-300), length, max_width)
    offsets = [0.0]
    width = first
    while offsets[-1] + width < length * (1.0 - 1e-12):
        offsets.append(offsets[-1] + width)
        width = min(width * ratio, max_width)
    # merge a tiny trailing panel into its neighbour
    if len(offsets) > 1 and length - offsets[-1] < 0.25 * (offsets[-1] - offsets[-2]):
        offsets.pop()
    offsets.append(length)
    off = np.array(offsets)
    if from_left:
        pts = a + off
        pts[-1] = b
        return pts
    pts = (b - off)[::-1]
    pts[0] = a
    return pts


def power_weighted_rule(lo: float, hi: float, exponent: float, origin: float,
                        breakpoints: Iterable[float] = (), first: float | None = None,
                        order: int = 20, jacobi_order: int | None = None,
                        max_width: float = np.inf) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``int_lo^hi |x - origin|**exponent g(x) dx``.

    ``g`` is assumed smooth between consecutive breakpoints. The origin may
    lie inside, at an end of, or outside ``[lo, hi]``.

    Parameters
    ----------
    lo, hi : float
        Finite integration limits.
    exponent : float
        Power of the singular weight; ``p > -1`` is required when the
        origin lies in ``[lo, hi]``.
    origin : float
        Location of the singularity.
    breakpoints : iterable of float
        Points where ``g`` may have a kink or jump.
    first : float, optional
        Width of the panel touching the singularity. Defaults to the whole
        piece. Use it when ``g`` varies on a scale shorter than the piece.
    order : int
        Gauss-Legendre order per panel.
    jacobi_order : int, optional
        Order of the singular panel rule, default ``order + 4``.
    max_width : float
        Largest panel width.

    Returns
    -------
    nodes, weights : ndarray
    """
    if exponent <= -1.0 and lo <= origin <= hi:
        raise DomainError(f"weight exponent {exponent} is not integrable at {origin}")
    if not hi > lo:
        return np.empty(0), np.empty(0)
    nj = jacobi_order or order + 4
    pts = {lo, hi}
    pts.update(b for b in breakpoints if lo < b < hi)
    if lo < origin < hi:
        pts.add(origin)
    pts = sorted(pts)
    xs, ws = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        if a == origin or b == origin:
            left = a == origin
            h0 = b - a if first is None else first
            edges = geometric_panels(a, b, h0, from_left=left, max_width=max_width)
            sing = (edges[0], edges[1]) if left else (edges[-2], edges[-1])
            x, w = endpoint_rule(sing[0], sing[1], exponent, nj, "left" if left else "right")
            xs.append(x)
            ws.append(w)
            rest = zip(edges[1:-1], edges[2:]) if left else zip(edges[:-2], edges[1:-1])
            for c, d in rest:
                x, w = gauss_legendre(order, c, d)
                xs.append(x)
                ws.append(w * np.abs(x - origin) ** exponent)
        else:
            if exponent == 0.0:
                edges = geometric_panels(a, b, b - a, max_width=max_width)
            else:
                near_left = abs(a - origin) <= abs(b - origin)
                d = min(abs(a - origin), abs(b - origin))
                edges = geometric_panels(a, b, d, from_left=near_left, max_width=max_width)
            for c, d2 in zip(edges[:-1], edges[1:]):
                x, w = gauss_legendre(order, c, d2)
                xs.append(x)
                ws.append(w * np.abs(x - origin) ** exponent)
    return np.concatenate(xs), np.concatenate(ws)


def power_weighted_integral(g: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                            exponent: float, origin: float, **kwargs) -> float:
    """Evaluate ``int_lo^hi |x - origin|**exponent g(x) dx`` with `power_weighted_rule`."""
    x, w = power_weighted_rule(lo, hi, exponent, origin, **kwargs)
    if x.size == 0:
        return 0.0
    return float(np.dot(w, g(x)))


def graded_rule(lo: float, hi: float, exponent: float, grid: GridSpec,
                origin: float | None = None, order: int = 12):
    """Rule for ``int_lo^hi |x - origin|**exponent g(x) dx`` on the cells of ``grid``.

    The grid is clipped to ``[lo, hi]``. When ``origin`` equals ``lo`` (the
    default) the first cell uses a Jacobi rule. Otherwise the weight is
    applied explicitly, which requires ``origin`` outside ``(lo, hi)``.
    """
    if not grid.covers(lo, hi):
        raise DomainError(f"grid [{grid.lower}, {grid.upper}] does not cover [{lo}, {hi}]")
    origin = lo if origin is None else origin
    if lo < origin < hi:
        raise DomainError("graded_rule needs the singular point outside the open range")
    e = np.unique(np.clip(grid.edges(), lo, hi))
    xs, ws = [], []
    for k, (a, b) in enumerate(zip(e[:-1], e[1:])):
        if k == 0 and origin == lo:
            x, w = endpoint_rule(a, b, exponent, order, "left")
        else:
            x, w = gauss_legendre(order, a, b)
            w = w * np.abs(x - origin) ** exponent
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)
