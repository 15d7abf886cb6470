"""Deterministic kernels, normalizing constants and H-norms.

Integrands are finite sums of exponentially weighted indicator atoms
``u -> w exp(-lam (t - u)) 1{l < u <= t}``. This covers indicators of
intervals and the Ornstein-Uhlenbeck kernels. It also makes every pairwise
``|u - v|^{2H-2}`` integral reducible to a one-dimensional integral with
a closed-form inner part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincc

from .errors import AccuracyError, DomainError
from .quadrature import GridSpec, graded_rule, power_weighted_rule
from .special import beta, gamma

__all__ = [
    "HurstIndex",
    "ExpIndicatorAtom",
    "KernelSpec",
    "hurst_value",
    "scaling_constant",
    "rosenblatt_kernel_L",
    "wiener_rosenblatt_kernel_J",
    "noise_contraction",
    "hh_inner",
    "hh_norm_abs",
    "integral_of_f",
    "pair_power_integral",
    "exp_power_tail",
]


@dataclass(frozen=True)
class HurstIndex:
    """Validated Hurst index.

    Parameters
    ----------
    value : float
        Self-similarity index. Must lie in (1/2, 1) unless ``relaxed``.
    relaxed : bool
        Accept the wider range (1/4, 1] used by finiteness checks of the
        cumulant integrals.
    """

    value: float
    relaxed: bool = False

    def __post_init__(self) -> None:
        v = float(self.value)
        if not math.isfinite(v):
            raise DomainError(f"Hurst index must be finite, got {self.value}")
        if self.relaxed:
            if not 0.25 < v <= 1.0:
                raise DomainError(f"relaxed Hurst index must lie in (1/4, 1], got {v}")
        elif not 0.5 < v < 1.0:
            raise DomainError(f"Hurst index must lie in (1/2, 1), got {v}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


HurstLike = Union[float, HurstIndex]


def hurst_value(H: HurstLike, relaxed: bool = False) -> float:
    """Validate ``H`` and return it as a float."""
    if isinstance(H, HurstIndex):
        if H.relaxed and not relaxed:
            return HurstIndex(H.value).value
        return H.value
    return HurstIndex(float(H), relaxed=relaxed).value


@dataclass(frozen=True)
class ExpIndicatorAtom:
    """``u -> weight * exp(-decay * (right_end - u))`` on ``(left_end, right_end]``."""

    weight: float
    decay: float
    right_end: float
    left_end: float = -math.inf

    def __post_init__(self) -> None:
        for name in ("weight", "decay", "right_end", "left_end"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not math.isfinite(self.weight):
            raise DomainError("atom weight must be finite")
        if not (math.isfinite(self.decay) and self.decay >= 0.0):
            raise DomainError(f"atom decay must be finite and >= 0, got {self.decay}")
        if not math.isfinite(self.right_end):
            raise DomainError("atom right_end must be finite")
        if self.left_end != -math.inf and not math.isfinite(self.left_end):
            raise DomainError("atom left_end must be finite or -inf")
        if not self.left_end < self.right_end:
            raise DomainError(f"atom needs left_end < right_end, got ({self.left_end}, {self.right_end}]")
        if self.left_end == -math.inf and self.decay <= 0.0:
            raise DomainError("an atom with left_end = -inf needs decay > 0")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.left_end)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u > self.left_end) & (u <= self.right_end)
        val = self.weight * np.exp(-self.decay * np.where(inside, self.right_end - u, 0.0))
        return np.where(inside, val, 0.0)

    def integral_over(self, a, b):
        """``int_a^b`` of the atom, vectorized over interval ends."""
        a = np.maximum(np.asarray(a, dtype=float), self.left_end)
        b = np.minimum(np.asarray(b, dtype=float), self.right_end)
        length = np.maximum(b - a, 0.0)
        if self.decay == 0.0:
            return self.weight * length
        top = np.exp(-self.decay * np.maximum(self.right_end - b, 0.0))
        return self.weight * top * _one_minus_exp_over(self.decay, length)

    def integral(self) -> float:
        length = self.right_end - self.left_end
        if self.decay == 0.0:
            return self.weight * length
        return float(self.weight * _one_minus_exp_over(self.decay, length))

    def scaled(self, c: float) -> "ExpIndicatorAtom":
        return ExpIndicatorAtom(self.weight * c, self.decay, self.right_end, self.left_end)

    def truncated(self, lower: float) -> "ExpIndicatorAtom":
        """Restriction to ``(max(lower, left_end), right_end]``."""
        if lower >= self.right_end:
            raise DomainError("truncation point beyond the atom's right end")
        return ExpIndicatorAtom(self.weight, self.decay, self.right_end, max(lower, self.left_end))

    def to_dict(self) -> dict:
        return {
            "weight": self.weight,
            "decay": self.decay,
            "right_end": self.right_end,
            "left_end": None if self.left_end == -math.inf else self.left_end,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExpIndicatorAtom":
        left = d.get("left_end")
        return cls(d["weight"], d.get("decay", 0.0), d["right_end"], -math.inf if left is None else left)


def _one_minus_exp_over(k: float, length):
    """``(1 - exp(-k length)) / k`` with the ``k -> 0`` and ``length = inf`` limits."""
    length = np.asarray(length, dtype=float)
    if k == 0.0:
        return length
    with np.errstate(over="ignore", invalid="ignore"):
        return np.where(np.isinf(length), 1.0 / k, -np.expm1(-k * np.where(np.isinf(length), 0.0, length)) / k)


@dataclass(frozen=True)
class KernelSpec:
    """Finite sum of `ExpIndicatorAtom` objects."""

    atoms: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        atoms = tuple(self.atoms)
        for a in atoms:
            if not isinstance(a, ExpIndicatorAtom):
                raise DomainError(f"KernelSpec atoms must be ExpIndicatorAtom, got {type(a).__name__}")
        object.__setattr__(self, "atoms", atoms)

    # constructors
    @classmethod
    def zero(cls) -> "KernelSpec":
        return cls(())

    @classmethod
    def indicator(cls, a: float, b: float, weight: float = 1.0) -> "KernelSpec":
        """``weight * 1{a < u <= b}``."""
        return cls((ExpIndicatorAtom(weight, 0.0, b, a),))

    @classmethod
    def ou_nonstationary(cls, alphas: Sequence[float], times: Sequence[float], lam: float,
                         sigma: float = 1.0) -> "KernelSpec":
        """``sigma * sum_j alpha_j exp(-lam (t_j - u)) 1{0 < u <= t_j}``.

        Chaos part of ``sum_j alpha_j Y(t_j)`` for the Ornstein-Uhlenbeck
        process started at time 0. Times equal to 0 contribute nothing.
        """
        _check_ou(alphas, times, lam, sigma)
        atoms = tuple(ExpIndicatorAtom(sigma * a, lam, t, 0.0)
                      for a, t in zip(alphas, times) if t > 0.0)
        return cls(atoms)

    @classmethod
    def ou_stationary(cls, alphas: Sequence[float], times: Sequence[float], lam: float,
                      sigma: float = 1.0) -> "KernelSpec":
        """``sigma * sum_j alpha_j exp(-lam (t_j - u)) 1{u <= t_j}``."""
        _check_ou(alphas, times, lam, sigma)
        return cls(tuple(ExpIndicatorAtom(sigma * a, lam, t) for a, t in zip(alphas, times)))

    # algebra
    def __add__(self, other: "KernelSpec") -> "KernelSpec":
        return KernelSpec(self.atoms + other.atoms)

    def scaled(self, c: float) -> "KernelSpec":
        return KernelSpec(tuple(a.scaled(c) for a in self.atoms))

    def __mul__(self, c: float) -> "KernelSpec":
        return self.scaled(float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "KernelSpec":
        return self.scaled(-1.0)

    def nonzero(self) -> tuple:
        return tuple(a for a in self.atoms if a.weight != 0.0)

    @property
    def is_zero(self) -> bool:
        return len(self.nonzero()) == 0

    @property
    def bounded(self) -> bool:
        return all(a.bounded for a in self.nonzero())

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        for a in self.atoms:
            out = out + a(u)
        return out

    def integral(self) -> float:
        return float(sum(a.integral() for a in self.atoms))

    def breakpoints(self) -> list:
        pts = set()
        for a in self.nonzero():
            pts.add(a.right_end)
            if a.bounded:
                pts.add(a.left_end)
        return sorted(pts)

    def support(self) -> tuple:
        """Smallest interval ``(lo, hi]`` containing every nonzero atom."""
        atoms = self.nonzero()
        if not atoms:
            return (0.0, 0.0)
        return (min(a.left_end for a in atoms), max(a.right_end for a in atoms))

    def cell_integrals(self, edges) -> np.ndarray:
        """Exact integrals of ``f`` over the cells delimited by ``edges``."""
        edges = np.asarray(edges, dtype=float)
        out = np.zeros(edges.size - 1)
        for a in self.nonzero():
            out += a.integral_over(edges[:-1], edges[1:])
        return out

    def truncated(self, lower: float) -> "KernelSpec":
        """Drop the part of every atom left of ``lower``."""
        return KernelSpec(tuple(a.truncated(lower) for a in self.nonzero() if a.right_end > lower))

    def square_integral(self) -> float:
        """``int f(u)^2 du`` in closed form."""
        total = 0.0
        atoms = self.nonzero()
        for a in atoms:
            for b in atoms:
                lo = max(a.left_end, b.left_end)
                hi = min(a.right_end, b.right_end)
                if hi <= lo:
                    continue
                k = a.decay + b.decay
                top = math.exp(-a.decay * (a.right_end - hi) - b.decay * (b.right_end - hi))
                total += a.weight * b.weight * top * float(_one_minus_exp_over(k, hi - lo))
        return total

    def abs_atoms(self) -> list:
        """Atoms whose sum is ``|f|``.

        The real line is cut at atom end points and at the sign changes of
        ``f``. On each piece ``|f|`` is a signed sum of exponentials, so it
        is again a sum of atoms.
        """
        atoms = self.nonzero()
        if not atoms:
            return []
        signs = {math.copysign(1.0, a.weight) for a in atoms}
        if len(signs) == 1:
            s = signs.pop()
            return [a.scaled(s) for a in atoms]
        pts = self.breakpoints()
        lo_inf = not self.bounded
        pieces = list(zip(pts[:-1], pts[1:]))
        if lo_inf:
            pieces.insert(0, (-math.inf, pts[0]))
        out = []
        for a, b in pieces:
            cover = [at for at in atoms if at.left_end <= a and at.right_end >= b]
            if not cover:
                continue
            cuts = [a] + _sign_changes(cover, a, b) + [b]
            for c, d in zip(cuts[:-1], cuts[1:]):
                probe = d - 1e-3 * (d - c) if math.isfinite(c) else d - 1.0 / min(at.decay for at in cover)
                s = math.copysign(1.0, sum(float(at(probe)) for at in cover))
                for at in cover:
                    w = s * at.weight * math.exp(-at.decay * (at.right_end - d))
                    out.append(ExpIndicatorAtom(w, at.decay, d, c))
        return out

    def to_list(self) -> list:
        return [a.to_dict() for a in self.atoms]

    @classmethod
    def from_list(cls, items: Iterable[dict]) -> "KernelSpec":
        return cls(tuple(ExpIndicatorAtom.from_dict(d) for d in items))


def _check_ou(alphas, times, lam, sigma) -> None:
    if len(alphas) != len(times):
        raise DomainError("alphas and times must have equal length")
    if not lam > 0 or not sigma > 0:
        raise DomainError("lambda and sigma must be positive")
    if any(t < 0 for t in times):
        raise DomainError("evaluation times must be nonnegative")


def _sign_changes(cover, a: float, b: float, samples: int = 400) -> list:
    def f(u):
        return sum(float(at(u)) for at in cover)

    if not math.isfinite(a):
        # the smallest decay dominates far to the left; look at a finite window
        a = b - 60.0 / min(at.decay for at in cover)
    x = np.linspace(a, b, samples + 1)[1:]
    x[-1] = b
    vals = np.array([f(u) for u in x])
    roots = []
    for i in range(len(x) - 1):
        if vals[i] == 0.0:
            roots.append(float(x[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(float(brentq(f, x[i], x[i + 1], xtol=1e-14, rtol=1e-15)))
    return sorted(set(r for r in roots if a < r < b))


def scaling_constant(H: HurstLike) -> float:
    """Normalizing constant ``c(H, 2)`` of the Rosenblatt kernel.

    ``c(H,2)^2 = H(2H-1) / (2 B(H/2, 1-H)^2)``, which makes the process have
    unit variance at time one.
    """
    h = hurst_value(H)
    return math.sqrt(h * (2.0 * h - 1.0) / (2.0 * beta(h / 2.0, 1.0 - h) ** 2))


def _singular_pair_rule(lo: float, hi: float, y1: float, y2: float, H: float,
                        grid: GridSpec | None, order: int):
    """Rule for ``int_lo^hi (u-y1)_+^a (u-y2)_+^a g(u) du`` with ``a = H/2 - 1``.

    Returns nodes and weights with the power factors folded in, or ``None``
    when the integral diverges.
    """
    a = 0.5 * H - 1.0
    s, m = max(y1, y2), min(y1, y2)
    d = s - m
    if d == 0.0:
        if lo <= s:
            return None
        exponent, extra = 2.0 * a, None
    else:
        exponent, extra = a, m
    if grid is not None:
        x, w = graded_rule(lo, hi, exponent, grid, origin=s, order=order)
    else:
        first = d if (lo == s and d > 0.0) else None
        x, w = power_weighted_rule(lo, hi, exponent, s, first=first, order=order)
    if extra is not None:
        w = w * (x - extra) ** a
    return x, w


def rosenblatt_kernel_L(H: HurstLike, t: float, y1: float, y2: float,
                        grid: GridSpec | None = None, order: int = 20) -> float:
    """Kernel of the Rosenblatt process at time ``t``.

    ``c(H,2) int_0^t (u-y1)_+^{H/2-1} (u-y2)_+^{H/2-1} du``.

    Parameters
    ----------
    H : float or HurstIndex
    t : float
        Time, ``t >= 0``.
    y1, y2 : float
        Noise coordinates.
    grid : GridSpec, optional
        Graded mesh on ``[max(y1, y2, 0), t]``. When omitted, panels that
        grow geometrically from the singular point are used.
    order : int
        Gauss order per panel.

    Returns
    -------
    float
        ``inf`` on the diagonal ``y1 = y2`` inside ``[0, t)``, where the
        kernel is not defined pointwise.
    """
    h = hurst_value(H)
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    s = max(y1, y2)
    lo = max(s, 0.0)
    if s >= t or t == 0.0:
        return 0.0
    rule = _singular_pair_rule(lo, t, y1, y2, h, grid, order)
    if rule is None:
        return math.inf
    return scaling_constant(h) * float(np.sum(rule[1]))


def wiener_rosenblatt_kernel_J(f: KernelSpec, H: HurstLike, y1: float, y2: float,
                               grid: GridSpec | None = None, order: int = 20) -> float:
    """Kernel of the Wiener-Rosenblatt integral of ``f``.

    ``c(H,2) int f(u) (u-y1)_+^{H/2-1} (u-y2)_+^{H/2-1} du``, evaluated atom
    by atom. Every atom is integrated over a bounded range, because the
    power factors vanish left of ``max(y1, y2)``.
    """
    h = hurst_value(H)
    s = max(y1, y2)
    total = 0.0
    for atom in f.nonzero():
        lo, hi = max(atom.left_end, s), atom.right_end
        if hi <= lo:
            continue
        rule = _singular_pair_rule(lo, hi, y1, y2, h, grid, order)
        if rule is None:
            return math.copysign(math.inf, atom.weight)
        x, w = rule
        total += float(np.dot(w, atom(x)))
    return scaling_constant(h) * total


def noise_contraction(H: HurstLike, u: float, v: float, order: int = 24) -> float:
    """``int (u-y)_+^{H/2-1} (v-y)_+^{H/2-1} dy`` over the real line.

    Equals ``B(H/2, 1-H) |u-v|^{H-1}``. Computed numerically here, so it
    checks how the time-domain covariance arises from the noise kernel.
    """
    h = hurst_value(H)
    a = 0.5 * h - 1.0
    d = abs(u - v)
    if d == 0.0:
        return math.inf
    # z = min(u,v) - y runs over (0, inf): z^a (z+d)^a
    z_cut = 64.0 * d
    x, w = power_weighted_rule(0.0, z_cut, a, 0.0, first=d, order=order)
    head = float(np.dot(w, (x + d) ** a))
    # tail z = z_cut / s, s in (0, 1]: z_cut^{2a+1} int s^{-2a-2} (1 + d s / z_cut)^a ds
    x, w = power_weighted_rule(0.0, 1.0, -2.0 * a - 2.0, 0.0, order=order)
    tail = z_cut ** (2.0 * a + 1.0) * float(np.dot(w, (1.0 + d * x / z_cut) ** a))
    return head + tail


# ---------------------------------------------------------------------------
# |u - v|^p pairings of atoms


def exp_power_tail(z0: float, mu: float, p: float) -> float:
    """``int_{z0}^inf y^p exp(-mu (y - z0)) dy`` for ``z0 >= 0``."""
    z = mu * z0
    if z <= 30.0:
        return mu ** (-p - 1.0) * math.exp(z) * gamma(p + 1.0) * float(gammaincc(p + 1.0, z))
    s, w = np.polynomial.laguerre.laggauss(40)
    return float(np.dot(w, (z0 + s / mu) ** p)) / mu


def _pair_profile(a1: ExpIndicatorAtom, a2: ExpIndicatorAtom, x: np.ndarray) -> np.ndarray:
    """``R(x) = int a1(v + x) a2(v) dv`` in closed form."""
    x = np.asarray(x, dtype=float)
    lo = np.maximum(a2.left_end, a1.left_end - x)
    hi = np.minimum(a2.right_end, a1.right_end - x)
    length = hi - lo
    ok = length > 0
    k = a1.decay + a2.decay
    hi_s = np.where(ok, hi, 0.0)
    expo = -a1.decay * np.where(ok, a1.right_end - x - hi_s, 0.0) - a2.decay * np.where(ok, a2.right_end - hi_s, 0.0)
    val = a1.weight * a2.weight * np.exp(expo) * _one_minus_exp_over(k, np.where(ok, length, 0.0))
    return np.where(ok, val, 0.0)


def pair_power_integral(a1: ExpIndicatorAtom, a2: ExpIndicatorAtom, p: float, order: int = 20) -> float:
    """``int int a1(u) a2(v) |u - v|^p du dv`` for ``p > -1``.

    Reduced to ``int |x|^p R(x) dx`` where ``R`` is the closed-form
    cross-correlation of the two atoms. Bounded pieces are integrated with
    Gauss-Jacobi/Gauss-Legendre panels. The tails produced by atoms with
    ``left_end = -inf`` are exactly exponential and use incomplete gamma.
    """
    if p <= -1.0:
        return math.inf
    if a1.weight == 0.0 or a2.weight == 0.0:
        return 0.0
    cand = [a1.left_end - a2.left_end, a1.right_end - a2.right_end,
            a1.left_end - a2.right_end, a1.right_end - a2.left_end, 0.0]
    finite = sorted(c for c in cand if math.isfinite(c))
    x_lo, x_hi = finite[0], finite[-1]
    rates = [a.decay for a in (a1, a2) if a.decay > 0]
    max_width = 4.0 / max(rates) if rates else np.inf
    total = 0.0
    if x_hi > x_lo:
        x, w = power_weighted_rule(x_lo, x_hi, p, 0.0, breakpoints=finite, order=order,
                                   max_width=max_width)
        total += float(np.dot(w, _pair_profile(a1, a2, x)))
    if not a2.bounded:
        # R(x) = R(x_hi) exp(-mu2 (x - x_hi)) for x > x_hi >= 0
        r0 = float(_pair_profile(a1, a2, np.array([x_hi]))[0])
        total += r0 * exp_power_tail(x_hi, a2.decay, p)
    if not a1.bounded:
        r0 = float(_pair_profile(a1, a2, np.array([x_lo]))[0])
        total += r0 * exp_power_tail(-x_lo, a1.decay, p)
    return total


def hh_inner(f: KernelSpec, g: KernelSpec, H: HurstLike) -> float:
    """Inner product ``H(2H-1) int int f(u) g(v) |u-v|^{2H-2} du dv``.

    Parameters
    ----------
    f, g : KernelSpec
    H : float or HurstIndex

    Returns
    -------
    float
        Equal to ``E[(int f dZ)(int g dZ)]`` for the Rosenblatt process.
    """
    h = hurst_value(H)
    p = 2.0 * h - 2.0
    fa, ga = f.nonzero(), g.nonzero()
    if not fa or not ga:
        return 0.0
    if f is g or fa == ga:
        # symmetric sum: visit each unordered pair once
        total = 0.0
        for i, a in enumerate(fa):
            total += pair_power_integral(a, a, p)
            for b in fa[i + 1:]:
                total += 2.0 * pair_power_integral(a, b, p)
    else:
        total = sum(pair_power_integral(a, b, p) for a in fa for b in ga)
    if not math.isfinite(total):
        raise AccuracyError("H-inner product diverged")
    return h * (2.0 * h - 1.0) * total


def hh_norm_abs(f: KernelSpec, H: HurstLike) -> float:
    """``int int |f(u) f(v)| |u-v|^{2H-2} du dv`` without the ``H(2H-1)`` factor.

    Accepts any ``0 < H <= 1`` and returns ``inf`` when the integral
    diverges, which happens for every nonzero ``f`` once ``H <= 1/2``.
    """
    h = float(H)
    if not 0.0 < h <= 1.0:
        raise DomainError(f"H must lie in (0, 1], got {h}")
    atoms = f.abs_atoms()
    if not atoms:
        return 0.0
    p = 2.0 * h - 2.0
    if p <= -1.0:
        return math.inf
    total = 0.0
    for i, a in enumerate(atoms):
        total += pair_power_integral(a, a, p)
        for b in atoms[i + 1:]:
            total += 2.0 * pair_power_integral(a, b, p)
    return max(total, 0.0)


def integral_of_f(f: KernelSpec) -> float:
    """``int f(u) du`` in closed form, summed over atoms."""
    return f.integral()
