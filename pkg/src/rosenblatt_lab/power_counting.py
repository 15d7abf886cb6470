"""Power-counting test for integrals of products of powers of affine functionals.

An integrand ``prod_i f_i(M_i(y))`` over ``R^m`` is bounded near zero by
``|y|^{alpha_i}`` and at infinity by ``|y|^{beta_i}``. It is integrable
when

* ``d0(W) = r(W) + sum_{i in W} alpha_i > 0`` for every nonempty
  span-closed ``W``, and
* ``dinf(W) = r(T) - r(W) + sum_{i not in W} beta_i < 0`` for every proper
  span-closed ``W`` (the empty set included).

When all ``alpha_i > -1`` (respectively all ``beta_i >= -1``), checking
padded subsets is enough. Spans and ranks use exact rational arithmetic
on the linear parts of the functionals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Literal, Sequence

from .errors import DomainError

__all__ = [
    "AffineFunctional",
    "FunctionalSet",
    "ExponentAssignment",
    "SubsetReport",
    "IntegrabilityVerdict",
    "ScanResult",
    "rational_rank",
    "span_closure",
    "is_padded",
    "padded_subsets",
    "check_integrability",
    "critical_exponent_scan",
]

Which = Literal["both", "zero", "infinity"]


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12) if x != int(x) else Fraction(int(x))
    return Fraction(x)


@dataclass(frozen=True)
class AffineFunctional:
    """``y -> coefficients . y + offset`` with rational entries."""

    coefficients: tuple
    offset: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        coeffs = tuple(_frac(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "offset", _frac(self.offset))
        if not coeffs:
            raise DomainError("a functional needs at least one coefficient")
        if all(c == 0 for c in coeffs) and self.offset == 0:
            raise DomainError("functional is identically zero")

    @property
    def dimension(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class FunctionalSet:
    """Finite ordered set ``T`` of affine functionals on ``R^m``."""

    functionals: tuple

    def __post_init__(self) -> None:
        fs = tuple(f if isinstance(f, AffineFunctional) else AffineFunctional(tuple(f)) for f in self.functionals)
        if not fs:
            raise DomainError("functional set is empty")
        dims = {f.dimension for f in fs}
        if len(dims) != 1:
            raise DomainError(f"functionals have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "functionals", fs)

    @property
    def dimension(self) -> int:
        return self.functionals[0].dimension

    def __len__(self) -> int:
        return len(self.functionals)

    def vectors(self, W: Iterable[int]) -> list:
        return [self.functionals[i].coefficients for i in W]

    def rank(self, W: Iterable[int] | None = None) -> int:
        idx = range(len(self)) if W is None else W
        return rational_rank(self.vectors(idx))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], offsets: Sequence | None = None) -> "FunctionalSet":
        offsets = offsets or [0] * len(rows)
        return cls(tuple(AffineFunctional(tuple(r), o) for r, o in zip(rows, offsets)))

    @classmethod
    def cyclic(cls, m: int) -> "FunctionalSet":
        """``{u_1 - u_2, u_2 - u_3, ..., u_m - u_1}`` on ``R^m``."""
        if m < 2:
            raise DomainError("cyclic set needs m >= 2")
        rows = []
        for i in range(m):
            r = [0] * m
            r[i] += 1
            r[(i + 1) % m] -= 1
            rows.append(r)
        return cls.from_rows(rows)


def rational_rank(vectors: Sequence[Sequence]) -> int:
    """Rank of a list of rational vectors by fraction-exact Gaussian elimination."""
    rows = [[_frac(x) for x in v] for v in vectors]
    if not rows:
        return 0
    ncol = len(rows[0])
    rank = 0
    for col in range(ncol):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p = rows[rank][col]
        for r in range(rank + 1, len(rows)):
            if rows[r][col] != 0:
                factor = rows[r][col] / p
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def _check_subset(W: Iterable[int], T: FunctionalSet) -> tuple:
    W = tuple(sorted(set(int(i) for i in W)))
    if any(i < 0 or i >= len(T) for i in W):
        raise DomainError(f"subset {W} is not contained in a set of {len(T)} functionals")
    return W


def span_closure(W: Iterable[int], T: FunctionalSet) -> tuple:
    """Indices of the functionals of ``T`` lying in the span of ``W``."""
    W = _check_subset(W, T)
    r = T.rank(W)
    return tuple(i for i in range(len(T)) if i in W or T.rank(W + (i,)) == r)


def is_padded(W: Iterable[int], T: FunctionalSet) -> bool:
    """``W`` is span-closed and each member lies in the span of the others."""
    W = _check_subset(W, T)
    if span_closure(W, T) != W:
        return False
    for i in W:
        rest = tuple(j for j in W if j != i)
        if i not in span_closure(rest, T):
            return False
    return True


def _all_subsets(n: int):
    for k in range(n + 1):
        yield from combinations(range(n), k)


def padded_subsets(T: FunctionalSet) -> list:
    """Every padded subset of ``T`` (the empty set included)."""
    return [W for W in _all_subsets(len(T)) if is_padded(W, T)]


@dataclass(frozen=True)
class ExponentAssignment:
    """Exponents near zero (``alpha``) and at infinity (``beta``), one per functional."""

    alpha: tuple
    beta: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.alpha) != len(self.beta):
            raise DomainError("alpha and beta must have equal length")

    @property
    def alpha_gate(self) -> bool:
        """All ``alpha_i > -1``: padded subsets suffice near zero."""
        return all(a > -1.0 for a in self.alpha)

    @property
    def beta_gate(self) -> bool:
        """All ``beta_i >= -1``: padded subsets suffice at infinity."""
        return all(b >= -1.0 for b in self.beta)


@dataclass(frozen=True)
class SubsetReport:
    subset: tuple
    rank: int
    closure: tuple
    padded: bool
    d0: float | None
    d_inf: float | None


@dataclass(frozen=True)
class IntegrabilityVerdict:
    integrable: bool
    near_zero_ok: bool
    at_infinity_ok: bool
    reports: tuple
    used_padded_shortcut: tuple  # (near zero, at infinity)

    def __bool__(self) -> bool:
        return self.integrable


def check_integrability(T: FunctionalSet, e: ExponentAssignment, which: Which = "both",
                        shortcut: bool = True) -> IntegrabilityVerdict:
    """Power-counting verdict with one report per span-closed subset.

    Every span-closed subset is reported with its ``d0`` and ``d_inf``.
    Only the subsets the verdict needs are checked against the sign
    conditions: padded ones when the exponent gates hold, otherwise all.

    Parameters
    ----------
    T : FunctionalSet
    e : ExponentAssignment
    which : {"both", "zero", "infinity"}
        Which of the two conditions decides the verdict. The other one is
        still reported.
    shortcut : bool
        Restrict to padded subsets when the exponent gates allow it.
    """
    n = len(T)
    if len(e.alpha) != n:
        raise DomainError(f"{len(e.alpha)} exponents given for {n} functionals")
    rT = T.rank()
    zero_pad = shortcut and e.alpha_gate
    inf_pad = shortcut and e.beta_gate
    reports = []
    ok0 = okinf = True
    for W in _all_subsets(n):
        cl = span_closure(W, T)
        if cl != W:
            continue
        padded = is_padded(W, T)
        r = T.rank(W)
        d0 = r + sum(e.alpha[i] for i in W) if W else None
        dinf = rT - r + sum(e.beta[i] for i in range(n) if i not in W) if len(W) < n else None
        if d0 is not None and (padded or not zero_pad):
            ok0 = ok0 and d0 > 0
        if dinf is not None and (padded or not inf_pad):
            okinf = okinf and dinf < 0
        reports.append(SubsetReport(W, r, cl, padded, d0, dinf))
    verdict = {"both": ok0 and okinf, "zero": ok0, "infinity": okinf}[which]
    return IntegrabilityVerdict(verdict, ok0, okinf, tuple(reports), (zero_pad, inf_pad))


@dataclass(frozen=True)
class ScanResult:
    threshold: float | None
    verdict_below: bool
    verdict_above: bool
    monotone: bool
    iterations: int


def critical_exponent_scan(T: FunctionalSet, exponents: Callable[[float], ExponentAssignment],
                           lower: float, upper: float, which: Which = "both",
                           tol: float = 1e-12, max_iter: int = 200) -> ScanResult:
    """Bisection for the parameter value where the verdict flips.

    Parameters
    ----------
    T : FunctionalSet
    exponents : callable
        Map from the scan parameter to an `ExponentAssignment`.
    lower, upper : float
        Scan range.
    which : {"both", "zero", "infinity"}
        Condition that defines the verdict.
    tol : float
        Width of the final bracket.

    Returns
    -------
    ScanResult
        ``threshold`` is ``None`` and ``monotone`` is true when the verdict
        is the same at both ends.
    """
    if not lower < upper:
        raise DomainError("scan needs lower < upper")

    def verdict(x: float) -> bool:
        return check_integrability(T, exponents(x), which).integrable

    lo_v, hi_v = verdict(lower), verdict(upper)
    if lo_v == hi_v:
        return ScanResult(None, lo_v, hi_v, True, 0)
    a, b = lower, upper
    it = 0
    while b - a > tol and it < max_iter:
        mid = 0.5 * (a + b)
        if verdict(mid) == lo_v:
            a = mid
        else:
            b = mid
        it += 1
    return ScanResult(0.5 * (a + b), lo_v, hi_v, False, it)
