"""Gamma and Beta functions from a Lanczos approximation.

Accurate to roughly 1e-15 relative for positive real arguments. Negative
non-integer arguments go through the reflection formula.
"""

from __future__ import annotations

import math

from .errors import DomainError

_G = 7.0
_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_sum(z: float) -> float:
    # z is the shifted argument x - 1 with x >= 1/2
    acc = _COEFFS[0]
    for k, c in enumerate(_COEFFS[1:], start=1):
        acc += c / (z + k)
    return acc


def log_gamma(x: float) -> float:
    """Natural logarithm of ``|Gamma(x)|``.

    Parameters
    ----------
    x : float
        Argument; must not be a non-positive integer.

    Returns
    -------
    float
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"Gamma has a pole at {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.log(math.pi / abs(math.sin(math.pi * x))) - log_gamma(1.0 - x)
    z = x - 1.0
    t = z + _G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma(x: float) -> float:
    """Euler Gamma function.

    Parameters
    ----------
    x : float
        Argument; must not be a non-positive integer.

    Returns
    -------
    float
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"Gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    if x > 171.6:
        return math.inf
    z = x - 1.0
    t = z + _G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * _lanczos_sum(z)


def beta(p: float, q: float) -> float:
    """Euler Beta function ``B(p, q) = Gamma(p) Gamma(q) / Gamma(p + q)``.

    Parameters
    ----------
    p, q : float
        Positive arguments.

    Returns
    -------
    float
    """
    if p <= 0 or q <= 0:
        raise DomainError(f"beta requires positive arguments, got ({p}, {q})")
    return math.exp(log_gamma(p) + log_gamma(q) - log_gamma(p + q))

