"""Certified summation of regularly varying series.

Every infinite sum in the library has the form

    sum_{s >= start} coef * s**(-q) * ln(e + s)**lam * exp(-c * s)

and is returned as a :class:`Bracket` ``[lower, upper]`` that contains the
exact value. The head of the series is summed directly with ``math.fsum``;
the remainder is enclosed either by a geometric bound (``c > 0``) or by the
midpoint/trapezoid integral bracket valid for convex decreasing summands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import NumericError, RegimeError

EPS = np.finfo(float).eps

# Largest number of terms summed directly before switching to integrals.
MAX_DIRECT = 1 << 22
# Relative rounding allowance for an fsum of exp(log-term) values.
ROUNDING = 64 * EPS
# First index from which the summand is treated as convex.
CONVEX_START = 1024


@dataclass(frozen=True)
class Bracket:
    """Closed interval certified to contain a real quantity."""

    lower: float
    upper: float

    def __post_init__(self):
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not self.lower <= self.upper:
            raise NumericError(f"invalid bracket [{self.lower}, {self.upper}]")

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def error(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @classmethod
    def exact(cls, x: float, rel: float = 4 * EPS) -> "Bracket":
        """Point value widened by a few ulps of rounding."""
        pad = rel * abs(x)
        return cls(x - pad, x + pad)

    def __add__(self, other: "Bracket | float") -> "Bracket":
        if isinstance(other, Bracket):
            lo, hi = self.lower + other.lower, self.upper + other.upper
        else:
            lo, hi = self.lower + other, self.upper + other
        pad = 2 * EPS * max(abs(lo), abs(hi))
        return Bracket(lo - pad, hi + pad)

    __radd__ = __add__

    def scale(self, k: float) -> "Bracket":
        lo, hi = sorted((k * self.lower, k * self.upper))
        pad = EPS * max(abs(lo), abs(hi))
        return Bracket(lo - pad, hi + pad)

    def __truediv__(self, other: "Bracket") -> "Bracket":
        if other.lower <= 0:
            raise NumericError("division by a bracket that is not strictly positive")
        cands = [self.lower / other.lower, self.lower / other.upper,
                 self.upper / other.lower, self.upper / other.upper]
        lo, hi = min(cands), max(cands)
        pad = 2 * EPS * max(abs(lo), abs(hi))
        return Bracket(lo - pad, hi + pad)

    def __contains__(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def converges(q: float, lam: float, c: float) -> bool:
    """Whether ``sum s^-q ln(e+s)^lam e^{-cs}`` is finite."""
    if c > 0:
        return True
    if c < 0:
        return False
    return q > 1 or (q == 1 and lam < -1)


def _terms(s: np.ndarray, q: float, lam: float, c: float) -> np.ndarray:
    logt = -q * np.log(s)
    if lam:
        logt = logt + lam * np.log(np.log(np.e + s))
    if c:
        logt = logt - c * s
    return np.exp(logt)


def _term(s: float, q: float, lam: float, c: float) -> float:
    return math.exp(-q * math.log(s) + lam * math.log(math.log(math.e + s)) - c * s)


def tail_integral(a: float, q: float, lam: float, c: float) -> tuple[float, float]:
    """``int_a^inf x^-q ln(e+x)^lam e^{-cx} dx`` and its quadrature error.

    Integrated in ``y = ln(x / a)`` so that slowly decaying log-corrected
    tails stay well conditioned.
    """
    la = math.log(a)

    def f(y):
        lx = la + y
        big = lx + math.log1p(math.e * math.exp(-lx))
        if c > 0:
            if lx > 700:
                return 0.0
            cx = c * math.exp(lx)
            if cx > 745:
                return 0.0
        else:
            cx = 0.0
        return math.exp((1.0 - q) * lx + lam * math.log(big) - cx)

    val, err = quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    return val, err + 1e-13 * abs(val)


def power_log_sum(start: int, q: float, lam: float = 0.0, c: float = 0.0,
                  coef: float = 1.0, rtol: float = 1e-13) -> Bracket:
    """Certified value of ``coef * sum_{s>=start} s^-q ln(e+s)^lam e^{-cs}``.

    Parameters
    ----------
    start : int
        First summation index, ``>= 1``.
    q, lam : float
        Power and log-power of the summand.
    c : float
        Exponential tilt, ``>= 0``.
    coef : float
        Positive multiplicative constant.
    rtol : float
        Target relative width of the returned bracket. The bracket is always
        valid; ``rtol`` only controls how hard the routine tries to shrink it.
    """
    if start < 1:
        raise ValueError("start must be >= 1")
    if coef < 0:
        raise ValueError("coef must be nonnegative")
    if not converges(q, lam, c):
        raise RegimeError(f"series s^-{q} ln(e+s)^{lam} e^(-{c}s) diverges")
    if coef == 0:
        return Bracket(0.0, 0.0)

    if c > 0:
        # Geometric remainder: after n terms the summand has dropped by e^{-cn}.
        n_geo = int(math.ceil(40.0 / c)) + 16
        if n_geo <= MAX_DIRECT:
            return _geometric_sum(start, n_geo, q, lam, c, coef)
    return _convex_sum(start, q, lam, c, coef, rtol)


def _geometric_sum(start, n, q, lam, c, coef) -> Bracket:
    s = np.arange(start, start + n, dtype=float)
    head = math.fsum(_terms(s, q, lam, c))
    nxt = start + n
    ratio = math.exp(-c)
    if lam > 0:
        ratio *= (math.log(math.e + nxt + 1) / math.log(math.e + nxt)) ** lam
    if q < 0:
        ratio *= ((nxt + 1) / nxt) ** (-q)
    if ratio >= 1:
        # Summand not yet decreasing geometrically; fall back to integrals.
        return _convex_sum(start, q, lam, c, coef, 1e-13)
    first = _term(nxt, q, lam, c)
    rounding = ROUNDING * head
    lo = head - rounding + first
    hi = head + rounding + first / (1 - ratio)
    return Bracket(coef * lo, coef * hi)


def _convex_sum(start, q, lam, c, coef, rtol) -> Bracket:
    n_end = max(start + CONVEX_START, 4 * CONVEX_START)
    while True:
        s = np.arange(start, n_end + 1, dtype=float)
        head = math.fsum(_terms(s, q, lam, c))
        nxt = n_end + 1
        # Sum over s >= nxt: trapezoid rule overestimates a convex integral,
        # midpoint rule underestimates it.
        i_mid, e_mid = tail_integral(nxt - 0.5, q, lam, c)
        i_trap, e_trap = tail_integral(nxt, q, lam, c)
        lo_tail = i_trap - e_trap + 0.5 * _term(nxt, q, lam, c)
        hi_tail = i_mid + e_mid
        rounding = ROUNDING * head
        lo = head - rounding + lo_tail
        hi = head + rounding + hi_tail
        if hi - lo <= rtol * hi or n_end >= MAX_DIRECT:
            return Bracket(coef * lo, coef * hi)
        n_end *= 4
