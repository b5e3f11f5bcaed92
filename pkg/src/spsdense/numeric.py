"""Certified arithmetic on rational powers m**c.

Every real quantity handled here has the shape ``coeff * m**e`` with ``coeff``
and ``e`` exact rationals and ``m`` a positive integer.  Such a number is
rational exactly when ``m**a`` is a perfect ``b``-th power (``e = a/b``), and
``floor(coeff * m**e * 2**k)`` is an exact integer computation via integer
roots.  Enclosures built on top of that never depend on floating point.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Union

import gmpy2
import mpmath

Rational = Union[int, Fraction]

DEFAULT_START_BITS = 64
DEFAULT_CAP_BITS = int(os.environ.get("SPSDENSE_PRECISION_CAP", "16384"))
_cap_bits = DEFAULT_CAP_BITS


def precision_cap() -> int:
    return _cap_bits


def set_precision_cap(bits: int) -> None:
    """Process-wide ceiling for refinement loops (bits of the fractional part)."""
    global _cap_bits
    if bits < DEFAULT_START_BITS:
        raise DomainError(f"precision cap must be >= {DEFAULT_START_BITS} bits")
    _cap_bits = int(bits)


class DomainError(ValueError):
    """Invalid mathematical input (bad exponent, index out of range, ...)."""


class BudgetExceeded(RuntimeError):
    """A resource budget (precision, factorization, enumeration) ran out."""


class PrecisionExhausted(BudgetExceeded):
    """Refinement hit the precision cap without deciding the question."""

    def __init__(self, what: str, bits: int):
        super().__init__(f"needs rationality check: {what} undecided at {bits} bits")
        self.what = what
        self.bits = bits


# ---------------------------------------------------------------------------
# The exponent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentC:
    """A non-integral rational exponent c = numerator/denominator > 1."""

    numerator: int
    denominator: int

    def __post_init__(self):
        n, d = int(self.numerator), int(self.denominator)
        if d <= 0:
            raise DomainError("denominator must be positive")
        g = math.gcd(n, d)
        n, d = n // g, d // g
        if d == 1:
            raise DomainError(f"c = {n} is an integer; only non-integral c is supported")
        if n <= d:
            raise DomainError(f"c = {n}/{d} must exceed 1")
        object.__setattr__(self, "numerator", n)
        object.__setattr__(self, "denominator", d)

    @classmethod
    def parse(cls, text: str) -> "ExponentC":
        """Parse ``"n/d"`` (or a finite decimal such as ``"1.5"``)."""
        try:
            value = Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"malformed exponent {text!r}") from exc
        return cls(value.numerator, value.denominator)

    @classmethod
    def of(cls, value: "ExponentC | Rational | str") -> "ExponentC":
        if isinstance(value, ExponentC):
            return value
        if isinstance(value, str):
            return cls.parse(value)
        value = Fraction(value)
        return cls(value.numerator, value.denominator)

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    @property
    def floor_c(self) -> int:
        return self.numerator // self.denominator

    @property
    def frac_c(self) -> Fraction:
        return self.value - self.floor_c

    @property
    def dist_c(self) -> Fraction:
        """Distance from c to the nearest integer."""
        return min(self.frac_c, 1 - self.frac_c)

    @property
    def dimension(self) -> int:
        """Number of Taylor coefficients used, floor(c) + 1."""
        return self.floor_c + 1

    def theta_mp(self, dps: int = 50) -> mpmath.mpf:
        with mpmath.workdps(dps):
            c = mpmath.mpf(self.numerator) / self.denominator
            d = mpmath.mpf(self.dist_c.numerator) / self.dist_c.denominator
            return +(mpmath.power(2, -(c + 2)) * d)

    def beta_mp(self, dps: int = 50) -> mpmath.mpf:
        with mpmath.workdps(dps):
            c = mpmath.mpf(self.numerator) / self.denominator
            d = mpmath.mpf(self.dist_c.numerator) / self.dist_c.denominator
            return +(mpmath.power(2, c + 2) * (c + 2) ** 2 / d)

    @cached_property
    def theta(self) -> float:
        return float(self.theta_mp())

    @cached_property
    def beta(self) -> float:
        return float(self.beta_mp())

    def to_dict(self) -> dict:
        return {
            "c": str(self),
            "floor_c": self.floor_c,
            "frac_c": str(self.frac_c),
            "dist_c": str(self.dist_c),
            "theta": self.theta,
            "beta": self.beta,
        }


# ---------------------------------------------------------------------------
# Exact integer kernels
# ---------------------------------------------------------------------------


def iroot(x: int, k: int) -> tuple[int, bool]:
    """Return ``(floor(x ** (1/k)), exact)`` for ``x >= 0``."""
    if x < 0:
        raise DomainError("iroot of a negative number")
    if k == 1:
        return x, True
    if k == 2:
        r = math.isqrt(x)
        return r, r * r == x
    r, exact = gmpy2.iroot(x, k)
    return int(r), bool(exact)


def floor_power_int(m: int, c: ExponentC) -> int:
    """floor(m**c) as a plain int (hot-loop variant of :func:`floor_pow`)."""
    return iroot(m ** c.numerator, c.denominator)[0]


def rational_power(m: int, e: Fraction) -> Fraction | None:
    """m**e when it is rational, else None (decided algebraically)."""
    e = Fraction(e)
    a, b = e.numerator, e.denominator
    if a >= 0:
        root, exact = iroot(m**a, b)
        return Fraction(root) if exact else None
    root, exact = iroot(m ** (-a), b)
    return Fraction(1, root) if exact else None


def floor_scaled(coeff: Rational, m: int, e: Fraction, bits: int) -> int:
    """floor(coeff * m**e * 2**bits) for a non-negative exponent ``e``."""
    coeff = Fraction(coeff)
    e = Fraction(e)
    if e < 0:
        raise DomainError("floor_scaled needs a non-negative exponent")
    if m < 1:
        raise DomainError("base must be a positive integer")
    if coeff == 0:
        return 0
    p, q = abs(coeff.numerator), coeff.denominator
    a, b = e.numerator, e.denominator
    root, exact = iroot(p**b * m**a << (bits * b), b)
    fl, rem = divmod(root, q)
    if coeff > 0:
        return fl
    # -x floors to -ceil(x)
    return -fl if (exact and rem == 0) else -fl - 1


# ---------------------------------------------------------------------------
# Enclosures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Enclosure:
    """Closed interval [lo, hi] with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    @classmethod
    def point(cls, x: Rational) -> "Enclosure":
        x = Fraction(x)
        return cls(x, x)

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def __add__(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(self.lo - other.hi, self.hi - other.lo)

    def scale(self, k: Rational) -> "Enclosure":
        k = Fraction(k)
        a, b = self.lo * k, self.hi * k
        return Enclosure(min(a, b), max(a, b))

    def to_dict(self) -> dict:
        return {
            "lo": str(self.lo),
            "hi": str(self.hi),
            "lo_float": float(self.lo),
            "hi_float": float(self.hi),
            "exact": self.exact,
        }


def _bits_for(tol) -> int:
    tol = Fraction(tol)
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    # 2**-bits <= tol
    return max(1, math.ceil(1 / tol).bit_length())


def enclose_power(coeff: Rational, m: int, e: Rational, bits: int = DEFAULT_START_BITS) -> Enclosure:
    """Enclosure of ``coeff * m**e`` of width at most ``|coeff|``-scaled 2**-bits.

    Rational values come back as exact points.  Negative exponents are
    handled through the reciprocal with outward rounding.
    """
    coeff, e = Fraction(coeff), Fraction(e)
    exact = rational_power(m, e)
    if exact is not None:
        return Enclosure.point(coeff * exact)
    if e < 0:
        # m**-e <= 1, so inverting does not widen the enclosure
        inner = enclose_power(1, m, -e, bits)
        return Enclosure(1 / inner.hi, 1 / inner.lo).scale(coeff)
    f = floor_scaled(coeff, m, e, bits)
    return Enclosure(Fraction(f, 1 << bits), Fraction(f + 1, 1 << bits))


def frac_scaled(
    coeff: Rational,
    m: int,
    exponent: Rational,
    R: int = 1,
    tol: Rational = Fraction(1, 1 << DEFAULT_START_BITS),
    *,
    start_bits: int = DEFAULT_START_BITS,
    cap_bits: int | None = None,
) -> Enclosure:
    """Enclosure of the fractional part of ``coeff * m**exponent / R``.

    The width is at most ``tol``; rational quantities give an exact point.
    Precision doubles while the enclosure touches an integer.
    """
    cap_bits = cap_bits or _cap_bits
    if R < 1:
        raise DomainError("modulus must be positive")
    exponent = Fraction(exponent)
    if exponent < 0:
        raise DomainError("exponent must be non-negative")
    scaled = Fraction(coeff) / R
    exact = rational_power(m, exponent)
    if exact is not None:
        x = scaled * exact
        return Enclosure.point(x - math.floor(x))
    bits = max(start_bits, _bits_for(tol))
    while True:
        f = floor_scaled(scaled, m, exponent, bits)
        low = f & ((1 << bits) - 1)
        if low + 1 < (1 << bits):
            return Enclosure(Fraction(low, 1 << bits), Fraction(low + 1, 1 << bits))
        if bits >= cap_bits:
            raise PrecisionExhausted(f"frac({scaled}*{m}^{exponent})", bits)
        bits = min(2 * bits, cap_bits)


class WindowStatus(Enum):
    """Where a value sits relative to a half-open window [a, b)."""

    INSIDE = "inside"
    OUTSIDE = "outside"
    AT_LOWER = "exact-lower-endpoint"  # x == a, counts as inside
    AT_UPPER = "exact-upper-endpoint"  # x == b, counts as outside

    @property
    def accepted(self) -> bool:
        return self in (WindowStatus.INSIDE, WindowStatus.AT_LOWER)


def locate(enc: Enclosure, a: Fraction, b: Fraction) -> WindowStatus | None:
    """Conservative placement of an enclosed value in [a, b); None means refine."""
    if enc.exact:
        x = enc.lo
        if x == a:
            return WindowStatus.AT_LOWER if a < b else WindowStatus.OUTSIDE
        if x == b:
            return WindowStatus.AT_UPPER
        return WindowStatus.INSIDE if a < x < b else WindowStatus.OUTSIDE
    if a <= enc.lo and enc.hi < b:
        return WindowStatus.INSIDE
    if enc.hi < a or enc.lo >= b:
        return WindowStatus.OUTSIDE
    return None


def frac_in_window(
    coeff: Rational,
    m: int,
    exponent: Rational,
    R: int,
    a: Rational,
    b: Rational,
    *,
    start_bits: int = DEFAULT_START_BITS,
    cap_bits: int | None = None,
) -> WindowStatus:
    """Decide ``{coeff * m**exponent / R} in [a, b)`` by refinement."""
    cap_bits = cap_bits or _cap_bits
    a, b = Fraction(a), Fraction(b)
    bits = start_bits
    while True:
        enc = frac_scaled(coeff, m, exponent, R, Fraction(1, 1 << bits), start_bits=bits, cap_bits=cap_bits)
        status = locate(enc, a, b)
        if status is not None:
            return status
        if bits >= cap_bits:
            raise PrecisionExhausted(f"window [{a}, {b}) for frac({coeff}*{m}^{exponent}/{R})", bits)
        bits = min(2 * bits, cap_bits)


def frac_below(coeff: Rational, m: int, exponent: Rational, u: Rational, **kw) -> bool:
    """Exact decision of ``{coeff * m**exponent} < u`` for u in (0, 1]."""
    return frac_in_window(coeff, m, exponent, 1, 0, u, **kw).accepted


# ---------------------------------------------------------------------------
# Floors of powers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FloorPowerResult:
    m: int
    c: ExponentC
    floor_value: int
    frac_enclosure: Enclosure
    exact_integer: bool

    def certify(self) -> bool:
        """Big-integer check floor**d <= m**n < (floor + 1)**d."""
        n, d = self.c.numerator, self.c.denominator
        target = self.m**n
        return self.floor_value**d <= target < (self.floor_value + 1) ** d

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "c": str(self.c),
            "floor_value": self.floor_value,
            "frac_enclosure": self.frac_enclosure.to_dict(),
            "exact_integer": self.exact_integer,
        }


def floor_pow(m: int, c: ExponentC, tol: Rational = Fraction(1, 1 << DEFAULT_START_BITS)) -> FloorPowerResult:
    """Certified floor(m**c) together with an enclosure of {m**c}."""
    if m < 1:
        raise DomainError("m must be a positive integer")
    c = ExponentC.of(c)
    floor_value, exact = iroot(m**c.numerator, c.denominator)
    frac = Enclosure.point(0) if exact else frac_scaled(1, m, c.value, 1, tol)
    return FloorPowerResult(m, c, floor_value, frac, exact)


# ---------------------------------------------------------------------------
# Taylor data
# ---------------------------------------------------------------------------


def gamma_coeff(c: ExponentC, ell: int) -> Fraction:
    """Generalised binomial coefficient c(c-1)...(c-ell+1)/ell!."""
    c = ExponentC.of(c)
    if ell < 0 or ell > c.floor_c:
        raise DomainError(f"ell must lie in [0, {c.floor_c}] for c = {c}")
    out = Fraction(1)
    for j in range(ell):
        out = out * (c.value - j) / (j + 1)
    return out


def gamma_list(c: ExponentC) -> list[Fraction]:
    c = ExponentC.of(c)
    return [gamma_coeff(c, ell) for ell in range(c.floor_c + 1)]


@dataclass(frozen=True)
class TaylorCoefficients:
    c: ExponentC
    gamma: tuple[Fraction, ...]

    @classmethod
    def of(cls, c: ExponentC) -> "TaylorCoefficients":
        c = ExponentC.of(c)
        return cls(c, tuple(gamma_list(c)))

    def remainder_bound(self, m: int, h: int, bits: int = DEFAULT_START_BITS) -> Enclosure:
        """Enclosure of h**(floor(c)+1) * m**({c}-1)."""
        if h == 0:
            return Enclosure.point(0)
        return enclose_power(h ** (self.c.floor_c + 1), m, self.c.frac_c - 1, bits)


@dataclass(frozen=True)
class TaylorExpansion:
    m: int
    h: int
    c: ExponentC
    polynomial_part: Enclosure
    remainder_bound: Enclosure


def taylor_expand(m: int, h: int, c: ExponentC, bits: int = DEFAULT_START_BITS) -> TaylorExpansion:
    """Enclose sum_{l <= floor(c)} gamma_l h**l m**(c-l) and the remainder bound."""
    if m < 1 or h < 0:
        raise DomainError("need m >= 1 and h >= 0")
    coeffs = TaylorCoefficients.of(c)
    c = coeffs.c
    poly = Enclosure.point(0)
    for ell, g in enumerate(coeffs.gamma):
        if h == 0 and ell > 0:
            break
        poly = poly + enclose_power(g * h**ell, m, c.value - ell, bits)
    return TaylorExpansion(m, h, c, poly, coeffs.remainder_bound(m, h, bits))


def check_taylor_remainder(
    m: int, h: int, c: ExponentC, *, start_bits: int = DEFAULT_START_BITS, cap_bits: int | None = None
) -> bool:
    """Decide 0 <= (m+h)**c - polynomial_part <= h**(floor(c)+1) m**({c}-1).

    Returns False only when an enclosure proves a violation.
    """
    c = ExponentC.of(c)
    if h == 0:
        # both sides are exactly zero; no enclosure can separate them
        return True
    cap_bits = cap_bits or _cap_bits
    bits = start_bits
    while True:
        tx = taylor_expand(m, h, c, bits)
        full = enclose_power(1, m + h, c.value, bits)
        diff = full - tx.polynomial_part
        bound = tx.remainder_bound
        if diff.hi < 0 or diff.lo > bound.hi:
            return False
        if diff.lo >= 0 and diff.hi <= bound.lo:
            return True
        if bits >= cap_bits:
            raise PrecisionExhausted(f"Taylor remainder at m={m}, h={h}", bits)
        bits = min(2 * bits, cap_bits)


# ---------------------------------------------------------------------------
# Elementary floor / fraction relations on exact rationals
# ---------------------------------------------------------------------------


def frac(x: Rational) -> Fraction:
    x = Fraction(x)
    return x - math.floor(x)


def dist_to_int(x: Rational) -> Fraction:
    f = frac(x)
    return min(f, 1 - f)


def congfrac_window(x: Rational, R: int, r: int, u: Rational) -> bool:
    """True when {x/R} lies in [r/R, (r+u)/R)."""
    y = frac(Fraction(x) / R)
    return Fraction(r, R) <= y < Fraction(r, R) + Fraction(u) / R
