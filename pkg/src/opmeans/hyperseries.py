"""Truncated power series with exact rational coefficients.

The mean operators are power series in a single symbol ``t`` (a scaled
Laplacian).  Coefficients are kept as :class:`fractions.Fraction` wherever the
inputs allow so identities between series can be checked exactly; a float
path is used only for non-rational exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import LeadingCoefficientNotOne, PoleParameter, ZeroLeadingCoefficient

DEFAULT_ORDER = 8


def as_rational(x) -> Fraction:
    """Exact rational value of an int, Fraction, decimal string or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite parameter {x!r}")
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def rising(a, j: int):
    """Pochhammer symbol (a)_j."""
    out = Fraction(1) if is_exact(a) else 1.0
    for i in range(j):
        out *= a + i
    return out


def _is_nonpositive_integer(b: Fraction) -> bool:
    return b.denominator == 1 and b <= 0


@dataclass(frozen=True)
class TruncatedSeries:
    """Coefficients c_0..c_N of a power series truncated after t^N."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise ValueError("a truncated series needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def exact(self) -> bool:
        return all(is_exact(c) for c in self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, j):
        return self.coeffs[j]

    def __iter__(self):
        return iter(self.coeffs)

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return convolve(self, other)

    def __eq__(self, other):
        if isinstance(other, TruncatedSeries):
            return self.coeffs == other.coeffs
        if isinstance(other, (list, tuple)):
            return self.coeffs == tuple(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def truncate(self, order: int) -> "TruncatedSeries":
        if order < 0:
            raise ValueError("order must be non-negative")
        if order <= self.order:
            return TruncatedSeries(self.coeffs[: order + 1])
        zero = Fraction(0) if self.exact else 0.0
        return TruncatedSeries(self.coeffs + (zero,) * (order - self.order))

    def scaled(self, s) -> "TruncatedSeries":
        """Series in ``s*t``: coefficient j multiplied by s**j."""
        return TruncatedSeries(tuple(c * s**j for j, c in enumerate(self.coeffs)))

    def to_float(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.coeffs)

    def __call__(self, t):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def to_csv(self) -> str:
        """Rows ``j,numerator,denominator``; float coefficients use their exact ratio."""
        rows = ["j,numerator,denominator"]
        for j, c in enumerate(self.coeffs):
            q = as_rational(c)
            rows.append(f"{j},{q.numerator},{q.denominator}")
        return "\n".join(rows) + "\n"


def identity_series(order: int, exact: bool = True) -> TruncatedSeries:
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    return TruncatedSeries((one,) + (zero,) * order)


def convolve(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated to the smaller of the two orders."""
    order = min(a.order, b.order)
    out = []
    for j in range(order + 1):
        out.append(sum((a[i] * b[j - i] for i in range(1, j + 1)), a[0] * b[j]))
    return TruncatedSeries(tuple(out))


@dataclass(frozen=True)
class HypergeometricSpec:
    """Parameters of pFq(upper; lower; argument_scale * t)."""

    upper: tuple = ()
    lower: tuple = ()
    argument_scale: Fraction = Fraction(1)

    def __post_init__(self):
        upper = tuple(as_rational(a) for a in self.upper)
        lower = tuple(as_rational(b) for b in self.lower)
        for b in lower:
            if _is_nonpositive_integer(b):
                raise PoleParameter(f"lower parameter {b} is a pole of the series")
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "argument_scale", as_rational(self.argument_scale))


def coeffs_pFq(spec: HypergeometricSpec, order: int = DEFAULT_ORDER) -> TruncatedSeries:
    """Exact coefficients s^j prod(a_i)_j / (prod(b_k)_j j!) for j = 0..order."""
    if order < 0:
        raise ValueError("order must be non-negative")
    coeffs = [Fraction(1)]
    c = Fraction(1)
    for j in range(order):
        num = spec.argument_scale
        for a in spec.upper:
            num *= a + j
        den = Fraction(j + 1)
        for b in spec.lower:
            den *= b + j
        c = c * num / den
        coeffs.append(c)
    return TruncatedSeries(tuple(coeffs))


def reciprocal(series: TruncatedSeries) -> TruncatedSeries:
    """Formal multiplicative inverse to the same order."""
    c0 = series[0]
    if c0 == 0:
        raise ZeroLeadingCoefficient("series has a zero constant term")
    inv0 = Fraction(1) / c0 if is_exact(c0) else 1.0 / c0
    out = [inv0]
    for j in range(1, series.order + 1):
        acc = sum(series[i] * out[j - i] for i in range(1, j + 1))
        out.append(-acc * inv0)
    return TruncatedSeries(tuple(out))


def _exact_exponent(m):
    if is_exact(m):
        return Fraction(m)
    if isinstance(m, float) and m.is_integer():
        return Fraction(int(m))
    return None


def real_power(series: TruncatedSeries, m) -> TruncatedSeries:
    """Formal m-th power of a series with constant term 1.

    Uses the recurrence obtained from differentiating P = S^m, i.e.
    S P' = m S' P, which is the coefficient form of exp(m log S):

        p_j = (1/j) * sum_{k=1..j} ((m + 1) k - j) s_k p_{j-k}

    Exact when both the series and m are rational; floating point otherwise.
    """
    if series[0] != 1:
        raise LeadingCoefficientNotOne(f"constant term is {series[0]}, expected 1")
    mq = _exact_exponent(m)
    if mq is not None and series.exact:
        m_val, one = mq, Fraction(1)
        coeffs = series.coeffs
    else:
        m_val, one = float(m), 1.0
        coeffs = series.to_float()
    out = [one]
    for j in range(1, series.order + 1):
        acc = sum(((m_val + 1) * k - j) * coeffs[k] * out[j - k] for k in range(1, j + 1))
        out.append(acc / j)
    return TruncatedSeries(tuple(out))


def gauss2F1_terminating(a, k: int, b, z):
    """2F1(a, -k; b; z) as its finite sum of k + 1 terms.

    Exact when a, b and z are all rational.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    bq = as_rational(b)
    # (b)_j vanishes for some j <= k only when b is in {0, -1, ..., -(k-1)}
    if _is_nonpositive_integer(bq) and -bq < k:
        raise PoleParameter(f"lower parameter {b} meets a pole before the series terminates")
    exact = is_exact(a) and is_exact(b) and is_exact(z)
    if exact:
        a, b, z = Fraction(a), Fraction(b), Fraction(z)
        term, total = Fraction(1), Fraction(1)
    else:
        a, b, z = float(a), float(b), z
        term, total = 1.0, 1.0
    for j in range(k):
        term = term * (a + j) * (-k + j) / ((b + j) * (j + 1)) * z
        total += term
    return total


def sphere_mean_hypergeometric(n: int) -> HypergeometricSpec:
    """0F1(; n/2; t/4) with t = r^2 * Laplacian."""
    return HypergeometricSpec((), (Fraction(n, 2),), Fraction(1, 4))


def addition_series(r1, r2, n: int, terms: int) -> TruncatedSeries:
    """Coefficients (in powers of the Laplacian) of two successive spherical means.

    c_k = r1^(2k) / (4^k k! (n/2)_k) * 2F1(1 - n/2 - k, -k; n/2; (r2/r1)^2)
    """
    if not r1 > 0 or r2 < 0 or r2 > r1:
        raise ValueError("addition formula expects r1 >= r2 >= 0 and r1 > 0")
    exact = is_exact(r1) and is_exact(r2)
    half_n = Fraction(n, 2)
    if exact:
        r1, r2 = Fraction(r1), Fraction(r2)
        z = (r2 / r1) ** 2
    else:
        r1, r2 = float(r1), float(r2)
        z = (r2 / r1) ** 2
    out = []
    for k in range(terms + 1):
        lead = Fraction(1, 4**k * math.factorial(k)) / rising(half_n, k)
        f21 = gauss2F1_terminating(1 - half_n - k, k, half_n, z)
        if exact:
            out.append(lead * r1 ** (2 * k) * f21)
        else:
            out.append(float(lead) * r1 ** (2 * k) * float(f21))
    return TruncatedSeries(tuple(out))


def equal_radius_series(n: int, order: int = DEFAULT_ORDER) -> TruncatedSeries:
    """1F2((n-1)/2; n/2, n-1; t), the square of the sphere operator, in t = r^2 Laplacian.

    For n = 1 the upper (n-1)/2 and lower n-1 parameters both vanish; the
    coefficient uses the limit (eps/2)_j / (eps)_j -> 1/2 for j >= 1.
    """
    if n == 1:
        base = coeffs_pFq(HypergeometricSpec((), (Fraction(1, 2),), 1), order)
        return TruncatedSeries((Fraction(1),) + tuple(c / 2 for c in base.coeffs[1:]))
    spec = HypergeometricSpec((Fraction(n - 1, 2),), (Fraction(n, 2), Fraction(n - 1)), 1)
    return coeffs_pFq(spec, order)

