"""X-ray transform, its direction average and inversion through sqrt(-Laplacian).

Averaging the line integrals X f(x, theta) over all directions gives the
spherical mean integrated over the whole line, whose Fourier symbol is

    Gamma(n/2) / Gamma((n-1)/2) * sqrt(4 pi) / |k|.

Multiplying by the reciprocal symbol recovers f up to its constant mode.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy import fft as sfft

from .errors import SupportClipped
from .field import GridField, SpectralMultiplier, apply_multiplier, evaluate

SUPPORT_RTOL = 1e-12


# ---------------------------------------------------------------------------
# Exact constants.  Gamma at integers and half-integers is a rational times a
# power of sqrt(pi), so the symbol constants are kept in that form and their
# product can be checked without rounding.


@dataclass(frozen=True)
class PiRational:
    """coef * pi**(sqrt_pi_power / 2)."""

    coef: Fraction
    sqrt_pi_power: int = 0

    def __mul__(self, other: "PiRational") -> "PiRational":
        return PiRational(self.coef * other.coef, self.sqrt_pi_power + other.sqrt_pi_power)

    def reciprocal(self) -> "PiRational":
        return PiRational(1 / self.coef, -self.sqrt_pi_power)

    def __float__(self):
        return float(self.coef) * math.pi ** (self.sqrt_pi_power / 2)


def _gamma_half_integer(x: Fraction) -> PiRational:
    if x <= 0:
        raise ValueError("Gamma is evaluated only at positive integers and half-integers")
    if x.denominator == 1:
        return PiRational(Fraction(math.factorial(int(x) - 1)))
    if x.denominator != 2:
        raise ValueError("argument must be an integer or a half-integer")
    m = int(x - Fraction(1, 2))
    # Gamma(m + 1/2) = (2m)! / (4^m m!) sqrt(pi)
    return PiRational(Fraction(math.factorial(2 * m), 4**m * math.factorial(m)), 1)


def average_symbol_constant(n: int) -> PiRational:
    """Gamma(n/2)/Gamma((n-1)/2) sqrt(4 pi): the direction average is this over |k|."""
    if n < 2:
        raise ValueError("the X-ray transform needs n >= 2")
    ratio = _gamma_half_integer(Fraction(n, 2)) * _gamma_half_integer(Fraction(n - 1, 2)).reciprocal()
    return ratio * PiRational(Fraction(2), 1)


def inversion_constant(n: int) -> PiRational:
    """Gamma((n-1)/2)/(sqrt(4 pi) Gamma(n/2)), the factor in front of sqrt(-Laplacian)."""
    if n < 2:
        raise ValueError("the X-ray transform needs n >= 2")
    return _gamma_half_integer(Fraction(n - 1, 2)) * (
        PiRational(Fraction(2), 1) * _gamma_half_integer(Fraction(n, 2))
    ).reciprocal()


def symbol_reciprocity(n: int) -> PiRational:
    """Product of the two constants; equals PiRational(1, 0) exactly."""
    return average_symbol_constant(n) * inversion_constant(n)


def average_symbol(kappa, n: int):
    return float(average_symbol_constant(n)) / np.asarray(kappa, dtype=float)


# ---------------------------------------------------------------------------
# Geometry


@dataclass(frozen=True)
class LineSpec:
    """Segment x + l theta for l in [lmin, lmax], sampled with spacing ~step."""

    base_point: tuple
    direction: tuple
    lmin: float
    lmax: float
    step: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1) > 1e-12:
            raise ValueError("line direction must be a unit vector")
        if not self.lmin < self.lmax:
            raise ValueError("need lmin < lmax")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if len(self.base_point) != len(d):
            raise ValueError("base point and direction differ in dimension")
        object.__setattr__(self, "base_point", tuple(float(v) for v in self.base_point))
        object.__setattr__(self, "direction", tuple(float(v) for v in d))

    @classmethod
    def through_box(cls, f: GridField, point, direction, step=None) -> "LineSpec":
        """Line through ``point`` clipped to the box of ``f``."""
        p = np.asarray(point, dtype=float)
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        lo, hi = -np.inf, np.inf
        for pi, di, L in zip(p, d, f.lengths):
            if abs(di) < 1e-15:
                if not 0 <= pi <= L:
                    raise ValueError("line lies outside the box")
                continue
            a, b = (0 - pi) / di, (L - pi) / di
            lo, hi = max(lo, min(a, b)), min(hi, max(a, b))
        if not lo < hi:
            raise ValueError("line misses the box")
        step = min(f.spacing) if step is None else step
        return cls(tuple(p), tuple(d), float(lo), float(hi), float(step))

    def samples(self):
        count = max(1, math.ceil((self.lmax - self.lmin) / self.step - 1e-9))
        ell = np.linspace(self.lmin, self.lmax, count + 1)
        pts = np.asarray(self.base_point) + ell[:, None] * np.asarray(self.direction)
        return ell, pts


@dataclass(frozen=True)
class DirectionSet:
    """Unit directions with weights summing to one."""

    n: int
    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = np.array(self.directions, dtype=float).reshape(-1, self.n)
        w = np.array(self.weights, dtype=float)
        if len(w) != len(d):
            raise ValueError("one weight per direction")
        if not np.allclose(np.linalg.norm(d, axis=1), 1, atol=1e-12):
            raise ValueError("directions must be unit vectors")
        w = w / w.sum()
        d.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @classmethod
    def uniform_2d(cls, count: int, offset: float = 0.0) -> "DirectionSet":
        """Equally spaced angles on [0, pi); line integrals are even in theta."""
        phi = offset + np.pi * np.arange(count) / count
        return cls(2, np.column_stack([np.cos(phi), np.sin(phi)]), np.full(count, 1.0 / count))

    @classmethod
    def hemisphere_3d(cls, n_mu: int, n_phi: int) -> "DirectionSet":
        """Gauss-Legendre in cos(polar angle) on [0, 1] times uniform azimuth."""
        x, w = np.polynomial.legendre.leggauss(n_mu)
        mu, wmu = (x + 1) / 2, w / 2
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        MU, PHI = np.meshgrid(mu, phi, indexing="ij")
        s = np.sqrt(1 - MU**2)
        dirs = np.column_stack([(s * np.cos(PHI)).ravel(), (s * np.sin(PHI)).ravel(), MU.ravel()])
        return cls(3, dirs, np.repeat(wmu, n_phi) / n_phi)

    @classmethod
    def default(cls, n: int, count: int | None = None) -> "DirectionSet":
        """180 angles in 2D; in 3D about 512 directions (16 x 32), since the
        hemisphere rule needs far more nodes for the same accuracy."""
        if n == 2:
            return cls.uniform_2d(180 if count is None else count)
        if n == 3:
            count = 512 if count is None else count
            n_mu = max(2, int(round(math.sqrt(count / 2))))
            return cls.hemisphere_3d(n_mu, max(4, count // n_mu))
        raise ValueError("direction sets are provided for n = 2 and n = 3")


class DCHandling(str, Enum):
    ZERO_MEAN = "zero-mean"
    PROVIDED_MEAN = "provided-mean"


@dataclass(frozen=True)
class ReconstructionReport:
    gridShape: tuple
    numDirections: int
    relL2Error: float
    maxAbsError: float
    dcHandling: str

    def to_json(self) -> str:
        d = asdict(self)
        d["gridShape"] = list(self.gridShape)
        return json.dumps(d)


# ---------------------------------------------------------------------------
# Transforms


def xray_forward(f, line: LineSpec) -> float:
    """Composite trapezoid of f along the line; grid fields use spectral interpolation."""
    ell, pts = line.samples()
    vals = np.asarray(evaluate(f, pts), dtype=float)
    scale = f.max_abs() if isinstance(f, GridField) else float(np.max(np.abs(vals)))
    if scale > 0 and max(abs(vals[0]), abs(vals[-1])) > SUPPORT_RTOL * scale:
        raise SupportClipped("field is not negligible at the ends of the line")
    return float(np.trapezoid(vals, ell))


def sinogram(f: GridField, dirs: DirectionSet, offsets, step=None):
    """Rows (theta, offset, value) of line integrals across the box centre (n = 2)."""
    if f.dim != 2:
        raise ValueError("sinograms are produced for two-dimensional fields")
    centre = np.asarray(f.lengths) / 2
    rows = []
    for d in dirs.directions:
        theta = math.atan2(d[1], d[0])
        normal = np.array([-d[1], d[0]])
        for s in offsets:
            line = LineSpec.through_box(f, centre + s * normal, d, step)
            rows.append((theta, float(s), xray_forward(f, line)))
    return rows


def _line_multiplier(k_dot, half_length, step, count):
    """Fourier factor of the trapezoid sum over l = -T, -T + step, ..., T."""
    half = k_dot * step / 2
    dirichlet = (count + 1) * np.sinc((count + 1) * half / np.pi) / np.sinc(half / np.pi)
    return step * (dirichlet - np.cos(k_dot * half_length))


def direction_average(f: GridField, dirs: DirectionSet, line_step=None) -> GridField:
    """Weighted average over directions of the line integrals through every grid point.

    Every line is sampled with a trapezoid rule of half-length T equal to the
    box diagonal, which covers the support from any point of the box.  The
    field is zero-padded so those lines never meet a periodic image, and the
    trapezoid sum of shifted copies is applied as one Fourier factor per
    direction.
    """
    n = f.dim
    if dirs.n != n:
        raise ValueError("direction set dimension does not match the field")
    if f.max_abs() == 0:
        return f.with_data(np.zeros(f.shape))
    edge = max(float(np.max(np.abs(np.take(f.data, idx, axis=ax))))
               for ax in range(n) for idx in (0, -1))
    if edge > SUPPORT_RTOL * f.max_abs():
        raise SupportClipped("field does not vanish at the box boundary")
    step = min(f.spacing) if line_step is None else float(line_step)
    diag = math.sqrt(sum(L * L for L in f.lengths))
    count = max(1, math.ceil(2 * diag / step))
    step = 2 * diag / count
    padded = tuple(sfft.next_fast_len(math.ceil((L + diag) / h) + 1, real=True)
                   for L, h in zip(f.lengths, f.spacing))
    buf = np.zeros(padded)
    buf[tuple(slice(0, s) for s in f.shape)] = f.data
    coeffs = sfft.rfftn(buf)
    ks = [2 * np.pi * np.fft.fftfreq(p, d=h) for p, h in zip(padded[:-1], f.spacing[:-1])]
    ks.append(2 * np.pi * np.fft.rfftfreq(padded[-1], d=f.spacing[-1]))
    kgrid = np.meshgrid(*ks, indexing="ij", sparse=True)
    multiplier = np.zeros(coeffs.shape)
    for d, w in zip(dirs.directions, dirs.weights):
        k_dot = sum(kc * dc for kc, dc in zip(kgrid, d))
        multiplier += w * _line_multiplier(k_dot, diag, step, count)
    out = sfft.irfftn(coeffs * multiplier, s=padded, axes=tuple(range(len(padded))))
    return f.with_data(out[tuple(slice(0, s) for s in f.shape)])


def riesz_inverse(avg: GridField, n: int | None = None, dc: DCHandling = DCHandling.ZERO_MEAN,
                  mean_value: float | None = None) -> GridField:
    """Apply c_n sqrt(-Laplacian); the constant mode is then set per ``dc``."""
    n = avg.dim if n is None else n
    c = float(inversion_constant(n))
    out = apply_multiplier(avg, SpectralMultiplier(lambda lam: c * np.sqrt(-lam)))
    out = out.with_data(out.data - out.data.mean())
    dc = DCHandling(dc)
    if dc is DCHandling.PROVIDED_MEAN:
        if mean_value is None:
            raise ValueError("provided-mean handling needs mean_value")
        out = out.with_data(out.data + float(mean_value))
    return out


def reconstruct(f: GridField, dirs: DirectionSet, line_step=None, dc: DCHandling = DCHandling.ZERO_MEAN,
                mean_value: float | None = None):
    """Forward, average and invert; returns the reconstruction and its error report."""
    avg = direction_average(f, dirs, line_step)
    rec = riesz_inverse(avg, f.dim, dc, mean_value)
    diff = rec.data - f.data
    norm = float(np.linalg.norm(f.data))
    rel = float(np.linalg.norm(diff)) / norm if norm > 0 else float(np.linalg.norm(diff))
    report = ReconstructionReport(f.shape, len(dirs), rel, float(np.max(np.abs(diff))), DCHandling(dc).value)
    return rec, report


def difference_of_gaussians(n_points: int, length: float = 1.0, dim: int = 2,
                            sigma_inner: float = 0.04, sigma_outer: float = 0.06) -> GridField:
    """Concentric zero-mean phantom: two opposite-sign Gaussians of equal mass.

    Being radially symmetric with zero mass its direction average falls off
    like |x|^-(n+1), so truncating it at the box edge costs little.
    """
    c = length / 2

    def phantom(*xs):
        r2 = sum((x - c) ** 2 for x in xs)
        inner = np.exp(-r2 / (2 * sigma_inner**2)) / sigma_inner**dim
        outer = np.exp(-r2 / (2 * sigma_outer**2)) / sigma_outer**dim
        return inner - outer

    return GridField.on_box(phantom, n_points, length, dim)
