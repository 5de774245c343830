"""Concrete fields that functions of the Laplacian act on.

Three representations are supported:

* :class:`GridField` -- periodic samples on a box ``[0, N_i h_i)``; functions
  of the Laplacian are exact Fourier multipliers.
* :class:`PolyField` -- multivariate polynomials; every operator series
  terminates because the Laplacian lowers the degree by two.
* :class:`PlaneWaveField` -- ``A cos(k.x + phase)``, an eigenfunction of the
  Laplacian with eigenvalue ``-|k|^2``.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import MultiplierSingular, OutOfDomain, SeriesConvergenceWarning
from .hyperseries import TruncatedSeries, is_exact

GRDF_MAGIC = b"GRDF"
GRDF_VERSION = 1

# Fourier coefficients below this fraction of the largest one are treated as
# unpopulated roundoff and dropped by multiplier application.
POPULATED_RTOL = 1e-11


# ---------------------------------------------------------------------------
# GridField


@dataclass(frozen=True, eq=False)
class GridField:
    """Periodic samples of a real field; sample i sits at x = i * h."""

    shape: tuple
    spacing: tuple
    data: np.ndarray

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        spacing = tuple(float(h) for h in self.spacing)
        if len(shape) not in (1, 2, 3):
            raise ValueError("grid fields support dimensions 1, 2 and 3")
        if len(spacing) != len(shape):
            raise ValueError("one spacing per axis is required")
        if any(s < 1 for s in shape) or any(not h > 0 for h in spacing):
            raise ValueError("sample counts must be positive and spacings > 0")
        data = np.array(self.data, dtype=float)
        if data.size != int(np.prod(shape)):
            raise ValueError(f"data has {data.size} samples, shape needs {int(np.prod(shape))}")
        data = data.reshape(shape)
        if not np.all(np.isfinite(data)):
            raise ValueError("grid samples must be finite")
        data.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def lengths(self) -> tuple:
        return tuple(n * h for n, h in zip(self.shape, self.spacing))

    @classmethod
    def from_function(cls, func: Callable, shape: Sequence[int], spacing: Sequence[float]):
        """Sample ``func(*coords)`` where coords are broadcast coordinate arrays."""
        coords = grid_coordinates(shape, spacing)
        return cls(tuple(shape), tuple(spacing), np.broadcast_to(func(*coords), tuple(shape)))

    @classmethod
    def on_box(cls, func: Callable, n_points: int, length: float = 2 * np.pi, dim: int = 1):
        return cls.from_function(func, (n_points,) * dim, (length / n_points,) * dim)

    def with_data(self, data) -> "GridField":
        return GridField(self.shape, self.spacing, data)

    def coordinates(self):
        return grid_coordinates(self.shape, self.spacing)

    def _check_compatible(self, other):
        if not isinstance(other, GridField) or other.shape != self.shape or other.spacing != self.spacing:
            raise ValueError("grid fields must share shape and spacing")

    def __add__(self, other):
        self._check_compatible(other)
        return self.with_data(self.data + other.data)

    def __sub__(self, other):
        self._check_compatible(other)
        return self.with_data(self.data - other.data)

    def __mul__(self, c):
        return self.with_data(self.data * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_data(-self.data)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))


def grid_coordinates(shape, spacing):
    axes = [np.arange(n) * h for n, h in zip(shape, spacing)]
    return np.meshgrid(*axes, indexing="ij")


def wavenumbers(n: int, h: float) -> np.ndarray:
    """Standard discrete wavenumbers 2 pi m / (n h), m in the symmetric range."""
    return 2 * np.pi * np.fft.fftfreq(n, d=h)


def _rfft_eigenvalues(shape, spacing) -> np.ndarray:
    """Laplacian eigenvalue -|k|^2 on the rfftn layout."""
    ks = [wavenumbers(n, h) for n, h in zip(shape[:-1], spacing[:-1])]
    ks.append(2 * np.pi * np.fft.rfftfreq(shape[-1], d=spacing[-1]))
    grids = np.meshgrid(*ks, indexing="ij")
    return -sum(k * k for k in grids)


def spectrum(f: GridField):
    """rfftn coefficients and the matching Laplacian eigenvalues."""
    return np.fft.rfftn(f.data), _rfft_eigenvalues(f.shape, f.spacing)


def from_spectrum(template: GridField, coeffs: np.ndarray) -> GridField:
    return template.with_data(np.fft.irfftn(coeffs, s=template.shape, axes=tuple(range(template.dim))))


def populated_mask(coeffs: np.ndarray, rtol: float = POPULATED_RTOL) -> np.ndarray:
    peak = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if peak == 0:
        return np.zeros(coeffs.shape, dtype=bool)
    return np.abs(coeffs) > rtol * peak


def populated_eigenvalues(f: GridField) -> np.ndarray:
    """Distinct eigenvalues -|k|^2 carried by the field above roundoff."""
    coeffs, lam = spectrum(f)
    return np.unique(lam[populated_mask(coeffs)])


# ---------------------------------------------------------------------------
# PolyField


def _clean_coef(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


@dataclass(frozen=True, eq=False)
class PolyField:
    """Polynomial sum_e coef_e * prod_i x_i**e_i; coefficients may be exact."""

    dim: int
    terms: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        terms = {}
        for exp, coef in dict(self.terms).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.dim or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for dimension {self.dim}")
            if coef != 0:
                terms[exp] = terms.get(exp, 0) + coef
        object.__setattr__(self, "terms", {e: _clean_coef(c) for e, c in terms.items() if c != 0})

    @classmethod
    def constant(cls, c, dim: int):
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def norm_squared(cls, dim: int):
        return cls(dim, {tuple(2 if i == j else 0 for j in range(dim)): 1 for i in range(dim)})

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, PolyField):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, tuple(sorted(self.terms.items()))))

    def __add__(self, other):
        if not isinstance(other, PolyField) or other.dim != self.dim:
            raise ValueError("polynomial fields must share dimension")
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return PolyField(self.dim, terms)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, c):
        return PolyField(self.dim, {e: v * c for e, v in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def max_abs(self) -> float:
        """Largest coefficient magnitude; zero exactly when the polynomial is zero."""
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    def laplacian(self) -> "PolyField":
        terms = {}
        for e, c in self.terms.items():
            for i, ei in enumerate(e):
                if ei >= 2:
                    e2 = list(e)
                    e2[i] -= 2
                    e2 = tuple(e2)
                    terms[e2] = terms.get(e2, 0) + c * ei * (ei - 1)
        return PolyField(self.dim, terms)

    def derivative(self, axis: int) -> "PolyField":
        terms = {}
        for e, c in self.terms.items():
            if e[axis] > 0:
                e2 = list(e)
                e2[axis] -= 1
                terms[tuple(e2)] = c * e[axis]
        return PolyField(self.dim, terms)

    def __call__(self, *x):
        return evaluate(self, x)

    def to_json(self) -> str:
        terms = []
        for e, c in sorted(self.terms.items()):
            c = _clean_coef(c)
            terms.append({"exp": list(e), "coef": c if isinstance(c, int) else float(c)})
        return json.dumps({"dim": self.dim, "terms": terms})

    @classmethod
    def from_json(cls, text: str) -> "PolyField":
        obj = json.loads(text)
        terms = {}
        for t in obj["terms"]:
            c = t["coef"]
            if isinstance(c, str):
                c = Fraction(c)
            e = tuple(t["exp"])
            terms[e] = terms.get(e, 0) + c
        return cls(int(obj["dim"]), terms)


# ---------------------------------------------------------------------------
# PlaneWaveField


@dataclass(frozen=True, eq=False)
class PlaneWaveField:
    """amplitude * cos(k . x + phase)."""

    wavevector: tuple
    phase: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "wavevector", tuple(float(k) for k in self.wavevector))

    @property
    def dim(self) -> int:
        return len(self.wavevector)

    @property
    def k_squared(self) -> float:
        return float(sum(k * k for k in self.wavevector))

    def with_amplitude(self, amplitude) -> "PlaneWaveField":
        return PlaneWaveField(self.wavevector, self.phase, amplitude)

    def _check_compatible(self, other):
        if not isinstance(other, PlaneWaveField) or (other.wavevector, other.phase) != (self.wavevector, self.phase):
            raise ValueError("plane waves combine only with the same wavevector and phase")

    def __add__(self, other):
        self._check_compatible(other)
        return self.with_amplitude(self.amplitude + other.amplitude)

    def __sub__(self, other):
        self._check_compatible(other)
        return self.with_amplitude(self.amplitude - other.amplitude)

    def __mul__(self, c):
        return self.with_amplitude(self.amplitude * c)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return abs(float(self.amplitude))


# ---------------------------------------------------------------------------
# Operations


@dataclass(frozen=True)
class SpectralMultiplier:
    """A function psi(lambda) of the Laplacian eigenvalue lambda <= 0.

    ``symbol`` receives a 1-D array of distinct eigenvalues and returns the
    multiplier at each.  With ``allow_singular_dc`` a non-finite value at
    lambda = 0 is tolerated and the constant mode of the output is zero.
    """

    symbol: Callable[[np.ndarray], np.ndarray]
    allow_singular_dc: bool = False


def laplacian(f):
    if isinstance(f, GridField):
        coeffs, lam = spectrum(f)
        return from_spectrum(f, coeffs * lam)
    if isinstance(f, PolyField):
        return f.laplacian()
    if isinstance(f, PlaneWaveField):
        return f.with_amplitude(-f.k_squared * f.amplitude)
    raise TypeError(f"unsupported field type {type(f).__name__}")


def apply_multiplier(f, psi: SpectralMultiplier):
    """Multiply every Fourier coefficient by psi(-|k|^2).

    Only modes carrying more than roundoff are passed to the symbol; the
    remaining ones are set to zero.
    """
    if isinstance(f, PlaneWaveField):
        value = np.asarray(psi.symbol(np.array([-f.k_squared])), dtype=float)[0]
        if not np.isfinite(value):
            raise MultiplierSingular("multiplier is not finite at the plane-wave eigenvalue", k=np.sqrt(f.k_squared))
        return f.with_amplitude(f.amplitude * value)
    if not isinstance(f, GridField):
        raise TypeError("multipliers act on grid fields and plane waves")
    coeffs, lam = spectrum(f)
    mask = populated_mask(coeffs)
    out = np.zeros_like(coeffs)
    if mask.any():
        uniq, inverse = np.unique(lam[mask], return_inverse=True)
        values = np.asarray(psi.symbol(uniq), dtype=float)
        bad = ~np.isfinite(values)
        if psi.allow_singular_dc:
            dc = uniq == 0
            values = np.where(dc, 0.0, values)
            bad &= ~dc
        if bad.any():
            k_bad = float(np.sqrt(-uniq[bad][0]))
            raise MultiplierSingular(f"multiplier is not finite at |k| = {k_bad:g}", k=k_bad)
        out[mask] = coeffs[mask] * values[inverse.ravel()]
    return from_spectrum(f, out)


def apply_series(f, series: TruncatedSeries, scale=1):
    """sum_j c_j scale^j Laplacian^j f.

    Grid fields evaluate the polynomial in the eigenvalue with Horner's rule
    (one transform pair in total); polynomials apply the Laplacian repeatedly
    until it vanishes.
    """
    if isinstance(f, PolyField):
        exact = series.exact and is_exact(scale)
        coeffs = series.coeffs if exact else series.to_float()
        s = scale if exact else float(scale)
        total = PolyField(f.dim)
        term = f
        weight = 1
        for c in coeffs:
            if term.is_zero():
                break
            total = total + term * (c * weight)
            term = term.laplacian()
            weight = weight * s
        return total
    coeffs = np.array(series.to_float())
    s = float(scale)
    if isinstance(f, PlaneWaveField):
        return f.with_amplitude(f.amplitude * np.polynomial.polynomial.polyval(-s * f.k_squared, coeffs))
    if not isinstance(f, GridField):
        raise TypeError(f"unsupported field type {type(f).__name__}")
    spec, lam = spectrum(f)
    mask = populated_mask(spec)
    if mask.any() and series.order > 0:
        t_max = s * float(np.max(-lam[mask]))
        if abs(coeffs[-1]) * t_max**series.order > 1.0:
            warnings.warn(
                f"truncated series of order {series.order} applied at scale*|lambda|max = {t_max:.3g}; "
                "its last term is not small",
                SeriesConvergenceWarning,
                stacklevel=2,
            )
    return from_spectrum(f, spec * np.polynomial.polynomial.polyval(s * lam, coeffs))


def derivative(f: GridField, axis: int = 0, order: int = 1) -> GridField:
    """Spectral derivative along one axis (Nyquist mode dropped for odd orders)."""
    coeffs = np.fft.rfftn(f.data)
    n = f.shape[axis]
    if axis == f.dim - 1:
        k = 2 * np.pi * np.fft.rfftfreq(n, d=f.spacing[axis])
    else:
        k = wavenumbers(n, f.spacing[axis])
    if order % 2 == 1 and n % 2 == 0:
        k = k.copy()
        k[n // 2] = 0.0
    shape = [1] * f.dim
    shape[axis] = -1
    factor = (1j * k.reshape(shape)) ** order
    return from_spectrum(f, coeffs * factor)


def _axis_basis(x: np.ndarray, n: int, h: float) -> np.ndarray:
    """Per-axis trigonometric basis exp(i k_m x); the Nyquist mode uses cos."""
    k = wavenumbers(n, h)
    basis = np.exp(1j * np.outer(x, k))
    if n % 2 == 0:
        basis[:, n // 2] = np.cos(k[n // 2] * x)
    return basis


def _grid_interpolate(f: GridField, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
    coeffs = np.fft.fftn(f.data) / f.data.size
    out = np.empty(len(points))
    for start in range(0, len(points), chunk):
        p = points[start : start + chunk]
        bases = [_axis_basis(p[:, i], n, h) for i, (n, h) in enumerate(zip(f.shape, f.spacing))]
        acc = bases[0] @ coeffs.reshape(f.shape[0], -1)
        for i in range(1, f.dim):
            acc = acc.reshape(len(p), f.shape[i], -1)
            acc = np.einsum("pa...,pa->p...", acc, bases[i])
        out[start : start + chunk] = acc.reshape(len(p)).real
    return out


def evaluate(f, point):
    """Value of a field at a point, or at an array of points with shape (..., n).

    Grid fields are evaluated through their trigonometric interpolant and
    require the point to lie in the closed box ``[0, N_i h_i]``.
    """
    if isinstance(f, PolyField) and all(is_exact(x) for x in np.ravel(np.asarray(point, dtype=object))):
        pt = tuple(point)
        if len(pt) != f.dim:
            raise ValueError("point dimension mismatch")
        total = 0
        for e, c in f.terms.items():
            term = c
            for xi, ei in zip(pt, e):
                term = term * xi**ei
            total = total + term
        return total
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    lead = pts.shape[:-1]
    pts = pts.reshape(-1, pts.shape[-1])
    if pts.shape[1] != f.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, field has {f.dim}")
    if isinstance(f, PolyField):
        vals = np.zeros(len(pts))
        for e, c in f.terms.items():
            vals += float(c) * np.prod(pts ** np.array(e, dtype=float), axis=1)
    elif isinstance(f, PlaneWaveField):
        vals = float(f.amplitude) * np.cos(pts @ np.array(f.wavevector) + f.phase)
    elif isinstance(f, GridField):
        lengths = np.array(f.lengths)
        slack = 1e-12 * lengths
        if np.any(pts < -slack) or np.any(pts > lengths + slack):
            raise OutOfDomain("point outside the periodic box of the grid field")
        vals = _grid_interpolate(f, pts)
    else:
        raise TypeError(f"unsupported field type {type(f).__name__}")
    if single:
        return float(vals[0])
    return vals.reshape(lead)


# ---------------------------------------------------------------------------
# File formats


def write_grdf(path, f: GridField) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_grdf(f))


def encode_grdf(f: GridField) -> bytes:
    parts = [GRDF_MAGIC, struct.pack("<BB", GRDF_VERSION, f.dim)]
    for n, h in zip(f.shape, f.spacing):
        parts.append(struct.pack("<Id", n, h))
    parts.append(np.ascontiguousarray(f.data, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_grdf(buf: bytes) -> GridField:
    if buf[:4] != GRDF_MAGIC:
        raise ValueError("not a GRDF file (bad magic)")
    version, dim = struct.unpack_from("<BB", buf, 4)
    if version != GRDF_VERSION:
        raise ValueError(f"unsupported GRDF version {version}")
    offset = 6
    shape, spacing = [], []
    for _ in range(dim):
        n, h = struct.unpack_from("<Id", buf, offset)
        offset += 12
        shape.append(n)
        spacing.append(h)
    count = int(np.prod(shape))
    if len(buf) - offset != 8 * count:
        raise ValueError("GRDF payload size does not match its header")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=offset)
    return GridField(tuple(shape), tuple(spacing), data.astype(float))


def read_grdf(path) -> GridField:
    with open(path, "rb") as fh:
        return decode_grdf(fh.read())


def read_field(path):
    """Load a GRDF grid or a JSON polynomial, chosen by the file contents."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] == GRDF_MAGIC:
        return decode_grdf(buf)
    return PolyField.from_json(buf.decode("utf-8"))


def write_field(path, f) -> None:
    if isinstance(f, GridField):
        write_grdf(path, f)
    elif isinstance(f, PolyField):
        with open(path, "w") as fh:
            fh.write(f.to_json() + "\n")
    else:
        raise TypeError(f"cannot serialize {type(f).__name__}")
