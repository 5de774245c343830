"""Mean operators as functions of the Laplacian.

Each mean is available in two modes:

``series``
    the truncated hypergeometric series in ``r^2 * Laplacian`` (exact on
    polynomials, asymptotic for small ``r`` otherwise);
``spectral``
    the exact Fourier multiplier, i.e. the series summed in closed form at
    ``lambda = -|k|^2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import BandLimitExceeded, MultiplierSingular, NonGridSpectral
from .field import (
    GridField,
    PlaneWaveField,
    PolyField,
    SpectralMultiplier,
    apply_multiplier,
    apply_series,
    laplacian,
    populated_eigenvalues,
)
from .hyperseries import (
    DEFAULT_ORDER,
    HypergeometricSpec,
    TruncatedSeries,
    addition_series,
    as_rational,
    coeffs_pFq,
    equal_radius_series,
    is_exact,
    real_power,
)

SYMBOL_GUARD = 1e-9
KERNELS = ("sphere", "ball", "bell", "triangular")


def sphere_area(n: int) -> float:
    """Surface area 2 pi^(n/2) / Gamma(n/2) of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def confluent_limit_symbol(b, rho) -> np.ndarray:
    """0F1(; b; -rho^2/4) = Gamma(b) (2/rho)^(b-1) J_{b-1}(rho) for rho >= 0."""
    b = float(b)
    rho = np.abs(np.asarray(rho, dtype=float))
    if b == 0.5:
        return np.cos(rho)
    if b == 1.0:
        return special.j0(rho)
    if b == 1.5:
        return np.sinc(rho / np.pi)
    out = np.empty_like(rho)
    small = rho < 2.0
    if small.any():
        x = -0.25 * rho[small] ** 2
        terms = [np.ones_like(x)]
        for j in range(40):
            terms.append(terms[-1] * x / ((b + j) * (j + 1)))
        # terms decrease monotonically here; add smallest first
        out[small] = np.sum(terms[::-1], axis=0)
    big = ~small
    if big.any():
        nu = b - 1
        r = rho[big]
        out[big] = np.exp(special.gammaln(b) + nu * np.log(2 / r)) * special.jv(nu, r)
    return out


@dataclass(frozen=True)
class KernelSpec:
    """Radial weight K(u) on the unit ball.

    sphere: K = delta(|u| - 1); ball: K = 1; bell: (1 - |u|^2)^alpha;
    triangular: (1 - |u|)^alpha.
    """

    variant: str = "sphere"
    alpha: float = 0.0

    def __post_init__(self):
        if self.variant not in KERNELS:
            raise ValueError(f"unknown kernel {self.variant!r}; choose from {KERNELS}")
        if self.variant in ("bell", "triangular") and not self.alpha > -1:
            raise ValueError("kernel exponent alpha must exceed -1")

    @classmethod
    def sphere(cls):
        return cls("sphere")

    @classmethod
    def ball(cls):
        return cls("ball")

    @classmethod
    def bell(cls, alpha):
        return cls("bell", alpha)

    @classmethod
    def triangular(cls, alpha):
        return cls("triangular", alpha)

    @property
    def endpoint_exponent(self) -> float:
        """Power of (1 - u) in K near u = 1."""
        return float(self.alpha) if self.variant in ("bell", "triangular") else 0.0

    def weight(self, u):
        u = np.asarray(u, dtype=float)
        if self.variant == "ball":
            return np.ones_like(u)
        if self.variant == "bell":
            return (1 - u * u) ** float(self.alpha)
        if self.variant == "triangular":
            return (1 - u) ** float(self.alpha)
        raise ValueError("the sphere kernel is a surface delta without a pointwise weight")

    def hypergeometric(self, n: int) -> HypergeometricSpec:
        """Series parameters of the operator, in t = r^2 Laplacian."""
        half = Fraction(n, 2)
        quarter = Fraction(1, 4)
        if self.variant == "sphere":
            return HypergeometricSpec((), (half,), quarter)
        if self.variant == "ball":
            return HypergeometricSpec((), (half + 1,), quarter)
        a = as_rational(self.alpha)
        if self.variant == "bell":
            return HypergeometricSpec((), (half + a + 1,), quarter)
        return HypergeometricSpec(
            (Fraction(n + 1, 2),), ((n + a + 1) / 2, (n + a) / 2 + 1), quarter
        )

    def normalization(self, n: int) -> float:
        """C_K, the integral of K over the unit ball."""
        return _normalization(self, n)

    def pde_coefficient(self, n: int) -> float:
        """Coefficient c of the radial equation f_rr + (c/r) f_r = Laplacian f."""
        if self.variant == "sphere":
            return n - 1
        if self.variant == "ball":
            return n + 1
        if self.variant == "bell":
            return 2 * float(self.alpha) + n + 1
        raise ValueError("no radial equation is available for the triangular kernel")

    def symbol(self, rho, n: int) -> np.ndarray:
        """Multiplier of the mean at rho = r |k|."""
        rho = np.abs(np.asarray(rho, dtype=float))
        if self.variant == "sphere":
            return confluent_limit_symbol(n / 2, rho)
        if self.variant == "ball":
            return confluent_limit_symbol(n / 2 + 1, rho)
        if self.variant == "bell":
            return confluent_limit_symbol(n / 2 + float(self.alpha) + 1, rho)
        return _triangular_symbol(float(self.alpha), n, rho)


@lru_cache(maxsize=None)
def _normalization(kernel: KernelSpec, n: int) -> float:
    area = sphere_area(n)
    if kernel.variant == "sphere":
        return area
    if kernel.variant == "ball":
        return area / n
    beta = 2 if kernel.variant == "bell" else 1
    a = float(kernel.alpha)
    closed = area * math.exp(
        math.lgamma(a + 1) + math.lgamma(n / beta) - math.lgamma(n / beta + a + 1)
    ) / beta
    numeric, _ = integrate.quad(lambda u: u ** (n - 1) * float(kernel.weight(u)), 0, 1, limit=200)
    numeric *= area
    if not math.isclose(closed, numeric, rel_tol=1e-7):
        raise ArithmeticError(f"closed-form C_K {closed} disagrees with quadrature {numeric}")
    return closed


@lru_cache(maxsize=64)
def _jacobi_unit(a: float, b: float, nodes: int):
    """Gauss-Jacobi rule for (1-u)^a u^b on [0, 1]."""
    x, w = special.roots_jacobi(nodes, a, b)
    return (x + 1) / 2, w / w.sum()


def _triangular_symbol(alpha: float, n: int, rho: np.ndarray) -> np.ndarray:
    # radial average of the sphere symbol with weight (1-u)^alpha u^(n-1)
    if rho.size == 0:
        return rho.copy()
    nodes = max(40, int(np.max(rho)) + 40)
    u, w = _jacobi_unit(alpha, float(n - 1), nodes)
    flat = rho.reshape(-1)
    out = np.empty_like(flat)
    for start in range(0, flat.size, 2048):
        block = flat[start : start + 2048]
        out[start : start + 2048] = confluent_limit_symbol(n / 2, np.outer(block, u)) @ w
    return out.reshape(rho.shape)


@dataclass(frozen=True)
class MeanSpec:
    radius: float
    power: float = 1
    mode: str = "spectral"
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.mode not in ("series", "spectral"):
            raise ValueError("mode is 'series' or 'spectral'")
        if self.order < 0:
            raise ValueError("series order must be non-negative")

    def with_power(self, power) -> "MeanSpec":
        return MeanSpec(self.radius, power, self.mode, self.order)

    def with_radius(self, radius) -> "MeanSpec":
        return MeanSpec(radius, self.power, self.mode, self.order)


def _check_dim(f, n: int):
    if f.dim != n:
        raise ValueError(f"field dimension {f.dim} does not match n = {n}")


def mean_series(spec: MeanSpec, kernel: KernelSpec, n: int) -> TruncatedSeries:
    """Coefficient series (in r^2 Laplacian) applied in series mode."""
    base = coeffs_pFq(kernel.hypergeometric(n), spec.order)
    if spec.power == 1:
        return base
    return real_power(base, spec.power)


def _is_integer(m) -> bool:
    return float(m).is_integer()


def mean_multiplier(spec: MeanSpec, kernel: KernelSpec, n: int) -> SpectralMultiplier:
    """Spectral multiplier symbol(r sqrt(-lambda))**power with singularity guards."""
    r = float(spec.radius)
    m = float(spec.power)

    def symbol(lam):
        rho = r * np.sqrt(np.maximum(-np.asarray(lam, dtype=float), 0.0))
        values = kernel.symbol(rho, n)
        if m == 1:
            return values
        if not _is_integer(m) and np.any(values < 0):
            bad = rho[values < 0][0]
            raise MultiplierSingular(
                f"fractional power {m:g} of a negative symbol at r|k| = {bad:.6g}", rk=float(bad)
            )
        if m < 0 and np.any(np.abs(values) < SYMBOL_GUARD):
            bad = rho[np.abs(values) < SYMBOL_GUARD][0]
            raise MultiplierSingular(
                f"symbol vanishes (|psi| < {SYMBOL_GUARD:g}) at r|k| = {bad:.6g}; inversion is ill-posed",
                rk=float(bad),
            )
        return np.power(values, m)

    return SpectralMultiplier(symbol)


def mean(f, spec: MeanSpec, kernel: KernelSpec = KernelSpec(), n: int | None = None):
    """Kernel mean of radius ``spec.radius`` raised to ``spec.power``."""
    n = f.dim if n is None else n
    _check_dim(f, n)
    if spec.mode == "series":
        return apply_series(f, mean_series(spec, kernel, n), _square(spec.radius))
    if isinstance(f, PolyField):
        raise NonGridSpectral("spectral mode needs a grid field or a plane wave")
    return apply_multiplier(f, mean_multiplier(spec, kernel, n))


def _square(r):
    return r * r


def invert_mean(fbar, spec: MeanSpec, kernel: KernelSpec = KernelSpec(), n: int | None = None):
    """Recover f from its mean: the mean operator at power -m."""
    return mean(fbar, spec.with_power(-spec.power), kernel, n)


def mean_over_radii(f, radii, spec: MeanSpec, kernel: KernelSpec = KernelSpec(), n=None, threads: int = 1):
    """Means at several radii; results are returned in the order of ``radii``."""
    specs = [spec.with_radius(r) for r in radii]
    if threads <= 1:
        return [mean(f, s, kernel, n) for s in specs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: mean(f, s, kernel, n), specs))


def addition_compose(f, r1, r2, n: int | None = None, terms: int = DEFAULT_ORDER):
    """Two successive spherical means of radii r1 >= r2 through the 2F1 addition formula."""
    n = f.dim if n is None else n
    _check_dim(f, n)
    return apply_series(f, addition_series(r1, r2, n, terms), 1)


def equal_radius_double_mean(f, r, n: int | None = None, order: int = DEFAULT_ORDER):
    """Two spherical means of the same radius, as the 1F2 series in r^2 Laplacian."""
    n = f.dim if n is None else n
    _check_dim(f, n)
    return apply_series(f, equal_radius_series(n, order), _square(r))


def sphere_ball_parabola_residual(f, r, n: int | None = None, mode: str = "spectral", order: int = DEFAULT_ORDER):
    """sphere mean - r^2/(n(n+2)) Laplacian(bell(1) mean) - ball mean.

    In series mode the bell mean is truncated one order lower so that all
    three series stop at the same power of the Laplacian.
    """
    n = f.dim if n is None else n
    _check_dim(f, n)
    spec = MeanSpec(r, 1, mode, order)
    sphere = mean(f, spec, KernelSpec.sphere(), n)
    ball = mean(f, spec, KernelSpec.ball(), n)
    bell_spec = MeanSpec(r, 1, mode, max(order - 1, 0))
    bell = laplacian(mean(f, bell_spec, KernelSpec.bell(1), n))
    if isinstance(f, PolyField) and is_exact(r):
        factor = Fraction(r) ** 2 / (n * (n + 2))
    else:
        factor = float(r) ** 2 / (n * (n + 2))
    return sphere - bell * factor - ball


def _require_1d(f):
    if not isinstance(f, GridField) or f.dim != 1:
        raise ValueError("the moving average acts on one-dimensional grid fields")


def moving_average_1d(f: GridField, r) -> GridField:
    """(1/2r) integral of f over [x - r, x + r]; symbol sin(rk)/(rk)."""
    _require_1d(f)
    r = float(r)
    return apply_multiplier(f, SpectralMultiplier(lambda lam: np.sinc(r * np.sqrt(-lam) / np.pi)))


def invert_moving_average_1d(fbar: GridField, r) -> GridField:
    """Undo the moving average with the symbol rk/sin(rk); needs r|k| < pi on populated modes."""
    _require_1d(fbar)
    r = float(r)
    lam = populated_eigenvalues(fbar)
    rk = r * np.sqrt(-lam)
    over = rk >= np.pi * (1 - 1e-12)
    if over.any():
        worst = float(rk[over].min())
        raise BandLimitExceeded(f"r|k| = {worst:.6g} reaches the first pole at pi", rk=worst)
    return apply_multiplier(fbar, SpectralMultiplier(lambda lam: 1.0 / np.sinc(r * np.sqrt(-lam) / np.pi)))


def plane_wave_symbol(f: PlaneWaveField, spec: MeanSpec, kernel: KernelSpec) -> float:
    """Factor by which the mean scales a plane wave (spectral mode)."""
    return float(mean(f.with_amplitude(1.0), spec, kernel, f.dim).amplitude)
