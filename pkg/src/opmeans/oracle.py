"""Direct quadrature of the defining integrals of the means.

Nothing here touches the operator series or Fourier multipliers: fields are
only sampled pointwise, so these routines serve as an independent reference
for :mod:`opmeans.meanops`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import TailNotConverged
from .field import evaluate
from .meanops import KernelSpec

RULES = ("two-point", "angular-trapezoid", "gauss-legendre-sphere", "monte-carlo")


@dataclass(frozen=True)
class QuadratureRule:
    """Node set on the unit sphere plus a radial node count.

    ``resolution`` holds (N_theta,) for the angular trapezoid, (N_mu, N_phi)
    for the Gauss-Legendre sphere and (N_samples,) for Monte Carlo.
    """

    variant: str
    resolution: tuple = ()
    radial_nodes: int = 24
    seed: int = 0

    def __post_init__(self):
        if self.variant not in RULES:
            raise ValueError(f"unknown rule {self.variant!r}")
        object.__setattr__(self, "resolution", tuple(int(v) for v in self.resolution))

    @classmethod
    def default(cls, n: int, radial_nodes: int = 24) -> "QuadratureRule":
        if n == 1:
            return cls("two-point", (), radial_nodes)
        if n == 2:
            return cls("angular-trapezoid", (64,), radial_nodes)
        if n == 3:
            return cls("gauss-legendre-sphere", (16, 32), radial_nodes)
        return cls("monte-carlo", (20000,), radial_nodes)

    @property
    def dimension(self):
        return {"two-point": 1, "angular-trapezoid": 2, "gauss-legendre-sphere": 3}.get(self.variant)

    def directions(self, n: int):
        """Unit vectors (M, n) and weights summing to one."""
        return _directions(self, n)


@lru_cache(maxsize=32)
def _directions(rule: QuadratureRule, n: int):
    fixed = rule.dimension
    if fixed is not None and fixed != n:
        raise ValueError(f"rule {rule.variant} integrates over the sphere in R^{fixed}, not R^{n}")
    if rule.variant == "two-point":
        u = np.array([[1.0], [-1.0]])
        w = np.array([0.5, 0.5])
    elif rule.variant == "angular-trapezoid":
        (nt,) = rule.resolution
        theta = 2 * np.pi * np.arange(nt) / nt
        u = np.column_stack([np.cos(theta), np.sin(theta)])
        w = np.full(nt, 1.0 / nt)
    elif rule.variant == "gauss-legendre-sphere":
        nmu, nphi = rule.resolution
        mu, wmu = np.polynomial.legendre.leggauss(nmu)
        phi = 2 * np.pi * np.arange(nphi) / nphi
        MU, PHI = np.meshgrid(mu, phi, indexing="ij")
        s = np.sqrt(1 - MU**2)
        u = np.column_stack([(s * np.cos(PHI)).ravel(), (s * np.sin(PHI)).ravel(), MU.ravel()])
        w = np.repeat(wmu / 2, nphi) / nphi
    else:
        (count,) = rule.resolution
        rng = np.random.default_rng(rule.seed)
        g = rng.standard_normal((count, n))
        u = g / np.linalg.norm(g, axis=1, keepdims=True)
        w = np.full(count, 1.0 / count)
    u.flags.writeable = False
    w.flags.writeable = False
    return u, w


def _rotated(u, rotation):
    if rotation is None:
        return u
    return u @ np.asarray(rotation, dtype=float).T


def sphere_mean_quadrature(f, x, r, n: int, rule: QuadratureRule | None = None, rotation=None, return_stderr=False):
    """Average of f over the sphere |y - x| = r.

    ``rotation`` applies an orthogonal matrix to the node set.  With
    ``return_stderr`` the sample standard error is returned too (it is only
    meaningful for Monte Carlo rules).
    """
    rule = QuadratureRule.default(n) if rule is None else rule
    u, w = rule.directions(n)
    u = _rotated(u, rotation)
    pts = np.asarray(x, dtype=float)[None, :] + float(r) * u
    vals = np.asarray(evaluate(f, pts), dtype=float)
    # shift by one sample so constants come back bit-exact
    value = float(vals[0] + np.dot(w, vals - vals[0]))
    if return_stderr:
        return value, float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return value


@lru_cache(maxsize=64)
def _radial_rule(a: float, b: float, nodes: int):
    # Gauss-Jacobi for (1-u)^a u^b on [0, 1]
    x, w = special.roots_jacobi(nodes, a, b)
    return (x + 1) / 2, w


def kernel_mean_quadrature(f, x, r, n: int, kernel: KernelSpec, rule: QuadratureRule | None = None):
    """Kernel-weighted ball average as a radial integral of sphere averages.

    The radial weight K(u) u^(n-1) is integrated with Gauss-Jacobi nodes that
    absorb the (1 - u)^alpha endpoint behaviour, and the weights are
    normalized by their own sum so constants are reproduced exactly.
    """
    rule = QuadratureRule.default(n) if rule is None else rule
    if kernel.variant == "sphere":
        return sphere_mean_quadrature(f, x, r, n, rule)
    a = kernel.endpoint_exponent
    u_rad, w_rad = _radial_rule(a, float(n - 1), rule.radial_nodes)
    # remaining smooth part of K(u) after the Jacobi weight took (1-u)^a
    w_rad = w_rad * kernel.weight(u_rad) / (1 - u_rad) ** a
    w_rad = w_rad / w_rad.sum()
    u_ang, w_ang = rule.directions(n)
    offsets = float(r) * u_rad[:, None, None] * u_ang[None, :, :]
    pts = np.asarray(x, dtype=float) + offsets.reshape(-1, n)
    vals = np.asarray(evaluate(f, pts), dtype=float).reshape(len(u_rad), len(w_ang))
    ref = vals[0, 0]
    return float(ref + w_rad @ ((vals - ref) @ w_ang))


def complex_circle_mean(coeffs, z0, r, n_theta: int) -> complex:
    """(1/2 pi) integral of p(z0 + r e^{i theta}) d theta for a polynomial p.

    ``coeffs`` lists p's coefficients from the constant term upward.  The
    trapezoid rule is exact once n_theta exceeds the degree.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    degree = len(coeffs) - 1
    if n_theta < 2 * degree + 1:
        raise ValueError(f"need at least {2 * degree + 1} nodes for degree {degree}")
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    z = z0 + r * np.exp(1j * theta)
    vals = np.polynomial.polynomial.polyval(z, coeffs)
    return complex(math.fsum(vals.real) / n_theta, math.fsum(vals.imag) / n_theta)


def _panel_integral(d1, d3, r, x, upper, nodes):
    # (|cos| - cos) = -2 cos on u in (r(1+4j), r(3+4j)) and zero elsewhere
    a = math.pi / (2 * r)
    g, gw = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    j = 0
    while r * (1 + 4 * j) < upper:
        lo, hi = r * (1 + 4 * j), r * (3 + 4 * j)
        u = lo + (hi - lo) * (g + 1) / 2
        weight = -2 * np.cos(a * u)
        integrand = weight * (np.asarray(d3(x - u), dtype=float) + a * a * np.asarray(d1(x - u), dtype=float))
        total += (hi - lo) / 2 * float(gw @ integrand)
        j += 1
    return 2 * r * r / math.pi * total


def moving_average_integral_inverse(d1, d3, r, x, cutoff=None, nodes: int = 24, tol: float = 1e-9, max_doublings: int = 10):
    """Recover f(x) from the first and third derivatives of its moving average.

    Evaluates (2r^2/pi) int_0^inf (|cos(pi u/2r)| - cos(pi u/2r))
    (fbar'''(x-u) + (pi/2r)^2 fbar'(x-u)) du panel by panel between the zeros
    of the cosine, doubling the cutoff until the result settles.
    """
    r = float(r)
    upper = 20 * r if cutoff is None else float(cutoff)
    value = _panel_integral(d1, d3, r, x, upper, nodes)
    for _ in range(max_doublings):
        upper *= 2
        refined = _panel_integral(d1, d3, r, x, upper, nodes)
        if abs(refined - value) <= 10 * tol:
            return refined
        value = refined
    raise TailNotConverged(f"integral still changing at cutoff {upper:g}")
