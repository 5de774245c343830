"""Finite-difference residuals of the radial equations satisfied by the means.

For the sphere, ball and bell kernels the mean u(r, x) obeys

    u_rr + (c / r) u_r = Laplacian_x u

with c = n - 1, n + 1 and 2 alpha + n + 1 respectively.  The residual is
formed with central differences in r, so it is O(h^2) for smooth fields.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from .field import PolyField, laplacian
from .hyperseries import DEFAULT_ORDER, is_exact
from .meanops import KernelSpec, MeanSpec, mean

EQUATIONS = {"sphere": "EPD", "ball": "BallPDE", "bell": "BellPDE"}


@dataclass(frozen=True)
class ResidualReport:
    equation: str
    r: float
    h: float
    residualNorm: float
    mode: str
    expectedOrder: int = 2

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        d = self.to_dict()
        return json.dumps({k: d[k] for k in ("equation", "r", "h", "residualNorm", "mode")})


def equation_name(kernel: KernelSpec) -> str:
    if kernel.variant not in EQUATIONS:
        raise ValueError("no radial equation is available for the triangular kernel")
    name = EQUATIONS[kernel.variant]
    if kernel.variant == "bell":
        name += f"({float(kernel.alpha):g})"
    return name


def _default_mode(f) -> str:
    return "series" if isinstance(f, PolyField) else "spectral"


def epd_residual(f, r, h=None, n: int | None = None, kernel: KernelSpec = KernelSpec(),
                 mode: str | None = None, order: int = DEFAULT_ORDER, threads: int = 1) -> ResidualReport:
    """Residual of the kernel's radial equation at radius r with step h (default r/100)."""
    n = f.dim if n is None else n
    mode = _default_mode(f) if mode is None else mode
    h = r / 100 if h is None else h
    if not r - h > 0:
        raise ValueError("need r - h > 0")
    if r < 10 * h * (1 - 1e-12):
        raise ValueError("keep r >= 10 h; the 1/r coefficient is singular at the origin")
    equation = equation_name(kernel)
    coef = kernel.pde_coefficient(n)
    radii = (r - h, r, r + h)

    def at(radius):
        return mean(f, MeanSpec(radius, 1, mode, order), kernel, n)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, 3)) as pool:
            lo, mid, hi = pool.map(at, radii)
    else:
        lo, mid, hi = (at(x) for x in radii)

    if isinstance(f, PolyField) and is_exact(r) and is_exact(h):
        second = (hi - mid * 2 + lo) * (1 / (h * h))
        first = (hi - lo) * (coef / (2 * h * r))
    else:
        second = (hi - mid * 2 + lo) * (1.0 / (float(h) ** 2))
        first = (hi - lo) * (float(coef) / (2 * float(h) * float(r)))
    residual = second + first - laplacian(mid)
    return ResidualReport(equation, float(r), float(h), residual.max_abs(), mode)


def convergence_table(f, r, h, n=None, kernel: KernelSpec = KernelSpec(), mode=None,
                      halvings: int = 2, order: int = DEFAULT_ORDER) -> dict:
    """Residuals at h, h/2, ... with the ratio between successive norms (about 4 for order 2)."""
    reports = [epd_residual(f, r, h / 2**i, n, kernel, mode, order) for i in range(halvings + 1)]
    ratios = []
    for coarse, fine in zip(reports, reports[1:]):
        ratios.append(coarse.residualNorm / fine.residualNorm if fine.residualNorm else float("inf"))
    return {"reports": [rep.to_dict() for rep in reports], "ratios": ratios}
