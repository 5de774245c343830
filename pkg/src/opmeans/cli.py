"""Command-line front end.

Exit codes: 0 success, 1 tolerance breach, 2 usage or I/O error (a JSON
error object is written to stderr).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
from fractions import Fraction

import numpy as np
import scipy

from . import __version__
from .errors import OpMeansError
from .field import GridField, PlaneWaveField, PolyField, evaluate, read_field, write_field, write_grdf
from .meanops import KernelSpec, MeanSpec, mean_over_radii, mean
from .oracle import QuadratureRule, kernel_mean_quadrature
from .pdecheck import convergence_table
from .xray import DCHandling, DirectionSet, difference_of_gaussians, reconstruct, sinogram

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number(text: str):
    """Exact rational for decimal or p/q input; used for radii and powers."""
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    return q


def _number_list(text: str):
    return [_number(t) for t in text.split(",") if t.strip()]


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("OPMEANS_THREADS")
    return max(1, int(env)) if env else 1


def provenance(args, seed=None) -> dict:
    params = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in sorted(vars(args).items())
              if k != "func"}
    params = json.loads(json.dumps(params, default=str))
    return {
        "command": args.command,
        "params": params,
        "seed": seed,
        "versions": {
            "opmeans": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def _emit(args, summary: dict, seed=None):
    record = {"provenance": provenance(args, seed), "summary": summary}
    text = json.dumps(record, sort_keys=True)
    if getattr(args, "provenance", None):
        with open(args.provenance, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _kernel(args) -> KernelSpec:
    name = {"tri": "triangular"}.get(args.kernel, args.kernel)
    alpha = float(args.alpha) if name in ("bell", "triangular") else 0.0
    return KernelSpec(name, alpha)


def _radius(value, field):
    # polynomials keep exact rationals; grids work in floating point
    return value if isinstance(field, PolyField) else float(value)


def _power(value):
    return int(value) if value.denominator == 1 else value


def _smooth_field(dim: int, n_points: int, seed: int) -> GridField:
    """Random band-limited trigonometric field on [0, 2 pi)^dim (wavenumbers <= 3)."""
    rng = np.random.default_rng(seed)
    modes = [(rng.integers(-3, 4, size=dim), rng.uniform(0, 2 * np.pi), rng.normal()) for _ in range(6)]

    def func(*xs):
        out = 0.0
        for k, phase, amp in modes:
            out = out + amp * np.cos(sum(ki * x for ki, x in zip(k, xs)) + phase)
        return out

    return GridField.on_box(func, n_points, 2 * np.pi, dim)


def _load_field(args):
    if args.input:
        return read_field(args.input)
    if args.field == "zero":
        return GridField.on_box(lambda *x: np.zeros_like(x[0]), args.grid, 2 * np.pi, args.dim)
    if args.field == "plane":
        return PlaneWaveField((2.0, -1.0, 0.5)[: args.dim], 0.3)
    return _smooth_field(args.dim, args.grid, args.seed)


# ---------------------------------------------------------------------------


def cmd_mean(args) -> int:
    f = read_field(args.input)
    n = args.dim or f.dim
    spec = MeanSpec(_radius(args.radius, f), _power(args.power), args.mode, args.order)
    out = mean(f, spec, _kernel(args), n)
    write_field(args.output, out)
    summary = {"output": args.output, "type": type(out).__name__, "max_abs": out.max_abs()}
    if isinstance(out, PolyField):
        summary["terms"] = json.loads(out.to_json())["terms"]
    _emit(args, summary)
    return EXIT_OK


def cmd_compare_oracle(args) -> int:
    f = _load_field(args)
    n = f.dim
    kernel = _kernel(args)
    spec = MeanSpec(1.0, 1, args.mode, args.order)
    radii = [float(r) for r in args.radii]
    if args.points:
        probes = np.array(args.points, dtype=float).reshape(-1, n)
    elif isinstance(f, GridField):
        lengths = np.array(f.lengths)
        probes = np.array([lengths * t for t in (0.35, 0.5, 0.65)])
    else:
        probes = np.array([[0.25 * (i + 1)] * n for i in range(3)])
    rule = QuadratureRule.default(n, args.radial_nodes)
    if args.angular:
        rule = QuadratureRule(rule.variant, tuple(args.angular), args.radial_nodes, args.seed)
    means = mean_over_radii(f, radii, spec, kernel, n, threads=_threads(args))
    rows = []
    for r, g in zip(radii, means):
        for x in probes:
            op = float(evaluate(g, x))
            ref = kernel_mean_quadrature(f, x, r, n, kernel, rule)
            rows.append((r, op, ref, abs(op - ref)))
    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "operator_value", "oracle_value", "abs_diff"])
        for row in rows:
            w.writerow([repr(v) for v in row])
    worst = max(row[3] for row in rows)
    ok = worst < args.tol
    _emit(args, {"output": args.output, "max_abs_diff": worst, "tol": args.tol, "pass": ok}, seed=args.seed)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_pde(args) -> int:
    f = _load_field(args)
    r = _radius(args.radius, f)
    h = _radius(args.step, f) if args.step is not None else r / 100
    table = convergence_table(f, r, h, f.dim, _kernel(args), args.mode, args.halvings, args.order)
    _emit(args, table, seed=args.seed)
    return EXIT_OK


def cmd_xray(args) -> int:
    if args.input:
        f = read_field(args.input)
    elif args.phantom == "zero":
        f = GridField.on_box(lambda *x: np.zeros_like(x[0]), args.grid, 1.0, args.dim)
    else:
        f = difference_of_gaussians(args.grid, dim=args.dim)
    dirs = DirectionSet.default(f.dim, args.directions)
    rec, report = reconstruct(f, dirs, args.line_step, DCHandling(args.dc), args.mean_value)
    if args.output:
        write_grdf(args.output, rec)
    if args.phantom_out:
        write_grdf(args.phantom_out, f)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report.to_json() + "\n")
    if args.sinogram:
        L = f.lengths[0]
        offsets = np.linspace(-0.45 * L, 0.45 * L, args.sinogram_offsets)
        sub = DirectionSet.uniform_2d(args.sinogram_directions)
        with open(args.sinogram, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "offset", "value"])
            for row in sinogram(f, sub, offsets, args.line_step):
                w.writerow([repr(v) for v in row])
    _emit(args, json.loads(report.to_json()))
    return EXIT_OK


def cmd_fractional_figure(args) -> int:
    if args.input:
        f = read_field(args.input)
    else:
        def func(x):
            return np.cos(x) + 0.5 * np.sin(2 * x) + 0.25 * np.cos(3 * x)

        f = GridField.on_box(func, args.grid)
    if f.dim != 1:
        raise UsageError("the fractional figure uses a one-dimensional field")
    kernel = _kernel(args)
    base = MeanSpec(float(args.radius), 1, "spectral")
    cols = {}
    for name, m in (("mean_half", Fraction(1, 2)), ("mean_third", Fraction(1, 3)),
                    ("mean_two_thirds", Fraction(2, 3)), ("mean_full", 1)):
        cols[name] = mean(f, base.with_power(m), kernel, 1).data
    x = np.arange(f.shape[0]) * f.spacing[0]
    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "f", "mean_half", "mean_third", "mean_two_thirds", "mean_full"])
        for i in range(len(x)):
            w.writerow([repr(float(x[i])), repr(float(f.data[i]))] + [repr(float(cols[c][i])) for c in cols])
    _emit(args, {"output": args.output, "rows": len(x)})
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_kernel(p):
    p.add_argument("--kernel", choices=["sphere", "ball", "bell", "tri", "triangular"], default="sphere")
    p.add_argument("--alpha", type=float, default=1.0)


def _add_field_source(p):
    p.add_argument("-i", "--input", help="GRDF grid or JSON polynomial")
    p.add_argument("--field", choices=["smooth", "zero", "plane"], default="smooth")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--grid", type=int, default=32, help="samples per axis for generated fields")
    p.add_argument("--seed", type=int, default=0)


def _add_common(p):
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--provenance", help="also write the provenance JSON here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opmeans", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"opmeans {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("mean", help="apply a mean operator to a field file")
    _add_kernel(p)
    p.add_argument("--radius", type=_number, required=True)
    p.add_argument("--power", type=_number, default=Fraction(1))
    p.add_argument("--mode", choices=["series", "spectral"], default="spectral")
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_mean)

    p = sub.add_parser("compare-oracle", help="operator means against direct quadrature")
    _add_kernel(p)
    _add_field_source(p)
    p.add_argument("--radii", type=_number_list, default=[Fraction(1, 10), Fraction(1, 2)])
    p.add_argument("--points", type=float, nargs="+", help="probe coordinates, flattened")
    p.add_argument("--mode", choices=["series", "spectral"], default="spectral")
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--angular", type=int, nargs="+", help="angular rule resolution")
    p.add_argument("--radial-nodes", type=int, default=24)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("-o", "--output", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_compare_oracle)

    p = sub.add_parser("pde", help="finite-difference residual of the radial equation")
    p.add_argument("--kernel", choices=["sphere", "ball", "bell"], default="sphere")
    p.add_argument("--alpha", type=float, default=1.0)
    _add_field_source(p)
    p.add_argument("--radius", type=_number, default=Fraction(1, 2))
    p.add_argument("--step", type=_number, default=None)
    p.add_argument("--halvings", type=int, default=2)
    p.add_argument("--mode", choices=["series", "spectral"], default=None)
    p.add_argument("--order", type=int, default=8)
    _add_common(p)
    p.set_defaults(func=cmd_pde)

    p = sub.add_parser("xray", help="X-ray forward/average/inverse reconstruction study")
    p.add_argument("-i", "--input")
    p.add_argument("--phantom", choices=["dog", "zero"], default="dog")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--directions", type=int, default=None, help="default 180 in 2D, 512 in 3D")
    p.add_argument("--line-step", type=float, default=None)
    p.add_argument("--dc", choices=[d.value for d in DCHandling], default=DCHandling.ZERO_MEAN.value)
    p.add_argument("--mean-value", type=float, default=None)
    p.add_argument("-o", "--output", help="reconstruction GRDF")
    p.add_argument("--phantom-out", help="phantom GRDF")
    p.add_argument("--report", help="ReconstructionReport JSON")
    p.add_argument("--sinogram", help="CSV theta,offset,value (n = 2)")
    p.add_argument("--sinogram-offsets", type=int, default=33)
    p.add_argument("--sinogram-directions", type=int, default=12)
    _add_common(p)
    p.set_defaults(func=cmd_xray)

    p = sub.add_parser("fractional-figure", help="CSV of fractional spherical means in 1D")
    _add_kernel(p)
    p.add_argument("-i", "--input")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--radius", type=_number, default=Fraction(2, 5))
    p.add_argument("-o", "--output", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_fractional_figure)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, OpMeansError, OSError, ValueError, TypeError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("rk", "k"):
            if getattr(exc, attr, None) is not None:
                err[attr] = getattr(exc, attr)
        print(json.dumps(err), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
