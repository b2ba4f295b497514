"""Command-line front end: ``series``, ``profile``, ``field`` and ``verify``.

Exit codes: 0 success, 1 a verification suite failed, 2 usage error,
3 numeric or I/O error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

import numpy as np

from .config import HelixConfig
from .field import build_flow_field
from .io import NonFiniteSampleError, export_samples, write_report
from .profile import DEFAULT_T_MAX, ProfileRangeError, continue_profile
from .puiseux import DEFAULT_ORDER, SeriesError, expand_profile_series
from .section import SectionRangeError
from . import verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SUITES = ("all", "series", "ode", "reduced", "fd", "beltrami", "gs", "identities", "asymptotic")
# the five verifier operations run by "all"
ALL_SUITES = ("reduced", "fd", "beltrami_gs", "identities", "asymptotic")
_ALIASES = {"beltrami": "beltrami_gs", "gs": "beltrami_gs"}

DEFAULT_EXTENT = (0.95, 1.05, 0.0, 0.1, -0.05, 0.15)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _branch(text: str) -> int:
    table = {"+": 1, "-": -1, "+1": 1, "-1": -1, "plus": 1, "minus": -1}
    if text not in table:
        raise argparse.ArgumentTypeError(f"branch must be + or -, got {text!r}")
    return table[text]


def _ints(text: str):
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("grid needs three counts NRHO,NPHI,NZ")
    return vals


def _floats(text: str):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if len(vals) != 6:
        raise argparse.ArgumentTypeError("extent needs RHO0,RHO1,PHI0,PHI1,Z0,Z1")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="helixflow", description="Localized steady Euler flows around a helix.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, branch=True):
        p.add_argument("--k", default="1", help="helix slope (default 1)")
        if branch:
            p.add_argument("--branch", type=_branch, default=1, help="series branch, + or - (default +)")
        p.add_argument("--tol", type=float, default=None, help="numeric tolerance")

    p = sub.add_parser("series", help="Puiseux coefficients of h and c")
    common(p, branch=False)
    p.add_argument("--order", type=int, default=DEFAULT_ORDER)
    p.add_argument("--exact", action="store_true", help="rational arithmetic (k read as a fraction)")

    p = sub.add_parser("profile", help="continued profile table")
    common(p)
    p.add_argument("--t-max", type=float, default=DEFAULT_T_MAX)
    p.add_argument("--points", type=int, default=21, help="rows in the output table")

    p = sub.add_parser("field", help="sample a flow variant on a cylindrical grid")
    common(p)
    p.add_argument("--variant", choices=("raw", "cutoff", "beltrami"), default="raw")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--grid", type=_ints, default=(16, 16, 16), help="NRHO,NPHI,NZ")
    p.add_argument("--extent", type=_floats, default=DEFAULT_EXTENT, help="RHO0,RHO1,PHI0,PHI1,Z0,Z1")
    p.add_argument("--format", choices=("csv", "vtk"), default="csv")
    p.add_argument("--output", required=True)

    p = sub.add_parser("verify", help="run residual suites")
    common(p)
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fd-points", type=int, default=64, help="points per axis of the FD grid")
    p.add_argument("--report", default=None, help="JSON report path")
    return parser


def _config(args, exact=False) -> HelixConfig:
    try:
        k = Fraction(args.k) if exact else float(args.k)
    except (ValueError, ZeroDivisionError):
        raise _UsageError(f"invalid slope --k {args.k!r}") from None
    kwargs = {"k": k, "branch": getattr(args, "branch", 1)}
    if getattr(args, "eps", None) is not None:
        kwargs["eps"] = args.eps
    if args.tol is not None:
        kwargs["tol"] = args.tol
    try:
        return HelixConfig(**kwargs)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


class _UsageError(Exception):
    pass


def _fmt(v) -> str:
    return str(v) if isinstance(v, Fraction) else format(float(v), ".17g")


def cmd_series(args, out) -> int:
    cfg = _config(args, exact=args.exact)
    if args.order < 1:
        raise _UsageError("--order must be >= 1")
    series = expand_profile_series(cfg.k if args.exact else cfg.kf, args.order)
    out.write(f"# k = {_fmt(series.k)}; h = sum a_n s^n, c = sum c_n s^n, s = +-sqrt(t)\n")
    out.write("n\ta_n\tc_n\n")
    for n, (a, c) in enumerate(zip(series.h_coeffs, series.c_coeffs)):
        out.write(f"{n}\t{_fmt(a)}\t{_fmt(c)}\n")
    return EXIT_OK


def cmd_profile(args, out) -> int:
    cfg = _config(args)
    if args.points < 2:
        raise _UsageError("--points must be >= 2")
    series = expand_profile_series(cfg.kf)
    curve = continue_profile(cfg, series, t_max=args.t_max)
    sig = np.linspace(np.sqrt(curve.t_start), np.sqrt(curve.t_cap), args.points)
    t = np.minimum(sig * sig, curve.t_cap)
    h, c = curve.state(t)
    S = h * h * (1 + cfg.kf**2) - 3 * t * (c + cfg.kf**2)
    out.write(f"# k = {cfg.kf:g}, branch {cfg.branch:+d}; stop: {curve.stop_reason} at t = {curve.t_cap:.17g}\n")
    out.write("t\th\tc\tS\n")
    for row in zip(t, h, c, S):
        out.write("\t".join(_fmt(v) for v in row) + "\n")
    if curve.t_cap < args.t_max:
        sys.stderr.write(f"helixflow: profile ends at t={curve.t_cap:.6g} before --t-max {args.t_max:g} "
                         f"({curve.stop_reason})\n")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_field(args, out) -> int:
    cfg = _config(args)
    r0, r1, f0, f1, z0, z1 = args.extent
    try:
        grid = verify.GridSpec(args.grid, (r0, f0, z0), (r1, f1, z1))
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    if r0 <= 0:
        raise _UsageError("rho extent must be positive")
    fld = build_flow_field(cfg, cutoff=args.variant == "cutoff")
    rho, phi, z = grid.mesh()
    arrays = fld.variant(args.variant)(rho, phi, z)
    export_samples(arrays, grid, args.format, args.output)
    out.write(f"wrote {rho.size} samples ({args.variant}, {args.format}) to {args.output}\n")
    return EXIT_OK


def run_suites(cfg: HelixConfig, names, tol=None, seed=0, fd_points=64):
    """Build what the requested suites need and run them in order."""
    reports = []
    cache = {}

    def field_for(branch):
        if branch not in cache:
            c = HelixConfig(cfg.k, branch, cfg.eps, cfg.tol)
            cache[branch] = build_flow_field(c, cutoff=False)
        return cache[branch]

    def t(default):
        return default if tol is None else tol

    for name in names:
        if name == "series":
            series = expand_profile_series(cfg.kf)
            reports.append(verify.series_residual_report(series, tol=t(1e-8)))
        elif name == "ode":
            reports.append(verify.overlap_report(field_for(cfg.branch).smap.curve, tol=t(1e-8)))
        elif name == "reduced":
            fld = field_for(cfg.branch)
            t_hi = min(1e-2, fld.smap.t_hi)
            x, tt = verify.sample_domain(fld.smap, 1000, 0.05, 1e-4, t_hi, seed=seed)
            reports.append(verify.reduced_euler_residuals(fld.smap, x, tt, tol=t(1e-8)))
        elif name == "fd":
            reports.append(verify.cylindrical_fd_residuals(field_for(cfg.branch), "raw",
                                                           verify.default_fd_grid(fd_points), 1e-3))
        elif name == "beltrami_gs":
            reports.append(verify.beltrami_gs_residuals(field_for(cfg.branch), tol=t(1e-4)))
        elif name == "identities":
            reports.append(verify.vector_identity_residuals(seed=seed, k=cfg.kf, tol=t(1e-12)))
        elif name == "asymptotic":
            reports.append(verify.asymptotic_and_symmetry_check(field_for(1).smap, field_for(-1).smap))
        else:  # pragma: no cover - guarded by argparse
            raise ValueError(name)
    return reports


def cmd_verify(args, out) -> int:
    cfg = _config(args)
    if args.fd_points < 3:
        raise _UsageError("--fd-points must be >= 3")
    names = ALL_SUITES if args.suite == "all" else (_ALIASES.get(args.suite, args.suite),)
    reports = run_suites(cfg, names, tol=args.tol, seed=args.seed, fd_points=args.fd_points)
    for r in reports:
        out.write(f"{r.suite:12s} {'PASS' if r.passed else 'FAIL'}  max={r.max_residual:.3e} "
                  f"tol={r.tolerance:.1e}  {r.notes}\n")
    config = {"command": "verify", "k": cfg.kf, "branch": cfg.branch, "eps": cfg.eps, "tol": cfg.tol,
              "suite": args.suite, "seed": args.seed, "fd_points": args.fd_points}
    if args.report:
        write_report(reports, args.report, config)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


_COMMANDS = {"series": cmd_series, "profile": cmd_profile, "field": cmd_field, "verify": cmd_verify}


def run_cli(argv=None, out=None) -> int:
    """Parse ``argv`` and run one subcommand; returns the exit code."""
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args, out)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"helixflow: error: {exc}\n")
        return EXIT_USAGE
    except (NonFiniteSampleError, SectionRangeError, ProfileRangeError, SeriesError,
            ArithmeticError, ValueError, OSError) as exc:
        sys.stderr.write(f"helixflow: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
