"""Field export (CSV, legacy VTK) and JSON verification reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .field import FieldArrays
from .verify import GridSpec, ResidualReport

CSV_HEADER = "rho,phi,z,u_rho,u_z,u_phi,p,t,in_support"
_NUM = "%.17g"


class NonFiniteSampleError(ArithmeticError):
    """A sample to be exported contains NaN or Inf."""


def _check_finite(arrays: FieldArrays):
    for name in ("u_rho", "u_z", "u_phi", "p", "t"):
        v = np.asarray(getattr(arrays, name)).ravel()
        bad = np.flatnonzero(~np.isfinite(v))
        if bad.size:
            i = bad[0]
            where = f"rho={arrays.rho.flat[i]:.17g}, phi={arrays.phi.flat[i]:.17g}, z={arrays.z.flat[i]:.17g}"
            raise NonFiniteSampleError(f"{bad.size} non-finite {name} value(s); first at point {i} ({where})")


def export_samples(arrays: FieldArrays, grid: GridSpec, fmt: str, path) -> None:
    """Write grid samples (row-major, ``rho`` slowest, ``z`` fastest) to ``path``.

    Parameters
    ----------
    arrays : FieldArrays
        Samples on ``grid.mesh()``.
    fmt : {"csv", "vtk"}
        CSV keeps cylindrical components; VTK converts velocity to Cartesian.
    """
    if arrays.rho.size != int(np.prod(grid.counts)):
        raise ValueError("sample count does not match the grid")
    _check_finite(arrays)
    path = Path(path)
    if fmt == "csv":
        _write_csv(arrays, path)
    elif fmt == "vtk":
        _write_vtk(arrays, grid, path)
    else:
        raise ValueError(f"unknown export format {fmt!r}")


def _columns(arrays: FieldArrays, names):
    return np.column_stack([np.asarray(getattr(arrays, n), dtype=float).ravel() for n in names])


def _write_csv(arrays: FieldArrays, path: Path):
    data = _columns(arrays, ("rho", "phi", "z", "u_rho", "u_z", "u_phi", "p", "t"))
    flag = np.asarray(arrays.in_support).ravel().astype(int)
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row, f in zip(data, flag):
            fh.write(",".join(_NUM % v for v in row) + f",{f}\n")


def _write_vtk(arrays: FieldArrays, grid: GridSpec, path: Path):
    rho, phi, z = (np.asarray(v, dtype=float).ravel() for v in (arrays.rho, arrays.phi, arrays.z))
    cos, sin = np.cos(phi), np.sin(phi)
    ur, uf, uz = (np.asarray(v, dtype=float).ravel() for v in (arrays.u_rho, arrays.u_phi, arrays.u_z))
    pts = np.column_stack([rho * cos, rho * sin, z])
    vel = np.column_stack([ur * cos - uf * sin, ur * sin + uf * cos, uz])
    n = rho.size
    # VTK wants the first index fastest; our z axis is the fastest
    nr, nf, nz = grid.counts
    with open(path, "w", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("helical flow samples\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_GRID\n")
        fh.write(f"DIMENSIONS {nz} {nf} {nr}\n")
        fh.write(f"POINTS {n} double\n")
        np.savetxt(fh, pts, fmt=_NUM)
        fh.write(f"POINT_DATA {n}\n")
        fh.write("VECTORS velocity double\n")
        np.savetxt(fh, vel, fmt=_NUM)
        for name, vals in (("pressure", arrays.p), ("t", arrays.t)):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(fh, np.asarray(vals, dtype=float).ravel(), fmt=_NUM)


def report_document(reports, config: dict | None = None) -> dict:
    suites = [r.to_dict() for r in reports]
    return {
        "config": dict(config or {}),
        "suites": suites,
        "overall_passed": all(s["passed"] for s in suites),
    }


def write_report(reports, path, config: dict | None = None) -> dict:
    """Serialize residual reports to JSON; returns the document written."""
    doc = report_document(reports, config)
    text = json.dumps(doc, indent=2, sort_keys=False, default=_fallback)
    Path(path).write_text(text + "\n")
    return doc


def _fallback(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v).__name__}")


def read_report(path) -> list[ResidualReport]:
    """Rebuild :class:`ResidualReport` objects from a written report."""
    doc = json.loads(Path(path).read_text())
    out = []
    for s in doc["suites"]:
        out.append(ResidualReport(
            suite=s["suite"], max_residual=float(s["max_residual"]), mean_residual=float(s["mean_residual"]),
            tolerance=float(s["tolerance"]), grid=s.get("grid", {}),
            skipped_points=int(s.get("skipped_points", 0)), requested_points=int(s.get("requested_points", 0)),
            notes=s.get("notes", ""), details=s.get("details", {}),
        ))
    return out
