"""Plain-text field files and the CSV serializations of result records.

Field files: header line `# nx ny a`, then `x y u` rows in row-major order.
CSV files: comma separated, `.` decimal, one header row, `#` comment lines
for provenance.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Grid, GridFunction


def save_gridfunction(path, u: GridFunction, a: float):
    grid = u.grid
    x, y = grid.node_coords()
    vals = u.flat()
    with open(path, "w") as fh:
        fh.write(f"# {grid.nx} {grid.ny} {a:.17g}\n")
        for xi, yi, vi in zip(x, y, vals):
            fh.write(f"{xi:.17g} {yi:.17g} {vi:.17g}\n")


def load_gridfunction(path):
    """Read a field file; returns (GridFunction, a). Rejects count mismatches."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing `# nx ny a` header")
        parts = header[1:].split()
        if len(parts) != 3:
            raise ValueError(f"{path}: malformed header {header!r}")
        nx, ny, a = int(parts[0]), int(parts[1]), float(parts[2])
        data = np.loadtxt(fh)
    if data.ndim == 1:
        data = data[None, :]
    if data.shape[0] != nx * ny or data.shape[1] != 3:
        raise ValueError(f"{path}: expected {nx * ny} rows of `x y u`, found shape {data.shape}")
    grid = Grid(nx, ny)
    return GridFunction(grid, data[:, 2].reshape(ny, nx)), a


def _write_csv(path, comments: list[str], header: str, rows):
    with open(path, "w") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def write_curve_csv(path, curve, comments=()):
    cs = list(comments) + [
        f"kind={curve.kind} a={curve.a:.17g} x0=({curve.center[0]:.17g},{curve.center[1]:.17g})",
        f"slack={curve.slack:.17g} slack_rel={curve.slack_rel:.17g}",
    ]
    rows = [f"{r:.17g},{v:.17g}" for r, v in zip(curve.radii, curve.values)]
    _write_csv(path, cs, "r,value", rows)


def write_breakdown_csv(path, breakdown, comments=()):
    _write_csv(path, list(comments), "dirichlet,phase_plus,phase_minus,total", [breakdown.csv_row()])


def write_phases_csv(path, phases, comments=()):
    rows = []
    for xpt in phases.gamma_plus:
        rows.append(f"gamma_plus,{xpt:.17g},{xpt:.17g}")
    for xpt in phases.gamma_minus:
        rows.append(f"gamma_minus,{xpt:.17g},{xpt:.17g}")
    for l, r in phases.coincidence:
        rows.append(f"coincidence,{l:.17g},{r:.17g}")
    cs = list(comments) + [f"tau={phases.tau:.17g} separation={phases.separation:.17g}"]
    _write_csv(path, cs, "set,left,right", rows)


def write_fit_csv(path, fit, comments=()):
    _write_csv(path, list(comments), "exponent,constant,residual", [fit.csv_row()])


def write_spectrum_csv(path, spectrum, comments=()):
    rows = [
        f"{k},{lam:.17g},{alpha:.17g}"
        for k, (lam, alpha) in enumerate(zip(spectrum.eigenvalues, spectrum.degrees), start=1)
    ]
    cs = list(comments) + [f"domain={spectrum.domain.name} a={spectrum.a:.17g}"]
    _write_csv(path, cs, "k,lambda,alpha", rows)


def write_eigenfunction(path, spectrum, index: int):
    with open(path, "w") as fh:
        fh.write("theta,f\n")
        for t, f in zip(spectrum.theta, spectrum.eigenvectors[:, index]):
            fh.write(f"{t:.17g},{f:.17g}\n")


def write_report_csv(path, report, comments=()):
    _write_csv(path, list(comments), "energy_before,energy_after,fixed_point", [report.csv_row()])
