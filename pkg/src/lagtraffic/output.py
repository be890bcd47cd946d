"""CSV and plot-script emission.

All floating-point values are printed with 17 significant digits so the
files are bit-stable regression artifacts; plots are gnuplot scripts
that read the CSVs (the package itself renders nothing).
"""

from __future__ import annotations

import csv
from pathlib import Path


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_trajectory_csv(path, traj) -> Path:
    """One row per recorded cell: (t, i, z_i, y_i, w_i), i starting at 1."""
    z = traj.grid.z()

    def rows():
        for state in traj.states:
            for i in range(traj.grid.n_cells):
                yield (state.t, i + 1, z[i], state.y[i], state.w[i])

    return write_csv(path, ("t", "i", "z_i", "y_i", "w_i"), rows())


def write_cars_csv(path, tagged_states) -> Path:
    """FtL positions and densities: (model, t, i, x_i, u_i)."""

    def rows():
        for tag, state in tagged_states:
            u = state.densities()
            for i in range(state.n_cars):
                yield (tag, state.t, i + 1, state.x[i], u[i])

    return write_csv(path, ("model", "t", "i", "x_i", "u_i"), rows())


def write_density_csv(path, xs, us) -> Path:
    """Step-function samples (x, u)."""
    return write_csv(path, ("x", "u"), zip(xs, us))


def write_trace_csv(path, xi, inv_w, inv_y) -> Path:
    """Physical-coordinate trace (xi_i, 1/w_i, 1/y_i)."""
    return write_csv(path, ("xi", "inv_w", "inv_y"), zip(xi, inv_w, inv_y))


def write_gnuplot(path, title, xlabel, ylabel, plot_clauses) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        "set datafile separator ','",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set key top right",
        "plot \\",
    ]
    lines.append(", \\\n".join("    " + clause for clause in plot_clauses))
    path.write_text("\n".join(lines) + "\n")
    return path
