"""CSV and JSON persistence.

Floats are written with ``repr`` so that every value round-trips exactly;
the determinism contract of the harness depends on that.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def fmt(x):
    return repr(float(x))


def write_trajectory_csv(path, traj):
    """One row per node: r followed by u at each snapshot time.

    The header carries the snapshot times; trajectories computed on a flow get
    an extra ``s(t)`` row with the metric scale at each time.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["r"] + [fmt(t) for t in traj.times])
        if traj.scales is not None:
            out.writerow(["s(t)"] + [fmt(s) for s in traj.scales])
        for i, r in enumerate(traj.grid.r):
            out.writerow([fmt(r)] + [fmt(v) for v in traj.values[:, i]])
    return path


def read_trajectory_csv(path):
    """Return (r, times, values[snapshot, node], scales or None)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    times = np.array([float(x) for x in rows[0][1:]])
    scales = None
    body = rows[1:]
    if body and body[0][0] == "s(t)":
        scales = np.array([float(x) for x in body[0][1:]])
        body = body[1:]
    data = np.array([[float(x) for x in row] for row in body])
    return data[:, 0], times, data[:, 1:].T.copy(), scales


def write_field_csv(path, r, times, field):
    """Same layout as trajectories, for residual and derived fields."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["r"] + [fmt(t) for t in times])
        for i, x in enumerate(r):
            out.writerow([fmt(x)] + [fmt(v) for v in field[:, i]])
    return path


def write_table_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def dumps(obj):
    """Canonical JSON: sorted keys, fixed indentation."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def write_json(path, obj):
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    return path
