"""Text formats for time series, Wigner grids and run metadata.

All writers use ``\\n`` line endings and ``.`` decimals.  Floating values are
printed with a fixed number of significant digits: 9 by default, 17 in golden
mode (enough to round-trip every double exactly).
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from .wigner import WignerGrid

DEFAULT_DIGITS = 9
GOLDEN_DIGITS = 17
GRID_MAGIC = "# pdnr-wigner-grid 1"


def fmt(value, digits=DEFAULT_DIGITS):
    """Scientific notation with ``digits`` significant digits; empty string for None/nan."""
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return ""
    return f"{value:.{digits - 1}e}"


def params_hash(params_dict):
    """Short stable digest of a parameter mapping."""
    canon = json.dumps(params_dict, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def write_timeseries_csv(path, times, mean_n, stderr_n=None, digits=DEFAULT_DIGITS):
    lines = ["t,mean_n,stderr_n"]
    for i, t in enumerate(times):
        se = "" if stderr_n is None else fmt(stderr_n[i], digits)
        lines.append(f"{fmt(t, digits)},{fmt(mean_n[i], digits)},{se}")
    _write(path, "\n".join(lines) + "\n")


def read_timeseries_csv(path):
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if header != "t,mean_n,stderr_n":
            raise ValueError(f"unexpected time-series header {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    t = np.array([float(r[0]) for r in rows])
    n = np.array([float(r[1]) for r in rows])
    se = np.array([float(r[2]) if r[2] else np.nan for r in rows])
    return t, n, se


def write_timeseries_json(path, times, mean_n, stderr_n=None):
    doc = {"t": [float(x) for x in times], "mean_n": [float(x) for x in mean_n],
           "stderr_n": None if stderr_n is None else [float(x) for x in stderr_n]}
    _write(path, json.dumps(doc, indent=1) + "\n")


def format_wigner_grid(grid, digits=DEFAULT_DIGITS):
    """Matrix text: header block, then one row per x index."""
    head = [
        GRID_MAGIC,
        f"# time = {'none' if grid.time is None else repr(float(grid.time))}",
        f"# params_hash = {grid.params_hash or 'none'}",
        f"# nx = {grid.x_axis.size}",
        f"# ny = {grid.y_axis.size}",
        "# x_axis = " + " ".join(repr(float(v)) for v in grid.x_axis),
        "# y_axis = " + " ".join(repr(float(v)) for v in grid.y_axis),
        f"# digits = {digits}",
    ]
    rows = [" ".join(fmt(v, digits) for v in row) for row in grid.values]
    return "\n".join(head + rows) + "\n"


def parse_wigner_grid(text):
    lines = text.split("\n")
    if not lines or lines[0] != GRID_MAGIC:
        raise ValueError("not a Wigner grid file")
    header = {}
    body = []
    for line in lines[1:]:
        if line.startswith("# "):
            key, _, val = line[2:].partition(" = ")
            header[key] = val
        elif line:
            body.append(line)
    x_axis = np.array([float(v) for v in header["x_axis"].split()])
    y_axis = np.array([float(v) for v in header["y_axis"].split()])
    values = np.array([[float(v) for v in row.split()] for row in body])
    if values.shape != (x_axis.size, y_axis.size):
        raise ValueError(f"grid body shape {values.shape} does not match axes")
    time = None if header.get("time", "none") == "none" else float(header["time"])
    ph = header.get("params_hash", "none")
    grid = WignerGrid(x_axis=x_axis, y_axis=y_axis, values=values, time=time,
                      params_hash="" if ph == "none" else ph)
    return grid, int(header.get("digits", DEFAULT_DIGITS))


def write_wigner_grid(path, grid, digits=DEFAULT_DIGITS):
    _write(path, format_wigner_grid(grid, digits))


def read_wigner_grid(path):
    with open(path, newline="") as fh:
        return parse_wigner_grid(fh.read())[0]


def format_wigner_csv(grid, digits=DEFAULT_DIGITS):
    lines = ["x,y,w"]
    for i, x in enumerate(grid.x_axis):
        sx = fmt(x, digits)
        for j, y in enumerate(grid.y_axis):
            lines.append(f"{sx},{fmt(y, digits)},{fmt(grid.values[i, j], digits)}")
    return "\n".join(lines) + "\n"


def write_wigner_csv(path, grid, digits=DEFAULT_DIGITS):
    _write(path, format_wigner_csv(grid, digits))


def write_json(path, doc):
    _write(path, json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
