"""Deterministic CSV/JSON writers and the flat key=value config format.

All output is byte-stable for identical inputs: floats are written with
repr(), JSON keys are sorted, and nothing time- or host-dependent is
recorded. A falsified run may not overwrite a previously passing report.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import UsageError


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_snapshot_csv(path, blocks):
    """Graph snapshots: columns t, x, f, fp, theta; one block per snapshot."""
    rows = []
    for t, xs, f, fp, theta in blocks:
        for i in range(len(xs)):
            rows.append((t, xs[i], f[i], fp[i], theta[i]))
    return write_rows_csv(path, ("t", "x", "f", "fp", "theta"), rows)


def write_monitor_csv(path, reports):
    """One row per monitor report."""
    header = ("t", "sup_fp", "fp_left", "fp_right", "lambda_max", "theta_min",
              "theta_max", "min_f", "min_fp", "argmax_fp_location")
    rows = [(r.t, r.sup_fp, r.boundary_fp[0], r.boundary_fp[1], r.lambda_max,
             r.theta_min, r.theta_max, r.min_f, r.min_fp, r.argmax_fp_location)
            for r in reports]
    return write_rows_csv(path, header, rows)


def write_curve_csv(path, snapshots):
    """Curve snapshots: columns t, idx, x, y."""
    rows = []
    for t, pts in snapshots:
        for i, (x, y) in enumerate(pts):
            rows.append((t, i, x, y))
    return write_rows_csv(path, ("t", "idx", "x", "y"), rows)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_report_json(path, report: dict):
    """Write a run report; never replace a passing report with a falsified one."""
    if os.path.exists(path) and not report.get("pass", False):
        try:
            with open(path) as fh:
                old = json.load(fh)
        except (OSError, json.JSONDecodeError):
            old = None
        if old is not None and old.get("pass", False):
            base, ext = os.path.splitext(path)
            return write_json(base + ".falsified" + ext, report)
    return write_json(path, report)


def read_xy_csv(path):
    """Two-column CSV -> (x, y) arrays; a header line is tolerated."""
    data = np.genfromtxt(path, delimiter=",", comments="#", names=None,
                         skip_header=0, invalid_raise=False)
    if data.ndim == 1:
        data = data[None, :]
    data = data[~np.isnan(data).any(axis=1)]
    if data.shape[1] < 2 or data.shape[0] < 2:
        raise UsageError(f"{path}: expected two numeric columns")
    return data[:, 0], data[:, 1]


def _coerce(raw: str):
    s = raw.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def read_config(path) -> dict:
    """Flat `key = value` document; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise UsageError(f"{path}:{lineno}: expected key = value, got {line.strip()!r}")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if not key:
                raise UsageError(f"{path}:{lineno}: empty key")
            out[key] = _coerce(raw)
    return out
