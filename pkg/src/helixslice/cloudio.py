"""Cloud file formats (CSV, ASCII PLY) and YAML run reports.

CSV is the native format: header ``x,y,z[,turn,t,phi][,label]``, one point
per row, dot-decimal floats serialized with 17 significant digits so
write -> read is an exact round trip, newline ``\\n``.  Truth columns are all
present or all absent; the label column appears only for labeled clouds.
PLY ingestion accepts ASCII files with float x,y,z vertex properties (no
truth).  Reports are single YAML documents with a schema_version field.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
import yaml

from .geometry import TWO_PI, PointCloud, Provenance

SCHEMA_VERSION = 1

_TRUTH_COLS = ("turn", "t", "phi")


class FileFormatError(ValueError):
    """Malformed cloud file; message carries the offending line number."""


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_cloud(cloud, path) -> None:
    """Write a PointCloud or LabeledCloud as CSV (label column only when
    labeled; row order = point order)."""
    labels = None
    if hasattr(cloud, "cloud"):          # LabeledCloud
        labels = np.asarray(cloud.labels)
        cloud = cloud.cloud
    cols = ["x", "y", "z"]
    if cloud.has_truth:
        cols += list(_TRUTH_COLS)
    if labels is not None:
        cols.append("label")
    lines = [",".join(cols)]
    for i in range(len(cloud)):
        row = [_fmt(v) for v in cloud.xyz[i]]
        if cloud.has_truth:
            row += [str(int(cloud.turn[i])), _fmt(cloud.t[i]), _fmt(cloud.phi[i])]
        if labels is not None:
            row.append(str(int(labels[i])))
        lines.append(",".join(row))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def _parse_float(text: str, line_no: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise FileFormatError(f"line {line_no}: column {col!r}: not a number: {text!r}") from None
    if not math.isfinite(v):
        raise FileFormatError(f"line {line_no}: column {col!r}: non-finite value {text!r}")
    return v


def _read_csv(path, degrees: bool):
    with open(path) as f:
        header_line = f.readline()
        if not header_line:
            raise FileFormatError("line 1: empty file, expected header x,y,z[,turn,t,phi][,label]")
        header = [h.strip() for h in header_line.strip().split(",")]
        want_truth = all(c in header for c in _TRUTH_COLS)
        has_some_truth = any(c in header for c in _TRUTH_COLS)
        has_label = "label" in header
        expect = ["x", "y", "z"] + (list(_TRUTH_COLS) if want_truth else []) + (["label"] if has_label else [])
        if header != expect or (has_some_truth and not want_truth):
            raise FileFormatError(
                f"line 1: bad header {','.join(header)!r}, expected x,y,z[,turn,t,phi][,label]")
        idx = {c: i for i, c in enumerate(header)}
        xyz, turn, t, phi, labels = [], [], [], [], []
        for line_no, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise FileFormatError(
                    f"line {line_no}: expected {len(header)} fields, got {len(parts)}")
            xyz.append([_parse_float(parts[idx[c]], line_no, c) for c in ("x", "y", "z")])
            if want_truth:
                turn_v = _parse_float(parts[idx["turn"]], line_no, "turn")
                if turn_v != int(turn_v) or turn_v < 0:
                    raise FileFormatError(f"line {line_no}: turn must be a non-negative integer")
                turn.append(int(turn_v))
                t.append(_parse_float(parts[idx["t"]], line_no, "t"))
                phi.append(_parse_float(parts[idx["phi"]], line_no, "phi"))
            if has_label:
                lab = _parse_float(parts[idx["label"]], line_no, "label")
                if lab != int(lab) or lab < 0:
                    raise FileFormatError(f"line {line_no}: label must be a non-negative integer")
                labels.append(int(lab))
    if not xyz:
        raise FileFormatError("line 2: no data rows")
    scale = math.pi / 180.0 if degrees else 1.0
    if want_truth:
        t_rad = np.asarray(t, dtype=np.float64) * scale
        expect = np.floor(t_rad / TWO_PI).astype(np.int64)
        bad = np.flatnonzero(expect != np.asarray(turn, dtype=np.int64))
        if len(bad):
            i = int(bad[0])
            raise FileFormatError(
                f"line {i + 2}: turn={turn[i]} inconsistent with t={t[i]} "
                f"(expected floor(t / 2pi) = {expect[i]})")
    cloud = PointCloud(
        np.asarray(xyz, dtype=np.float64),
        turn=np.asarray(turn, dtype=np.int64) if want_truth else None,
        t=np.asarray(t, dtype=np.float64) * scale if want_truth else None,
        phi=np.asarray(phi, dtype=np.float64) * scale if want_truth else None,
        provenance=Provenance("external"),
    )
    return cloud, (np.asarray(labels, dtype=np.int64) if has_label else None)


def _read_ply(path):
    xyz_cols = {}
    n_vertex = None
    with open(path) as f:
        line = f.readline().strip()
        line_no = 1
        if line != "ply":
            raise FileFormatError("line 1: not a PLY file (missing 'ply' magic)")
        fmt_seen = False
        prop_index = 0
        in_vertex = False
        while True:
            raw = f.readline()
            line_no += 1
            if not raw:
                raise FileFormatError(f"line {line_no}: unexpected end of header")
            line = raw.strip()
            if line.startswith("comment"):
                continue
            if line.startswith("format"):
                if "ascii" not in line:
                    raise FileFormatError(f"line {line_no}: only ASCII PLY is supported")
                fmt_seen = True
            elif line.startswith("element"):
                parts = line.split()
                in_vertex = len(parts) == 3 and parts[1] == "vertex"
                if in_vertex:
                    n_vertex = int(parts[2])
                    prop_index = 0
            elif line.startswith("property"):
                if in_vertex:
                    name = line.split()[-1]
                    if name in ("x", "y", "z"):
                        xyz_cols[name] = prop_index
                    prop_index += 1
            elif line == "end_header":
                break
        if not fmt_seen:
            raise FileFormatError("header: missing 'format ascii' line")
        if n_vertex is None or len(xyz_cols) != 3:
            raise FileFormatError("header: need a vertex element with x,y,z properties")
        xyz = np.empty((n_vertex, 3), dtype=np.float64)
        for i in range(n_vertex):
            raw = f.readline()
            line_no += 1
            if not raw:
                raise FileFormatError(f"line {line_no}: expected {n_vertex} vertices, file ended at {i}")
            parts = raw.split()
            for j, c in enumerate(("x", "y", "z")):
                if xyz_cols[c] >= len(parts):
                    raise FileFormatError(f"line {line_no}: vertex row too short")
                xyz[i, j] = _parse_float(parts[xyz_cols[c]], line_no, c)
    return PointCloud(xyz, provenance=Provenance("external")), None


def read_cloud(path, fmt: Optional[str] = None, degrees: bool = False):
    """Read a cloud; returns (PointCloud, labels-or-None).

    fmt is 'csv' or 'ply'; None infers from the extension (default csv).
    degrees converts t and phi columns from degrees on ingest.
    """
    if fmt is None:
        fmt = "ply" if str(path).lower().endswith(".ply") else "csv"
    if fmt == "csv":
        return _read_csv(path, degrees)
    if fmt == "ply":
        return _read_ply(path)
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _pyify(obj):
    """Recursively convert numpy scalars/arrays for clean YAML emission."""
    if isinstance(obj, dict):
        return {k: _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_pyify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_report(report: dict, path) -> None:
    """Emit a report as a deterministic single-document YAML file."""
    with open(path, "w", newline="") as f:
        yaml.safe_dump(_pyify(report), f, sort_keys=False, default_flow_style=False)


def read_report(path) -> dict:
    with open(path) as f:
        return yaml.safe_load(f)
