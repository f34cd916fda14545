"""Deterministic JSON and CSV writers for experiment reports."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

REPORT_VERSION = 1

# column order of the CSV projection; JSON remains the source of truth
CSV_COLUMNS = (
    "alpha",
    "c_gst",
    "c_nod",
    "target_gst",
    "target_nod",
    "gap_gst",
    "gap_nod",
    "nodal_below_twice_gst",
    "separation",
    "separation_pow_Nmalpha",
    "fit_error",
    "symmetry_defect",
    "t_scale",
    "s_scale",
    "boundary_mass_gst",
    "boundary_mass_nod",
    "half_length",
    "points",
    "error",
)


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    # keep floats distinguishable from integers after a round trip
    return text if any(c in text for c in ".e") else text + ".0"


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and every float at 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def csv_rows(report: dict) -> list[dict]:
    rows = []
    for rec in report.get("records", []):
        nod = rec.get("nodal") or {}
        gst = rec.get("groundstate") or {}
        row = {
            "alpha": rec.get("alpha"),
            "c_gst": rec.get("c_gst"),
            "c_nod": rec.get("c_nod"),
            "target_gst": rec.get("target_gst"),
            "target_nod": rec.get("target_nod"),
            "gap_gst": rec.get("gap_gst"),
            "gap_nod": rec.get("gap_nod"),
            "nodal_below_twice_gst": rec.get("nodal_below_twice_gst"),
            "separation": nod.get("separation"),
            "separation_pow_Nmalpha": nod.get("separation_pow_Nmalpha"),
            "fit_error": nod.get("fit_error"),
            "symmetry_defect": nod.get("symmetry_defect"),
            "t_scale": nod.get("t_scale"),
            "s_scale": nod.get("s_scale"),
            "boundary_mass_gst": gst.get("boundary_mass"),
            "boundary_mass_nod": nod.get("boundary_mass"),
            "half_length": (rec.get("box") or {}).get("half_length"),
            "points": (rec.get("box") or {}).get("points"),
            "error": rec.get("error"),
        }
        rows.append(row)
    return rows


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else format(float(v), ".17g")
    return str(v)


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in csv_rows(report):
        w.writerow([_csv_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(report: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(report))
    return path
