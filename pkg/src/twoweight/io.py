"""JSON and CSV serialisation of measures, grids, inner functions and reports."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .dyadic import Grid
from .measures import Measure1D, Measure2D


def measure_to_dict(m) -> dict:
    """{"domain": ..., "atoms": [[pos, mass], ...]}; planar atoms are [x1, x2, mass]."""
    if isinstance(m, Measure1D):
        atoms = [[float(t), float(a)] for t, a in zip(m.positions, m.masses)]
    else:
        atoms = [[float(x1), float(x2), float(a)] for (x1, x2), a in zip(m.points, m.masses)]
    return {"domain": m.domain, "atoms": atoms}


def _flatten_atom(a) -> list:
    out = []
    for v in a:
        out.extend(v if isinstance(v, (list, tuple)) else [v])
    return [float(v) for v in out]


def measure_from_dict(d: dict):
    """Inverse of ``measure_to_dict``; also reads [[pos...], mass] atoms and
    the column form {"positions"|"points": ..., "masses": ...}."""
    if "atoms" in d:
        atoms = [_flatten_atom(a) for a in d["atoms"]]
        dim = len(atoms[0]) - 1 if atoms else (2 if d.get("domain") in ("half-plane", "disk") else 1)
        if any(len(a) != dim + 1 for a in atoms):
            raise ValueError("atoms must all have the same length")
        if dim == 1:
            return Measure1D([a[0] for a in atoms], [a[1] for a in atoms], d.get("domain", "line"))
        return Measure2D(np.asarray([a[:2] for a in atoms], dtype=float).reshape(-1, 2),
                         [a[2] for a in atoms], d.get("domain", "half-plane"))
    if "positions" in d:
        return Measure1D(d["positions"], d["masses"], d.get("domain", "line"))
    return Measure2D(np.asarray(d["points"], dtype=float).reshape(-1, 2), d["masses"],
                     d.get("domain", "half-plane"))


def load_measure(path) -> Measure1D | Measure2D:
    """Measure from a JSON file, or from a CSV with columns position,mass or x1,x2,mass."""
    path = Path(path)
    if path.suffix == ".csv":
        rows = list(csv.DictReader(path.open()))
        if rows and "position" in rows[0]:
            dom = rows[0].get("domain") or "line"
            return Measure1D([float(r["position"]) for r in rows], [float(r["mass"]) for r in rows], dom)
        dom = (rows[0].get("domain") if rows else None) or "half-plane"
        return Measure2D([(float(r["x1"]), float(r["x2"])) for r in rows], [float(r["mass"]) for r in rows], dom)
    return measure_from_dict(json.loads(path.read_text()))


def measure_csv(m) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(m, Measure1D):
        w.writerow(["position", "mass", "domain"])
        for t, a in zip(m.positions, m.masses):
            w.writerow([repr(float(t)), repr(float(a)), m.domain])
    else:
        w.writerow(["x1", "x2", "mass", "domain"])
        for (x1, x2), a in zip(m.points, m.masses):
            w.writerow([repr(float(x1)), repr(float(x2)), repr(float(a)), m.domain])
    return buf.getvalue()


def grid_to_json(grid: Grid) -> str:
    return json.dumps(grid.to_dict(), sort_keys=True)


def grid_from_json(text: str) -> Grid:
    return Grid.from_dict(json.loads(text))


def _clean(obj):
    """Make numpy scalars/arrays and non-finite floats JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_clean(v) for v in r])
    return buf.getvalue()


def flat_rows(d: dict, prefix: str = "") -> list:
    """(key, value) pairs of a nested dict with dotted keys; lists are JSON-encoded."""
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(flat_rows(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out.append((key, json.dumps(_clean(v))))
        else:
            out.append((key, _clean(v)))
    return out


def write_report(out_dir, name: str, data: dict, fmt: str = "json", rows=None, header=None) -> Path:
    """Write ``name.json`` or ``name.csv``; CSV uses ``rows`` when given, else flattened keys."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out_dir / f"{name}.json"
        path.write_text(dumps(data))
    elif fmt == "csv":
        path = out_dir / f"{name}.csv"
        if rows is None:
            header, rows = ["key", "value"], flat_rows(data)
        path.write_text(rows_csv(header, rows))
    else:
        raise ValueError("format must be json or csv")
    return path
