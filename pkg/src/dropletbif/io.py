"""JSON and CSV persistence for scans, orbits, manifolds, slices and fixed points."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .fixedpoints import FixedPointRecord
from .manifold import ManifoldPolyline
from .scan import ScanEvent, ScanResult, SigmaDiagnostics

__all__ = [
    "SCHEMA_VERSION",
    "scan_to_dict",
    "scan_from_dict",
    "dumps_scan",
    "loads_scan",
    "write_scan",
    "read_scan",
    "fmt",
    "write_orbit_csv",
    "read_points_csv",
    "write_manifold_csv",
    "write_boundary_csv",
    "write_fixed_points",
    "fixed_points_to_list",
    "spill_name",
]

SCHEMA_VERSION = 1


def fmt(v: float) -> str:
    """17 significant digits: enough to reproduce every float64 exactly."""
    return format(float(v), ".17g")


def _diag_to_dict(d: SigmaDiagnostics) -> dict:
    return {
        "sigma": d.sigma,
        "lyapunov": None if d.lyapunov is None else list(d.lyapunov),
        "rotation_number": d.rotation_number,
        "radial_spread": d.radial_spread,
        "delta": d.delta,
        "flip_count": d.flip_count,
        "escaped": d.escaped,
        "bbox": [list(b) for b in d.bbox],
        "hetero_flip_count": d.hetero_flip_count,
        "line_crossings": d.line_crossings,
        "center_modulus": d.center_modulus,
        "branch_flips": None if d.branch_flips is None else list(d.branch_flips),
    }


def _diag_from_dict(d: dict) -> SigmaDiagnostics:
    tup = lambda v: None if v is None else tuple(v)
    return SigmaDiagnostics(
        sigma=d["sigma"],
        lyapunov=tup(d["lyapunov"]),
        rotation_number=d["rotation_number"],
        radial_spread=d["radial_spread"],
        delta=d["delta"],
        flip_count=d["flip_count"],
        escaped=d["escaped"],
        bbox=tuple(tuple(b) for b in d["bbox"]),
        hetero_flip_count=d.get("hetero_flip_count"),
        line_crossings=d.get("line_crossings"),
        center_modulus=d.get("center_modulus"),
        branch_flips=tup(d.get("branch_flips")),
    )


def scan_to_dict(result: ScanResult) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "map": result.map,
        "mu": result.mu,
        "beta": result.beta,
        "sigma_grid": list(result.sigma_grid),
        "diagnostics": [_diag_to_dict(d) for d in result.diagnostics],
        "events": [
            {"kind": e.kind, "sigma_low": e.sigma_low, "sigma_high": e.sigma_high, "evidence": e.evidence}
            for e in result.events
        ],
        "assumption_report": result.assumption_report,
        "seed": result.seed,
        "timestamp": result.timestamp,
    }


def scan_from_dict(doc: dict) -> ScanResult:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported scan schema {doc.get('schema')!r}")
    return ScanResult(
        map=doc["map"],
        mu=doc["mu"],
        beta=doc["beta"],
        sigma_grid=tuple(doc["sigma_grid"]),
        diagnostics=tuple(_diag_from_dict(d) for d in doc["diagnostics"]),
        events=tuple(ScanEvent(e["kind"], e["sigma_low"], e["sigma_high"], e["evidence"])
                     for e in doc["events"]),
        assumption_report=doc["assumption_report"],
        seed=doc["seed"],
        timestamp=doc["timestamp"],
    )


def _plain(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def dumps_scan(result: ScanResult) -> str:
    # json writes floats with the shortest repr that parses back to the same bits
    return json.dumps(scan_to_dict(result), indent=1, allow_nan=False, default=_plain) + "\n"


def loads_scan(text: str) -> ScanResult:
    return scan_from_dict(json.loads(text))


def write_scan(result: ScanResult, path) -> Path:
    path = Path(path)
    path.write_text(dumps_scan(result))
    return path


def read_scan(path) -> ScanResult:
    return loads_scan(Path(path).read_text())


def _write_rows(path, header: list[str], rows: Iterable[list]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_orbit_csv(sample, path) -> Path:
    sample = np.asarray(sample, dtype=float)
    dim = sample.shape[1] if sample.ndim == 2 else 2
    header = ["n", "x", "y"] + (["z"] if dim == 3 else [])
    return _write_rows(path, header, ([i, *map(float, p)] for i, p in enumerate(sample)))


def write_manifold_csv(poly: ManifoldPolyline, path) -> Path:
    pts = poly.points
    dim = pts.shape[1]
    header = ["generation", "index", "x", "y"] + (["z"] if dim == 3 else []) + ["arclength"]
    rows = ([int(g), i, *map(float, p), float(s)]
            for i, (g, p, s) in enumerate(zip(poly.generation_of, pts, poly.arclengths)))
    return _write_rows(path, header, rows)


def write_boundary_csv(points, path) -> Path:
    return _write_rows(path, ["x", "y"], ([float(x), float(y)] for x, y in np.asarray(points)))


def read_points_csv(path) -> np.ndarray:
    """Read the x, y columns of any of the CSV schemas above; empty file → (0, 2)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return np.zeros((0, 2))
    header = rows[0]
    try:
        ix, iy = header.index("x"), header.index("y")
    except ValueError:
        raise ValueError(f"{path}: missing x/y columns") from None
    data = [(float(r[ix]), float(r[iy])) for r in rows[1:] if r]
    return np.array(data, dtype=float).reshape(-1, 2)


def fixed_points_to_list(records: list[FixedPointRecord]) -> list[dict]:
    out = []
    for r in records:
        out.append({
            "location": [float(v) for v in r.location],
            "classification": r.classification.value,
            "family": r.family,
            "residual": r.residual,
            "eigenvalues": [[float(l.real), float(l.imag)] for l in r.eigenvalues],
            "moduli": [float(abs(l)) for l in r.eigenvalues],
        })
    return out


def write_fixed_points(records: list[FixedPointRecord], json_path=None, csv_path=None, dim: int = 2):
    if json_path is not None:
        Path(json_path).write_text(json.dumps(fixed_points_to_list(records), indent=1) + "\n")
    if csv_path is not None:
        coords = ["x", "y", "z"][:dim]
        header = coords + ["classification", "family", "residual"] + [f"modulus{i + 1}" for i in range(dim)]
        rows = ([*map(float, r.location), r.classification.value, r.family, float(r.residual),
                 *[float(abs(l)) for l in r.eigenvalues]] for r in records)
        _write_rows(csv_path, header, rows)


def spill_name(sigma: float) -> str:
    return f"orbit_sigma_{sigma:.6f}.csv"
