"""CSV/JSON writers and readers.  Every CSV gets a JSON sidecar with the same
stem that carries metadata and the resolved run configuration."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ground_state import RadialProfile
from .reduced_functional import CriticalPointList, ScalarField2D

__all__ = [
    "jsonable",
    "write_json",
    "read_json",
    "sidecar",
    "write_profile",
    "write_beta_table",
    "write_field",
    "read_field",
    "write_critical_points",
]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def jsonable(obj):
    """Recursively convert numpy scalars, enums and NaN/inf into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def sidecar(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_profile(prof: RadialProfile, path, config=None) -> Path:
    """``r,U,dU`` samples plus a sidecar with the amplitude and tail constant."""
    rows = zip(prof.r, prof.U, prof.dU)
    _write_rows(path, ("r", "U", "dU"), rows)
    write_json(sidecar(path), {
        "n": prof.n, "q": prof.q, "s_star": prof.s_star, "tail_coeff": prof.tail_coeff,
        "r_max": prof.r_max, "r_resolved": prof.r_resolved, "ode_residual": prof.ode_residual,
        "config": config or {},
    })
    return Path(path)


def write_beta_table(rows, path, config=None) -> Path:
    from .moments import BetaRow

    _write_rows(path, BetaRow.CSV_COLUMNS, (r.csv_row() for r in rows))
    mirror = []
    for r in rows:
        d = {c: getattr(r, c) for c in BetaRow.CSV_COLUMNS}
        d["reason"] = r.reason
        if r.identities is not None:
            rep = r.identities
            d["identities"] = {
                "nehari_res": rep.nehari_res, "equ2_res": rep.equ2_res,
                "equp_res": rep.equp_res, "ziquartic_res": rep.ziquartic_res,
                "thm61_res": rep.thm61_res, "pass": rep.passed,
            }
        mirror.append(d)
    write_json(sidecar(path), {"rows": mirror, "config": config or {}})
    return Path(path)


def write_field(field: ScalarField2D, path, config=None, extra=None) -> Path:
    """Matrix CSV (one grid row per line, x fastest) with header sidecar."""
    _write_rows(path, None, field.values)
    meta = {"nx": field.nx, "ny": field.ny, "L1": field.L1, "L2": field.L2,
            "config": config or {}}
    if extra:
        meta.update(extra)
    write_json(sidecar(path), meta)
    return Path(path)


def read_field(path) -> ScalarField2D:
    path = Path(path)
    side = sidecar(path)
    if not path.exists() or not side.exists():
        raise ConfigError(f"field file {path} or its sidecar {side} is missing")
    meta = read_json(side)
    try:
        vals = np.loadtxt(path, delimiter=",", ndmin=2)
        return ScalarField2D(int(meta["nx"]), int(meta["ny"]), float(meta["L1"]),
                             float(meta["L2"]), vals)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed field file {path}: {exc}") from exc


def write_critical_points(cps: CriticalPointList, path, config=None) -> Path:
    rows = ((e.ix, e.iy, e.value, e.type.value) for e in cps)
    _write_rows(path, ("ix", "iy", "value", "type"), rows)
    write_json(sidecar(path), {"counts": cps.counts(), "config": config or {}})
    return Path(path)
