"""Curve and table writers with exact float round-trips."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import fields
from enum import Enum
from pathlib import Path

import numpy as np

CURVE_COLUMNS = ("t", "x", "y", "z", "r", "theta", "kappa", "tau")
FLOAT_FMT = "{:.17g}"


def _fmt(v):
    return FLOAT_FMT.format(float(v))


def jsonable(obj):
    """Recursively convert numpy scalars/arrays, enums and dataclass-like objects for ``json``."""
    if isinstance(obj, dict):
        return {str(jsonable_key(k)): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def jsonable_key(k):
    return k.value if isinstance(k, Enum) else k


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # repr-precision floats; sorted keys keep output byte-stable
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def write_table_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def curve_rows(curve):
    return zip(*(getattr(curve, col) for col in CURVE_COLUMNS))


def write_curve(curve, path, fmt="csv", meta=None):
    """Write ``curve`` as csv, json or obj.  Returns the written paths (curve, sidecar)."""
    path = Path(path)
    meta = dict(meta or {})
    if fmt == "csv":
        write_table_csv(path, CURVE_COLUMNS, curve_rows(curve))
    elif fmt == "obj":
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            fh.write("o rod\n")
            for x, y, z in zip(curve.x, curve.y, curve.z):
                fh.write(f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}\n")
            fh.write("l " + " ".join(str(i) for i in range(1, len(curve.x) + 1)) + "\n")
    elif fmt == "json":
        payload = {col: getattr(curve, col) for col in CURVE_COLUMNS}
        payload["meta"] = meta
        write_json(path, payload)
        return path, path
    else:
        raise ValueError(f"unknown format {fmt!r}")
    side = sidecar_path(path)
    write_json(side, meta)
    return path, side


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".json")


def read_curve(path):
    """Columns of a curve file written by ``write_curve`` (csv or json) as float arrays."""
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        return {col: np.asarray(data[col], dtype=float) for col in CURVE_COLUMNS}, data.get("meta", {})
    with path.open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    arr = np.array(body, dtype=float)
    cols = {name: arr[:, i] for i, name in enumerate(header)}
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    return cols, meta


def default_outdir():
    return Path(os.environ.get("ELASTICRODS_OUT", "."))


def curve_meta(curve, tolerance=1e-8, extra=None):
    """Sidecar content for a synthesized curve: point, constants, residuals and versions."""
    from . import __version__
    import scipy

    from .rodsynth import verify_first_integrals

    c = curve.constants
    rep = verify_first_integrals(curve, tolerance)
    meta = {
        "versions": {"elasticrods": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "point": {"X": c.X, "Y": c.Y, "p": c.p, "phi": c.phi},
        "constants": {f.name: getattr(c, f.name) for f in fields(c)},
        "periods": curve.periods,
        "samples": len(curve.t),
        "delta_theta": curve.delta_theta,
        "closure_gap": curve.closure_gap,
        "method": curve.meta.get("method", "closed"),
        "tolerances": {"first_integrals": tolerance},
        "residuals": {k: v for k, v in rep.as_dict().items() if k not in ("tolerance", "ok")},
    }
    meta.update(extra or {})
    return meta


def reverify(path):
    """Re-read a curve file and recompute its first-integral residuals.

    Returns ``(recorded, recomputed)`` residual dicts.  The constants are rebuilt
    from the exact point stored in the sidecar.
    """
    from .paramspace import DiskPoint, derive_constants
    from .rodsynth import J_field, RodCurve, verify_first_integrals

    cols, meta = read_curve(path)
    pt = meta["point"]
    c = derive_constants(DiskPoint(pt["X"], pt["Y"], pt["p"], pt["phi"]))
    J = J_field(cols["t"], c, cols["theta"])
    curve = RodCurve(J=J, constants=c, periods=meta["periods"], delta_theta=meta["delta_theta"],
                     closure_gap=meta["closure_gap"], **cols)
    rep = verify_first_integrals(curve, meta["tolerances"]["first_integrals"]).as_dict()
    recomputed = {k: rep[k] for k in meta["residuals"]}
    return meta["residuals"], recomputed
