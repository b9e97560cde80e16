"""CSV / JSON / NDJSON writers with embedded run metadata.

CSV files start with ``# key=value`` comment lines (config hash, seed, command),
then a mandatory header row.  Floats are written with 17 significant digits so
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .history import Trajectory
from .spectral_core import SpectralField


def _fmt(x) -> str:
    return format(float(x) + 0.0, ".17g")   # + 0.0 turns -0 into 0


def _clean(obj):
    """Make ``obj`` strict-JSON safe (non-finite floats become ``null``)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, payload: dict, meta: Optional[dict] = None) -> Path:
    path = Path(path)
    body = dict(payload)
    if meta is not None:
        body["meta"] = meta
    path.write_text(dumps(body), newline="\n")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[float]], meta: Optional[dict] = None) -> Path:
    path = Path(path)
    lines = [f"# {k}={v}" for k, v in sorted((meta or {}).items())]
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(x) for x in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def trajectory_rows(traj: Trajectory, J: int, t_min: float = -math.inf, every: int = 1, extra=None):
    J = min(J, traj.N)
    keep = np.flatnonzero(traj.times >= t_min)[::every]
    norms = traj.norms()
    header = ["t", "norm_l2"] + [f"a_{k}" for k in range(1, J + 1)]
    cols = [traj.times[keep], norms[keep]] + [traj.values[keep, k] for k in range(J)]
    if extra:
        for name, values in extra.items():
            header.append(name)
            cols.append(np.asarray(values))
    return header, list(zip(*cols)), keep


def write_trajectory_csv(path, traj: Trajectory, J: int = 8, meta=None, t_min: float = -math.inf,
                         every: int = 1, extra=None) -> Path:
    """``t,norm_l2,a_1,...,a_J`` (plus any ``extra`` columns aligned to the kept rows)."""
    header, rows, _ = trajectory_rows(traj, J, t_min, every, extra)
    return write_csv(path, header, rows, meta)


def write_snapshots(path, traj: Trajectory, meta=None, t_min: float = -math.inf, every: int = 1) -> Path:
    """Newline-delimited JSON, one ``{"t": ..., "coeffs": [...]}`` record per knot."""
    path = Path(path)
    lines = []
    if meta is not None:
        lines.append(json.dumps({"meta": meta}, sort_keys=True))
    for i in np.flatnonzero(traj.times >= t_min)[::every]:
        lines.append(json.dumps({"t": float(traj.times[i]), "coeffs": [float(a) for a in traj.values[i]]}))
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def field_to_csv(path, u: SpectralField) -> Path:
    return write_csv(path, ["k", "a_k"], ((k, a) for k, a in enumerate(u.coeffs, start=1)))


def field_from_csv(path) -> SpectralField:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=1, ndmin=2)
    order = np.argsort(data[:, 0])
    return SpectralField(data[order, 1])


def field_to_json(u: SpectralField) -> str:
    return json.dumps({"coeffs": [float(a) for a in u.coeffs]})


def field_from_json(text: str) -> SpectralField:
    return SpectralField(json.loads(text)["coeffs"])


def read_csv(path) -> tuple[list[str], np.ndarray, dict]:
    """Header, numeric rows and ``# key=value`` metadata of a file written here."""
    meta, header, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(x) for x in line.split(",")])
    return header, np.array(rows, dtype=float).reshape(-1, len(header)), meta
