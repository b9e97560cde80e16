"""JSON run configuration: schema validation and conversion to a ``ProblemSpec``."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from .errors import ConfigurationError, EFKError
from .problem import (DelaySpec, Discretization, ForcingSpec, ProblemSpec, Tolerances,
                      parse_nonlinearity)


class ConfigError(ConfigurationError):
    """Schema or semantic problem in a configuration file (CLI exit code 64)."""


def _schema() -> dict:
    return json.loads(resources.files("efklab").joinpath("config_schema.json").read_text())


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunConfig:
    problem: ProblemSpec
    raw: dict
    sha256: str
    seed: int
    certificate: bool
    horizon: float
    history: dict
    fit_window: Optional[tuple[float, float]]
    output_every: int
    modes_out: int
    residual_check: bool
    residual_samples: int
    slack: float

    def meta(self, command: str) -> dict:
        return {"command": command, "config_sha256": self.sha256, "seed": self.seed}


def _modes_vector(mapping: Optional[dict], N: int) -> np.ndarray:
    a = np.zeros(N)
    for key, val in (mapping or {}).items():
        k = int(key)
        if k > N:
            raise ConfigError(f"mode {k} exceeds N={N}")
        a[k - 1] = float(val)
    return a


def from_dict(raw: dict) -> RunConfig:
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {where}: {exc.message}") from None
    try:
        delays = DelaySpec(tuple(raw["delays"]))
        betas = raw.get("betas")
        nl = parse_nonlinearity(raw.get("nonlinearity"), delays.n, betas, raw.get("K"))
        omega = raw.get("omega")
        forcing_items = raw.get("forcing", [])
        if forcing_items and omega is None and any(f.get("m", 0) for f in forcing_items):
            raise ConfigError("time-periodic forcing terms require omega")
        forcing = ForcingSpec.from_harmonics(forcing_items, omega if omega else 1.0)
        if omega is None:
            forcing = ForcingSpec(forcing.terms, None)
        disc = raw.get("discretization", {})
        tol = raw.get("tolerances", {})
        problem = ProblemSpec(
            float(raw["gamma"]), omega, delays, nl, forcing,
            Discretization(disc.get("N", 64), disc.get("M"), disc.get("h")),
            Tolerances(tol.get("picard_tol", 1e-10), tol.get("max_iters", 50), tol.get("residual_tol", 1e-6)),
        )
    except ConfigError:
        raise
    except (EFKError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    exp = raw.get("experiment", {})
    horizon = float(exp.get("horizon", 0.1))
    window = tuple(exp["fit_window"]) if "fit_window" in exp else None
    if window is not None and not window[0] < window[1]:
        raise ConfigError("experiment/fit_window must be increasing")
    history = exp.get("history", {"type": "zero"})
    _modes_vector(history.get("coeffs"), problem.discretization.N)
    _modes_vector(history.get("perturbation"), problem.discretization.N)
    return RunConfig(
        problem=problem,
        raw=raw,
        sha256=config_hash(raw),
        seed=int(raw.get("seed", 0)),
        certificate=bool(raw.get("certificate_mode", False)),
        horizon=horizon,
        history=history,
        fit_window=window,
        output_every=int(exp.get("output_every", 1)),
        modes_out=int(exp.get("modes_out", 8)),
        residual_check=bool(exp.get("residual_check", False)),
        residual_samples=int(exp.get("residual_samples", 10)),
        slack=float(exp.get("slack", 0.05)),
    )


def load(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    try:
        return from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def history_vector(cfg: RunConfig, key: str) -> np.ndarray:
    return _modes_vector(cfg.history.get(key), cfg.problem.discretization.N)


def dump(raw: dict[str, Any]) -> str:
    return json.dumps(raw, indent=2, sort_keys=True)
