"""Run configuration: a flat JSON document with typed keys and derived defaults."""
from __future__ import annotations

import json
import math
from pathlib import Path

from .model import BandPair, Driving, SpectralModel

SCHEMA_VERSION = "1.0"


class ConfigError(ValueError):
    pass


# key -> (types, default); None defaults are derived in `resolve`
SCHEMA: dict[str, tuple[tuple[type, ...], object]] = {
    # model
    "gamma0": ((float, int), 0.005),
    "cutoff": ((float, int, type(None)), None),  # 20 omega_r
    "m": ((float, int), 1.0),
    "split_R": ((float, int), 0.5),
    "omega_r": ((float, int, type(None)), None),  # 800 gamma0
    "delta": ((float, int, type(None)), None),  # 10 gamma0
    "omega_d": ((float, int, type(None)), None),  # omega_r - delta
    "V": ((float, int, type(None)), None),  # omega_r**2 / 32
    # bands
    "omega_i": ((float, int, type(None)), None),  # omega_d - delta
    "omega_j": ((float, int, type(None)), None),  # omega_d - omega_i
    "delta_omega": ((float, int), 1e-3),
    "mass_ratio": ((float, int), 10.0),
    "T_R": ((float, int), 0.0),
    "T_L": ((float, int), 0.0),
    # time and sweeps
    "t": ((float, int, type(None)), None),  # 20 / gamma0
    "t_points": ((int,), 200),
    "omega_min": ((float, int, type(None)), None),
    "omega_max": ((float, int, type(None)), None),
    "n_points": ((int,), 100),
    "grid": ((str,), "figure"),  # figure | uniform
    "cycle_points": ((int,), 16),
    "panel": ((str,), "a"),
    "temperatures": ((list, type(None)), None),
    "threshold_factors": ((list,), [0.7, 1.5]),
    # numerics
    "k_max": ((int,), 4),
    "order": ((int,), 2),
    "method": ((str,), "recursion"),
    "mode": ((str,), "exact"),
    "strict": ((bool,), False),
    # oracle
    "oracle": ((bool,), False),
    "oracle_halfwidth": ((float, int), 0.1),
    "oracle_coarse": ((float, int), 0.02),
    "oracle_steps_per_period": ((int,), 160),
    "oracle_record_periods": ((int,), 100),
}

CHOICES = {
    "grid": ("figure", "uniform"),
    "panel": ("a", "b", "c"),
    "method": ("recursion", "exact"),
    "mode": ("exact", "longtime"),
}


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load(path: str | None, overrides: list[str] | None = None) -> dict:
    raw: dict = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw.pop("schema_version", None)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        raw[key.strip()] = parse_value(val)
    return resolve(raw)


def resolve(raw: dict) -> dict:
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {}
    for key, (types, default) in SCHEMA.items():
        val = raw.get(key, default)
        if isinstance(val, bool) and bool not in types:
            raise ConfigError(f"{key}: expected number, got bool")
        if not isinstance(val, types):
            raise ConfigError(f"{key}: expected {'/'.join(t.__name__ for t in types)}, "
                              f"got {type(val).__name__}")
        if isinstance(val, int) and not isinstance(val, bool) and float in types:
            val = float(val)
        cfg[key] = val
    for key, allowed in CHOICES.items():
        if cfg[key] not in allowed:
            raise ConfigError(f"{key} must be one of {allowed}, got {cfg[key]!r}")
    g = cfg["gamma0"]
    if g <= 0:
        raise ConfigError("gamma0 must be positive")
    if cfg["omega_r"] is None:
        cfg["omega_r"] = 800 * g
    if cfg["cutoff"] is None:
        cfg["cutoff"] = 20 * cfg["omega_r"]
    if cfg["delta"] is None:
        cfg["delta"] = 10 * g
    if cfg["omega_d"] is None:
        cfg["omega_d"] = cfg["omega_r"] - cfg["delta"]
    if cfg["V"] is None:
        cfg["V"] = cfg["omega_r"] ** 2 / 32
    if cfg["omega_i"] is None:
        cfg["omega_i"] = cfg["omega_d"] - cfg["delta"]
    if cfg["omega_j"] is None:
        cfg["omega_j"] = cfg["omega_d"] - cfg["omega_i"]
    if cfg["t"] is None:
        cfg["t"] = 20 / g
    for key in ("omega_r", "omega_d", "cutoff", "delta_omega", "mass_ratio", "m"):
        if cfg[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    for key in ("T_R", "T_L", "t"):
        if cfg[key] < 0:
            raise ConfigError(f"{key} must be nonnegative")
    if not 0 <= cfg["split_R"] <= 1:
        raise ConfigError("split_R must lie in [0, 1]")
    if cfg["n_points"] < 1 or cfg["t_points"] < 1 or cfg["k_max"] < 1:
        raise ConfigError("n_points, t_points and k_max must be positive")
    if cfg["cycle_points"] < 16:
        raise ConfigError("cycle_points must be at least 16")
    return cfg


def model_of(cfg: dict) -> SpectralModel:
    return SpectralModel(cfg["gamma0"], cfg["cutoff"], cfg["m"], cfg["split_R"])


def driving_of(cfg: dict) -> Driving:
    return Driving(cfg["omega_r"], cfg["V"], cfg["omega_d"])


def pair_of(cfg: dict, omega_i: float | None = None, omega_j: float | None = None,
            **over) -> BandPair:
    wi = cfg["omega_i"] if omega_i is None else omega_i
    wj = cfg["omega_j"] if omega_j is None else omega_j
    kw = dict(delta_omega=cfg["delta_omega"], mass_ratio=cfg["mass_ratio"],
              T_R=cfg["T_R"], T_L=cfg["T_L"], allow_overlap=True)
    kw.update(over)
    return BandPair(wi, wj, **kw)


def figure_grid(cfg: dict) -> list[float]:
    """Spectrum abscissae: 0.5 gamma0 spacing over 40 gamma0 at both ends, coarse between.

    The end regions hold the gamma0-wide peaks; with ``grid="uniform"`` the
    ``n_points`` values are spread evenly over [omega_min, omega_max].
    """
    g, wd, n = cfg["gamma0"], cfg["omega_d"], cfg["n_points"]
    lo = cfg["omega_min"] if cfg["omega_min"] is not None else g
    hi = cfg["omega_max"] if cfg["omega_max"] is not None else wd - g
    if cfg["grid"] == "uniform" or n < 20:
        return [lo + (hi - lo) * k / max(n - 1, 1) for k in range(n)]
    n_end = min((n * 2) // 5, 80)
    span = min(20 * g, (hi - lo) / 4)
    left = [lo + span * k / (n_end - 1) for k in range(n_end)]
    right = [hi - span + span * k / (n_end - 1) for k in range(n_end)]
    n_mid = n - 2 * n_end
    a, b = left[-1], right[0]
    mid = [a + (b - a) * (k + 1) / (n_mid + 1) for k in range(n_mid)]
    return left + mid + right


def header(command: str, cfg: dict) -> str:
    clean = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in cfg.items()}
    return "# " + json.dumps({"schema_version": SCHEMA_VERSION, "command": command,
                              "config": clean}, sort_keys=True)
