"""Run configuration: one JSON document drives one scenario.

The schema is versioned and deliberately flat: a handful of named blocks
(medium, waveform, grid, schedule, ...) whose fields carry explicit units in
their names (_ns, _mhz, _per_s, _per_us, _gamma13). Validation reports every
violation as a field-path message and runs to completion before anything is
computed; `resolve_defaults` then materializes the defaults the scenario
uses so a manifest records the full effective configuration.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .medium import MediumParams
from .photonstats import DetectorConfig, LossBudget, SourceConfig
from .waveforms import TimeGrid, Waveform, gaussian_pulse, square_pulse

SCHEMA_VERSION = 1
SCENARIOS = ("spectrum", "propagate", "store", "optimize", "counts",
             "budget", "lifetime")

NS = 1e-9
MHZ = 2.0 * math.pi * 1e6  # linewidth in MHz -> angular rate in rad/s
PER_US = 1e6

# blocks each scenario reads, in manifest order; grid and waveform stay
# absent unless the config provides them (auto-designed otherwise)
_SCENARIO_BLOCKS = {
    "spectrum": ("medium", "spectrum"),
    "propagate": ("medium", "waveform", "grid", "propagation"),
    "store": ("medium", "waveform", "grid", "propagation", "schedule"),
    "optimize": ("medium", "waveform", "grid", "propagation", "optimizer"),
    "counts": ("waveform", "grid", "statistics"),
    "budget": ("budget",),
    "lifetime": ("medium", "waveform", "grid", "propagation", "lifetime"),
}

_REQUIRED_BLOCKS = {
    "spectrum": ("medium",),
    "propagate": ("medium", "waveform"),
    "store": ("medium", "waveform", "schedule"),
    "optimize": ("medium",),
    "counts": ("waveform", "statistics"),
    "budget": ("budget",),
    "lifetime": ("medium", "waveform", "lifetime"),
}

# optional blocks whose defaults are materialized even when omitted
_SELF_SUFFICIENT = ("spectrum", "propagation", "optimizer")

_FIELDS = {
    "medium": ("od", "gamma13_mhz", "gamma12_gamma13", "omega_c_gamma13",
               "delta_p_gamma13"),
    "spectrum": ("delta_min_gamma13", "delta_max_gamma13", "n_points"),
    "grid": ("t_start_ns", "t_end_ns", "dt_ns"),
    "waveform": ("family", "center_ns", "fwhm_ns", "energy", "csv"),
    "propagation": ("n_z",),
    "schedule": ("storage_time_ns", "t_off_ns", "ramp_ns", "ramp_shape",
                 "spin_decay_per_us"),
    "optimizer": ("max_iters", "tol", "storage_factor", "storage_time_ns",
                  "ramp_ns"),
    "statistics": ("n_trials", "pairing_efficiency", "chain_efficiency",
                   "herald_rate_per_s", "noise_rate_per_s", "dark_rate_per_s",
                   "bs_split", "coincidence_window_ns", "bin_width_ns",
                   "window_center_ns", "record_window_ns", "signal_window_ns",
                   "floor_window_ns", "g_ss", "g_asas", "collect_events"),
    "budget": ("elements", "duty_cycle", "detected_pair_rate_per_s",
               "success_probability"),
    "lifetime": ("storage_times_ns", "spin_decay_per_us", "t_off_ns",
                 "ramp_ns"),
}

_DEFAULTS = {
    "medium": {"gamma13_mhz": 3.0, "gamma12_gamma13": 0.0,
               "omega_c_gamma13": 0.0, "delta_p_gamma13": 0.0},
    "spectrum": {"delta_min_gamma13": -12.0, "delta_max_gamma13": 12.0,
                 "n_points": 1201},
    "propagation": {"n_z": 200},
    "schedule": {"ramp_ns": 50.0, "ramp_shape": "smoothstep",
                 "spin_decay_per_us": 0.0},
    "optimizer": {"max_iters": 10, "tol": 0.999, "storage_factor": 2.0,
                  "ramp_ns": 50.0},
    "statistics": {"chain_efficiency": 1.0, "herald_rate_per_s": 5e5,
                   "noise_rate_per_s": 0.0, "dark_rate_per_s": 0.0,
                   "bs_split": 0.45, "bin_width_ns": 1.0, "g_ss": 2.0,
                   "g_asas": 2.0, "collect_events": False},
    "budget": {"duty_cycle": 1.0},
    "lifetime": {"spin_decay_per_us": 0.0, "ramp_ns": 50.0},
}


class ConfigError(ValueError):
    """Configuration rejected; `errors` lists every violation."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors) or "invalid configuration")


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _number(errors, block, path, field, ge=None, gt=None, le=None, lt=None,
            integer=False) -> bool:
    """Range-check an optional field; absence is not an error here."""
    if field not in block:
        return True
    v = block[field]
    if not _is_number(v):
        errors.append(f"{path}.{field} must be a number")
        return False
    if not math.isfinite(v):
        errors.append(f"{path}.{field} must be finite")
        return False
    if integer and float(v) != int(v):
        errors.append(f"{path}.{field} must be an integer")
        return False
    if ge is not None and v < ge:
        errors.append(f"{path}.{field} must be >= {ge:g}")
        return False
    if gt is not None and v <= gt:
        errors.append(f"{path}.{field} must be > {gt:g}")
        return False
    if le is not None and v > le:
        errors.append(f"{path}.{field} must be <= {le:g}")
        return False
    if lt is not None and v >= lt:
        errors.append(f"{path}.{field} must be < {lt:g}")
        return False
    return True


def _require(errors, block, path, field) -> bool:
    if field in block:
        return True
    errors.append(f"{path}.{field} is required")
    return False


def _window_pair(errors, block, path, field) -> bool:
    if field not in block:
        return True
    v = block[field]
    ok = (isinstance(v, (list, tuple)) and len(v) == 2
          and all(_is_number(x) and math.isfinite(x) for x in v)
          and v[1] > v[0])
    if not ok:
        errors.append(f"{path}.{field} must be [lo_ns, hi_ns] with hi > lo")
    return ok


def _unknown_keys(errors, block, path):
    for key in block:
        if key not in _FIELDS[path]:
            errors.append(f"{path}.{key} is not a recognized field")


def _validate_medium(errors, m):
    _unknown_keys(errors, m, "medium")
    _require(errors, m, "medium", "od")
    _number(errors, m, "medium", "od", ge=0)
    _number(errors, m, "medium", "gamma13_mhz", gt=0)
    _number(errors, m, "medium", "gamma12_gamma13", ge=0)
    _number(errors, m, "medium", "omega_c_gamma13", ge=0)
    _number(errors, m, "medium", "delta_p_gamma13")


def _validate_spectrum(errors, s):
    _unknown_keys(errors, s, "spectrum")
    _number(errors, s, "spectrum", "delta_min_gamma13")
    _number(errors, s, "spectrum", "delta_max_gamma13")
    _number(errors, s, "spectrum", "n_points", ge=2, le=1_000_000,
            integer=True)
    lo, hi = s.get("delta_min_gamma13"), s.get("delta_max_gamma13")
    if _is_number(lo) and _is_number(hi) and hi <= lo:
        errors.append("spectrum.delta_max_gamma13 must exceed "
                      "spectrum.delta_min_gamma13")


def _validate_grid(errors, g):
    _unknown_keys(errors, g, "grid")
    for field in _FIELDS["grid"]:
        _require(errors, g, "grid", field)
    _number(errors, g, "grid", "t_start_ns")
    _number(errors, g, "grid", "t_end_ns")
    _number(errors, g, "grid", "dt_ns", gt=0)
    t0, t1, dt = g.get("t_start_ns"), g.get("t_end_ns"), g.get("dt_ns")
    if all(map(_is_number, (t0, t1, dt))) and dt > 0:
        if t1 <= t0:
            errors.append("grid.t_end_ns must exceed grid.t_start_ns")
        elif (t1 - t0) / dt > 5e6:
            errors.append("grid.dt_ns yields more than 5e6 samples")


def _validate_waveform(errors, w, base_dir):
    _unknown_keys(errors, w, "waveform")
    if "csv" in w and "family" in w:
        errors.append("waveform must give either family or csv, not both")
        return
    if "csv" in w:
        for field in ("center_ns", "fwhm_ns", "energy"):
            if field in w:
                errors.append(f"waveform.{field} does not apply to a csv "
                              "waveform")
        path = w["csv"]
        if not isinstance(path, str) or not path:
            errors.append("waveform.csv must be a file path")
        elif not (base_dir / path).is_file():
            errors.append(f"waveform.csv file not found: {path}")
        return
    if "family" not in w:
        errors.append("waveform.family or waveform.csv is required")
        return
    if w["family"] not in ("gaussian", "square"):
        errors.append("waveform.family must be one of gaussian, square")
    _require(errors, w, "waveform", "center_ns")
    _require(errors, w, "waveform", "fwhm_ns")
    _number(errors, w, "waveform", "center_ns")
    _number(errors, w, "waveform", "fwhm_ns", gt=0)
    _number(errors, w, "waveform", "energy", gt=0)


def _validate_propagation(errors, p):
    _unknown_keys(errors, p, "propagation")
    _number(errors, p, "propagation", "n_z", ge=50, le=20_000, integer=True)


def _validate_schedule(errors, s):
    _unknown_keys(errors, s, "schedule")
    _require(errors, s, "schedule", "storage_time_ns")
    _number(errors, s, "schedule", "storage_time_ns", gt=0)
    _number(errors, s, "schedule", "t_off_ns")
    _number(errors, s, "schedule", "ramp_ns", gt=0)
    _number(errors, s, "schedule", "spin_decay_per_us", ge=0)
    shape = s.get("ramp_shape", "smoothstep")
    if shape not in ("smoothstep", "linear"):
        errors.append("schedule.ramp_shape must be one of smoothstep, linear")


def _validate_optimizer(errors, o):
    _unknown_keys(errors, o, "optimizer")
    _number(errors, o, "optimizer", "max_iters", ge=1, le=1000, integer=True)
    _number(errors, o, "optimizer", "tol", gt=0, le=1)
    _number(errors, o, "optimizer", "storage_factor", gt=0)
    _number(errors, o, "optimizer", "storage_time_ns", gt=0)
    _number(errors, o, "optimizer", "ramp_ns", gt=0)


def _validate_statistics(errors, s):
    _unknown_keys(errors, s, "statistics")
    _require(errors, s, "statistics", "n_trials")
    _require(errors, s, "statistics", "pairing_efficiency")
    _require(errors, s, "statistics", "coincidence_window_ns")
    _number(errors, s, "statistics", "n_trials", ge=1, integer=True)
    _number(errors, s, "statistics", "pairing_efficiency", ge=0, le=1)
    _number(errors, s, "statistics", "chain_efficiency", gt=0, le=1)
    _number(errors, s, "statistics", "herald_rate_per_s", gt=0)
    _number(errors, s, "statistics", "noise_rate_per_s", ge=0)
    _number(errors, s, "statistics", "dark_rate_per_s", ge=0)
    _number(errors, s, "statistics", "bs_split", gt=0, lt=1)
    _number(errors, s, "statistics", "coincidence_window_ns", gt=0)
    _number(errors, s, "statistics", "bin_width_ns", gt=0)
    _number(errors, s, "statistics", "window_center_ns")
    _number(errors, s, "statistics", "g_ss", gt=0)
    _number(errors, s, "statistics", "g_asas", gt=0)
    _window_pair(errors, s, "statistics", "record_window_ns")
    _window_pair(errors, s, "statistics", "signal_window_ns")
    _window_pair(errors, s, "statistics", "floor_window_ns")
    if "collect_events" in s and not isinstance(s["collect_events"], bool):
        errors.append("statistics.collect_events must be a boolean")


def _validate_budget(errors, b):
    _unknown_keys(errors, b, "budget")
    if _require(errors, b, "budget", "elements"):
        elements = b["elements"]
        items = None
        if isinstance(elements, dict) and elements:
            items = list(elements.items())
        elif (isinstance(elements, list) and elements
              and all(isinstance(e, (list, tuple)) and len(e) == 2
                      for e in elements)):
            items = [(e[0], e[1]) for e in elements]
        if items is None:
            errors.append("budget.elements must be a nonempty name -> "
                          "transmission mapping or [name, value] list")
        else:
            for name, val in items:
                if not isinstance(name, str) or not name:
                    errors.append("budget.elements names must be nonempty "
                                  "strings")
                elif not (_is_number(val) and 0 < val <= 1):
                    errors.append(f"budget.elements[{name!r}] must lie in "
                                  "(0, 1]")
    _number(errors, b, "budget", "duty_cycle", gt=0, le=1)
    _number(errors, b, "budget", "detected_pair_rate_per_s", ge=0)
    _number(errors, b, "budget", "success_probability", ge=0, le=1)


def _validate_lifetime(errors, lt):
    _unknown_keys(errors, lt, "lifetime")
    if _require(errors, lt, "lifetime", "storage_times_ns"):
        times = lt["storage_times_ns"]
        ok = (isinstance(times, list) and len(times) >= 2
              and all(_is_number(t) and t > 0 for t in times))
        if not ok:
            errors.append("lifetime.storage_times_ns must list >= 2 "
                          "positive times")
    _number(errors, lt, "lifetime", "spin_decay_per_us", ge=0)
    _number(errors, lt, "lifetime", "t_off_ns")
    _number(errors, lt, "lifetime", "ramp_ns", gt=0)


_BLOCK_VALIDATORS = {
    "medium": _validate_medium,
    "spectrum": _validate_spectrum,
    "grid": _validate_grid,
    "propagation": _validate_propagation,
    "schedule": _validate_schedule,
    "optimizer": _validate_optimizer,
    "statistics": _validate_statistics,
    "budget": _validate_budget,
    "lifetime": _validate_lifetime,
}


def validate_config(cfg, base_dir=".") -> list:
    """Full schema and range validation; returns every violation found."""
    errors = []
    base_dir = Path(base_dir)
    if not isinstance(cfg, dict):
        return ["configuration must be a JSON object"]

    schema = cfg.get("schema")
    if schema != SCHEMA_VERSION:
        errors.append(f"schema must be {SCHEMA_VERSION} (got {schema!r})")
    scenario = cfg.get("scenario")
    if scenario not in SCENARIOS:
        errors.append("scenario must be one of " + ", ".join(SCENARIOS))
        return errors  # block layout depends on the scenario
    _number(errors, cfg, "config", "seed", ge=0, integer=True)
    if "title" in cfg and not isinstance(cfg["title"], str):
        errors.append("config.title must be a string")

    used = _SCENARIO_BLOCKS[scenario]
    recognized = {"schema", "scenario", "seed", "title", *used}
    for key in cfg:
        if key in _BLOCK_VALIDATORS and key not in used:
            errors.append(f"section '{key}' is not used by scenario "
                          f"'{scenario}'")
        elif key not in recognized:
            errors.append(f"'{key}' is not a recognized section")

    for block in _REQUIRED_BLOCKS[scenario]:
        if block not in cfg:
            errors.append(f"section '{block}' is required for scenario "
                          f"'{scenario}'")

    for block in used:
        if block not in cfg:
            continue
        body = cfg[block]
        if not isinstance(body, dict):
            errors.append(f"section '{block}' must be a JSON object")
            continue
        if block == "waveform":
            _validate_waveform(errors, body, base_dir)
        else:
            _BLOCK_VALIDATORS[block](errors, body)

    if "waveform" in cfg and isinstance(cfg.get("waveform"), dict):
        if "csv" in cfg["waveform"] and "grid" in cfg:
            errors.append("grid cannot be combined with waveform.csv "
                          "(the file carries its own grid)")
    return errors


def resolve_defaults(cfg) -> dict:
    """Materialize defaults for the blocks the scenario uses.

    Input must already validate. Blocks the scenario ignores are dropped;
    optional values without defaults stay absent.
    """
    scenario = cfg["scenario"]
    out = {"schema": SCHEMA_VERSION, "scenario": scenario,
           "seed": int(cfg.get("seed", 0))}
    if "title" in cfg:
        out["title"] = cfg["title"]
    for block in _SCENARIO_BLOCKS[scenario]:
        if block in cfg:
            merged = dict(_DEFAULTS.get(block, {}))
            merged.update(cfg[block])
            if "csv" in merged:
                merged.pop("energy", None)  # csv carries its own scale
            out[block] = merged
        elif block in _SELF_SUFFICIENT:
            out[block] = dict(_DEFAULTS[block])
    return out


@dataclass(frozen=True)
class RunConfig:
    """A validated, default-resolved configuration ready to execute."""

    scenario: str
    raw: dict
    base_dir: Path
    seed: int

    def block(self, name: str) -> dict:
        return self.raw.get(name, {})


def load_config(path, seed_override=None) -> RunConfig:
    """Read, validate, and resolve a config file; raises ConfigError."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    errors = validate_config(cfg, base_dir=p.parent)
    if errors:
        raise ConfigError(errors)
    resolved = resolve_defaults(cfg)
    if seed_override is not None:
        if seed_override < 0:
            raise ConfigError(["config.seed must be >= 0"])
        resolved["seed"] = int(seed_override)
    return RunConfig(scenario=resolved["scenario"], raw=resolved,
                     base_dir=p.parent, seed=resolved["seed"])


def build_medium(rc: RunConfig) -> MediumParams:
    m = rc.block("medium")
    return MediumParams(
        od=float(m["od"]),
        gamma13=float(m["gamma13_mhz"]) * MHZ,
        gamma12=float(m["gamma12_gamma13"]),
        omega_c=float(m["omega_c_gamma13"]),
        delta_p=float(m["delta_p_gamma13"]),
    )


def build_time_grid(rc: RunConfig) -> TimeGrid | None:
    g = rc.block("grid")
    if not g:
        return None
    return TimeGrid(float(g["t_start_ns"]) * NS, float(g["t_end_ns"]) * NS,
                    float(g["dt_ns"]) * NS)


def build_waveform(rc: RunConfig, grid: TimeGrid) -> Waveform:
    """Construct the configured waveform; csv ignores `grid`."""
    w = rc.block("waveform")
    if "csv" in w:
        return Waveform.from_csv(rc.base_dir / w["csv"])
    make = gaussian_pulse if w["family"] == "gaussian" else square_pulse
    return make(grid, float(w["center_ns"]) * NS, float(w["fwhm_ns"]) * NS,
                energy=float(w.get("energy", 1.0)))


def build_source(rc: RunConfig, waveform: Waveform) -> SourceConfig:
    s = rc.block("statistics")
    return SourceConfig(
        waveform=waveform,
        pairing_efficiency=float(s["pairing_efficiency"]),
        herald_rate=float(s["herald_rate_per_s"]),
        noise_rate=float(s["noise_rate_per_s"]),
        dark_rate=float(s["dark_rate_per_s"]),
    )


def build_detector(rc: RunConfig) -> DetectorConfig:
    s = rc.block("statistics")
    center = s.get("window_center_ns")
    record = s.get("record_window_ns")
    return DetectorConfig(
        coincidence_window=float(s["coincidence_window_ns"]) * NS,
        chain_efficiency=float(s["chain_efficiency"]),
        bs_split=float(s["bs_split"]),
        bin_width=float(s["bin_width_ns"]) * NS,
        window_center=None if center is None else float(center) * NS,
        record_window=None if record is None
        else (float(record[0]) * NS, float(record[1]) * NS),
    )


def build_budget(rc: RunConfig) -> LossBudget:
    b = rc.block("budget")
    elements = b["elements"]
    if isinstance(elements, dict):
        items = tuple(elements.items())
    else:
        items = tuple((name, val) for name, val in elements)
    return LossBudget(elements=items, duty_cycle=float(b["duty_cycle"]))
