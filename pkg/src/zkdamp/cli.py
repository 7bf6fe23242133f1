"""Command-line entry point.

Commands: simulate plus the named suites (conservation, uniform-decay,
localized-decay, smoothing, observability, inequalities, all). A flat INI
config file supplies parameters; unknown keys are rejected so a typo can
never silently fall back to a default. Outputs are one CSV per recorded
series (bit-stable, 17 significant digits) and a line-delimited JSON
summary with the fitted constants.

Exit codes: 0 pass, 1 criteria failure, 2 usage/config error, 3 blow-up.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import experiments
from .damping import make_localized_damping, make_uniform_damping, make_weight, load_profile_table
from .dynamics import BlowUpError, SolverConfig, run
from .experiments import SUITES, ExperimentResult, gaussian_field, random_band_limited_field
from .functionals import CSV_FIELDS
from .grid import GridSpec, RealField


class ConfigFileError(ValueError):
    pass


def _as_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigFileError(f"key {key!r}: expected a boolean, got {raw!r}")


def _as_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigFileError(f"key {key!r}: expected a number, got {raw!r}") from None


def _as_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigFileError(f"key {key!r}: expected an integer, got {raw!r}") from None


def _as_floats(raw: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in raw.split(","))
    except ValueError:
        raise ConfigFileError(f"key {key!r}: expected comma-separated numbers, got {raw!r}") from None


# schema: section -> key -> (type tag, default)
_SIM_SCHEMA = {
    "grid": {
        "dim": ("int", 2),
        "points": ("int", None),
        "half_length": ("float", experiments.DEFAULT_HALF_LENGTH),
    },
    "damping": {
        "kind": ("str", "none"),
        "alpha0": ("float", 0.5),
        "r": ("float", 4.0),
        "ramp_width": ("float", 1.0),
        "plateau": ("float", None),
        "file": ("str", None),
    },
    "initial": {
        "kind": ("str", "gaussian"),
        "amplitude": ("float", 1.0),
        "width": ("float", 1.0),
        "center": ("float", 0.0),
        "seed": ("int", 0),
        "band": ("int", 8),
        "h1_norm": ("float", 1.0),
        "file": ("str", None),
    },
    "solver": {
        "dt": ("float", 1e-3),
        "t_end": ("float", 1.0),
        "scheme": ("str", "lawson_rk4"),
        "dealias": ("bool", True),
        "record_every": ("int", 1),
    },
    "weights": {
        "rho_r": ("float", 4.0),
        "epsilon": ("float", 0.1),
    },
    "output": {
        "directory": ("str", "out"),
    },
}

# per-suite override sections mirror the suite keyword arguments
_SUITE_SCHEMA = {
    "conservation": {
        "dim": "int", "points": "int", "half_length": "float", "dt": "float",
        "t_end": "float", "amplitude": "float", "width": "float",
        "record_every": "int", "scheme": "str", "dealias": "bool",
    },
    "uniform-decay": {
        "alpha0": "float", "dim": "int", "points": "int", "half_length": "float",
        "dt": "float", "t_end": "float", "amplitude": "float", "width": "float",
        "record_every": "int", "epsilon": "float",
    },
    "localized-decay": {
        "alpha0": "float", "r": "float", "ramp_width": "float", "plateau": "float",
        "dim": "int", "points": "int", "half_length": "float", "dt": "float",
        "t_end": "float", "window": "floats", "amplitude": "float",
        "width": "float", "center": "float", "record_every": "int",
    },
    "smoothing": {
        "alpha0": "float", "r_damping": "float", "ramp_width": "float",
        "r": "float", "dim": "int", "points": "int", "half_length": "float",
        "dt": "float", "t_end": "float", "amplitude": "float", "width": "float",
        "record_every": "int",
    },
    "observability": {
        "members": "int", "alpha0": "float", "r": "float", "ramp_width": "float",
        "t_values": "floats", "l_values": "floats", "dim": "int", "points": "int",
        "half_length": "float", "dt": "float", "band": "int", "seed0": "int",
        "record_every": "int", "check_doubling": "bool",
    },
    "inequalities": {
        "calibration": "int", "validation": "int", "epsilon": "float",
        "safety": "float", "dim": "int", "points": "int", "half_length": "float",
        "band": "int", "seed0": "int", "psi_r": "float",
    },
}

# config key -> suite kwarg, where the INI spelling differs
_SUITE_KEY_MAP = {
    "localized-decay": {"r": "R"},
    "smoothing": {"r_damping": "R"},
    "observability": {"r": "R", "t_values": "T_values", "l_values": "L_values"},
}

_CONVERTERS = {"int": _as_int, "float": _as_float, "str": lambda raw, key: raw.strip(),
               "bool": _as_bool, "floats": _as_floats}


@dataclass
class RunConfig:
    """Validated, flat view of a config file."""

    values: dict = dc_field(default_factory=dict)        # (section, key) -> value
    suite_overrides: dict = dc_field(default_factory=dict)  # suite -> kwargs

    def get(self, section: str, key: str):
        return self.values[(section, key)]


def parse_config(path: str | None) -> RunConfig:
    """Parse and validate an INI config; unknown sections or keys are errors."""
    cfg = RunConfig()
    for section, keys in _SIM_SCHEMA.items():
        for key, (_, default) in keys.items():
            cfg.values[(section, key)] = default
    if path is None:
        _validate_sim_config(cfg)
        return cfg

    p = Path(path)
    if not p.is_file():
        raise ConfigFileError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str.lower
    try:
        parser.read_string(p.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigFileError(f"{path}: {exc}") from exc

    for section in parser.sections():
        if section in _SIM_SCHEMA:
            for key, raw in parser.items(section):
                if key not in _SIM_SCHEMA[section]:
                    raise ConfigFileError(f"{path}: unknown key {key!r} in section [{section}]")
                tag = _SIM_SCHEMA[section][key][0]
                cfg.values[(section, key)] = _CONVERTERS[tag](raw, f"{section}.{key}")
        elif section in _SUITE_SCHEMA:
            overrides = {}
            for key, raw in parser.items(section):
                if key not in _SUITE_SCHEMA[section]:
                    raise ConfigFileError(f"{path}: unknown key {key!r} in section [{section}]")
                tag = _SUITE_SCHEMA[section][key]
                kw = _SUITE_KEY_MAP.get(section, {}).get(key, key)
                overrides[kw] = _CONVERTERS[tag](raw, f"{section}.{key}")
            cfg.suite_overrides[section] = overrides
        else:
            raise ConfigFileError(f"{path}: unknown section [{section}]")

    _validate_sim_config(cfg)
    return cfg


def _validate_sim_config(cfg: RunConfig) -> None:
    g = lambda s, k: cfg.values[(s, k)]
    if g("grid", "dim") not in (2, 3):
        raise ConfigFileError("key 'grid.dim': must be 2 or 3")
    pts = g("grid", "points")
    if pts is not None and (pts < 8 or pts % 2 != 0):
        raise ConfigFileError("key 'grid.points': must be even and >= 8")
    if g("grid", "half_length") <= 0:
        raise ConfigFileError("key 'grid.half_length': must be positive")
    kind = g("damping", "kind")
    if kind not in ("none", "uniform", "localized", "custom"):
        raise ConfigFileError(f"key 'damping.kind': unknown kind {kind!r}")
    if kind != "none" and g("damping", "alpha0") <= 0:
        raise ConfigFileError("key 'damping.alpha0': must be positive")
    if kind == "localized":
        if g("damping", "r") - g("damping", "ramp_width") <= 0:
            raise ConfigFileError("key 'damping.r': need 0 < r - ramp_width")
        if g("damping", "r") >= g("grid", "half_length"):
            raise ConfigFileError("key 'damping.r': plateau must start inside the box")
    if kind == "custom" and g("damping", "file") is None:
        raise ConfigFileError("key 'damping.file': required for custom damping")
    ik = g("initial", "kind")
    if ik not in ("gaussian", "random", "file"):
        raise ConfigFileError(f"key 'initial.kind': unknown kind {ik!r}")
    if ik == "gaussian" and g("initial", "width") <= 0:
        raise ConfigFileError("key 'initial.width': must be positive")
    if ik == "random" and g("initial", "h1_norm") <= 0:
        raise ConfigFileError("key 'initial.h1_norm': must be positive")
    if ik == "file" and g("initial", "file") is None:
        raise ConfigFileError("key 'initial.file': required for file initial data")
    if g("solver", "dt") <= 0:
        raise ConfigFileError("key 'solver.dt': must be positive")
    if g("solver", "t_end") < 0:
        raise ConfigFileError("key 'solver.t_end': must be nonnegative")
    if g("solver", "scheme") not in ("lawson_rk4", "strang"):
        raise ConfigFileError("key 'solver.scheme': must be lawson_rk4 or strang")
    if g("solver", "record_every") < 1:
        raise ConfigFileError("key 'solver.record_every': must be >= 1")
    if g("weights", "epsilon") <= 0:
        raise ConfigFileError("key 'weights.epsilon': must be positive")


# --- outputs ----------------------------------------------------------------


def write_timeseries(history, path) -> None:
    """CSV with the exact contract header, one row per record, 17 significant digits."""
    lines = [",".join(CSV_FIELDS)]
    for rec in history:
        lines.append(",".join(f"{getattr(rec, name):.17g}" for name in CSV_FIELDS))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_timeseries(path):
    """Parse a contract CSV back into column arrays (round-trips bit-identically)."""
    text = Path(path).read_text()
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != ",".join(CSV_FIELDS):
        raise ConfigFileError(f"{path}: bad or missing CSV header")
    cols = {name: [] for name in CSV_FIELDS}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CSV_FIELDS):
            raise ConfigFileError(f"{path}: malformed row: {ln!r}")
        for name, val in zip(CSV_FIELDS, parts):
            cols[name].append(float(val))
    return {name: np.array(vals) for name, vals in cols.items()}


def _summary_line(result: ExperimentResult) -> str:
    payload = {
        "suite": result.name,
        "params_hash": result.params_hash,
        "pass": bool(result.passed),
        "fits": {
            key: {
                "delta_hat": fit.delta_hat,
                "lnC_hat": fit.lnC_hat,
                "r_squared": fit.r_squared,
                "window": list(fit.window),
            }
            for key, fit in result.fits.items()
        },
        "details": {k: _jsonable(v) for k, v in result.details.items()},
        "reports": {k: _jsonable(v) for k, v in result.reports.items()},
    }
    return json.dumps(payload, sort_keys=True)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if dataclasses.is_dataclass(v) and not isinstance(v, type):
        return {k: _jsonable(x) for k, x in dataclasses.asdict(v).items()}
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(float(v))
    return v


def write_summary(results, path) -> None:
    Path(path).write_text("".join(_summary_line(r) + "\n" for r in results), newline="\n")


# --- simulate ----------------------------------------------------------------


def _build_grid(cfg: RunConfig) -> GridSpec:
    dim = cfg.get("grid", "dim")
    points = cfg.get("grid", "points")
    return experiments.default_grid(dim, points, cfg.get("grid", "half_length"))


def _build_profile(cfg: RunConfig, grid: GridSpec):
    kind = cfg.get("damping", "kind")
    if kind == "none":
        return None
    alpha0 = cfg.get("damping", "alpha0")
    if kind == "uniform":
        return make_uniform_damping(grid, alpha0)
    if kind == "localized":
        return make_localized_damping(
            grid, alpha0, cfg.get("damping", "r"),
            cfg.get("damping", "ramp_width"), cfg.get("damping", "plateau"),
        )
    return load_profile_table(
        grid, cfg.get("damping", "file"), alpha0,
        cfg.get("damping", "r"), cfg.get("damping", "ramp_width"),
    )


def _build_initial(cfg: RunConfig, grid: GridSpec, seed_override=None) -> RealField:
    kind = cfg.get("initial", "kind")
    if kind == "gaussian":
        return gaussian_field(
            grid, cfg.get("initial", "amplitude"), cfg.get("initial", "width"),
            cfg.get("initial", "center"),
        )
    if kind == "random":
        seed = cfg.get("initial", "seed") if seed_override is None else seed_override
        return random_band_limited_field(
            grid, seed=seed, band=cfg.get("initial", "band"),
            h1_norm=cfg.get("initial", "h1_norm"),
        )
    values = np.load(cfg.get("initial", "file"))
    return RealField(grid, values)


def simulate(cfg: RunConfig, out_dir: Path, seed_override=None, quiet=False) -> int:
    grid = _build_grid(cfg)
    profile = _build_profile(cfg, grid)
    u0 = _build_initial(cfg, grid, seed_override)
    solver = SolverConfig(
        dt=cfg.get("solver", "dt"), t_end=cfg.get("solver", "t_end"),
        scheme=cfg.get("solver", "scheme"), dealias=cfg.get("solver", "dealias"),
        record_every=cfg.get("solver", "record_every"),
    )
    rho_r = cfg.get("weights", "rho_r")
    weight = make_weight(grid, rho_r, "rho") if 0 < rho_r < grid.half_length[0] else None
    state = run(u0, profile, solver, weight=weight)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "simulate.csv"
    write_timeseries(state.history, path)
    if not quiet:
        print(f"simulate: wrote {len(state.history)} records to {path}")
    return 0


def run_command(cfg: RunConfig, suite_name: str, out_dir: Path,
                seed_override=None, quiet=False) -> int:
    """Execute one suite (or simulate/all), write outputs, return the exit code."""
    out_dir.mkdir(parents=True, exist_ok=True)
    if suite_name == "simulate":
        return simulate(cfg, out_dir, seed_override, quiet)

    names = list(SUITES) if suite_name == "all" else [suite_name]
    results = []
    status = 0
    for name in names:
        kwargs = dict(cfg.suite_overrides.get(name, {}))
        if seed_override is not None and "seed0" in _SUITE_SCHEMA.get(name, {}):
            kwargs["seed0"] = seed_override
        result = SUITES[name](**kwargs)
        results.append(result)
        for label, history in result.series.items():
            write_timeseries(history, out_dir / f"{label}.csv")
        if not quiet:
            print(f"{name}: {'PASS' if result.passed else 'FAIL'} "
                  + " ".join(f"{k}={v:.6g}" for k, v in sorted(result.details.items())
                             if isinstance(v, float) and math.isfinite(v)))
        if not result.passed:
            status = 1
    write_summary(results, out_dir / "summary.jsonl")
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zkdamp",
        description="Damped Zakharov-Kuznetsov pseudo-spectral verification lab",
    )
    parser.add_argument(
        "command",
        choices=["simulate", *SUITES.keys(), "all"],
        help="single simulation or a named verification suite",
    )
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--quiet", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        cfg = parse_config(args.config)
    except ConfigFileError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        return run_command(cfg, args.command, Path(args.out), args.seed, args.quiet)
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return 3
    except (ConfigFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
