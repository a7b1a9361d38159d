"""Run configuration: a single TOML file drives solves and sweeps.

Layout (all sections optional except [problem]):

    mode = "continuous"            # continuous | discrete | both
    seed = 42
    output_dir = "out"
    monitors = ["fejer", "envelope"]   # omit to run all applicable
    x0 = [1.0, 0.0]                    # omit to draw from the seed

    [problem]
    name = "skew_rotation"
    [problem.params]
    dim = 2

    [schedule]
    name = "constant"              # constant | sinusoidal | ramp
    value = 0.5

    [integrator]
    method = "rk4"                 # rk4 | euler
    h = 0.01
    horizon = 10.0
    sample_every = 0.1

    [discrete]
    max_iter = 1000
    tol = 1e-9
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import problems
from .dynamics import ProblemInstance, schedule_catalog
from .operators import ConstructionError

MONITOR_NAMES = (
    "fejer",
    "residual_integral",
    "envelope",
    "ergodic_objective",
    "zdot_bound",
    "inclusion_identity",
)

MODES = ("continuous", "discrete", "both")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key."""


def _parse_toml(text: str) -> dict:
    try:
        import tomllib

        return tomllib.loads(text)
    except ModuleNotFoundError:
        pass
    try:
        import tomli

        return tomli.loads(text)
    except ModuleNotFoundError:
        pass
    import toml

    return toml.loads(text)


@dataclass
class RunConfig:
    problem_name: str
    problem_params: dict = field(default_factory=dict)
    mode: str = "continuous"
    schedule_name: str = "constant"
    schedule_params: dict = field(default_factory=lambda: {"value": 0.5})
    method: str = "rk4"
    h: float = 0.01
    horizon: float = 10.0
    sample_every: Optional[float] = None
    max_iter: int = 1000
    tol: float = 1e-9
    monitors: Optional[list] = None
    output_dir: str = "out"
    seed: int = 0
    x0: Optional[list] = None


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {message}")


def _number(raw, key: str) -> float:
    _require(isinstance(raw, (int, float)) and not isinstance(raw, bool), key, "must be a number")
    return float(raw)


def validate_config(raw: dict) -> RunConfig:
    """Turn a parsed TOML mapping into a validated RunConfig."""
    _require(isinstance(raw, dict), "config", "top level must be a table")
    problem = raw.get("problem")
    _require(isinstance(problem, dict), "problem", "section is required")
    name = problem.get("name")
    _require(isinstance(name, str), "problem.name", "must be a string")
    _require(name in problems.CATALOG_NAMES, "problem.name", f"unknown problem {name!r}")
    params = problem.get("params", {})
    _require(isinstance(params, dict), "problem.params", "must be a table")

    mode = raw.get("mode", "continuous")
    _require(mode in MODES, "mode", f"must be one of {MODES}")

    schedule = raw.get("schedule", {"name": "constant", "value": 0.5})
    _require(isinstance(schedule, dict), "schedule", "must be a table")
    schedule_params = {k: v for k, v in schedule.items() if k != "name"}
    schedule_name = schedule.get("name", "constant")

    integ = raw.get("integrator", {})
    _require(isinstance(integ, dict), "integrator", "must be a table")
    method = integ.get("method", "rk4")
    _require(method in ("rk4", "euler"), "integrator.method", "must be rk4 or euler")
    h = _number(integ.get("h", 0.01), "integrator.h")
    _require(h > 0, "integrator.h", "must be positive")
    horizon = _number(integ.get("horizon", 10.0), "integrator.horizon")
    _require(horizon >= h, "integrator.horizon", "must be at least h")
    sample_every = integ.get("sample_every")
    if sample_every is not None:
        sample_every = _number(sample_every, "integrator.sample_every")
        _require(sample_every > 0, "integrator.sample_every", "must be positive")

    disc = raw.get("discrete", {})
    _require(isinstance(disc, dict), "discrete", "must be a table")
    max_iter = disc.get("max_iter", 1000)
    _require(
        isinstance(max_iter, int) and not isinstance(max_iter, bool) and max_iter >= 1,
        "discrete.max_iter",
        "must be a positive integer",
    )
    tol = _number(disc.get("tol", 1e-9), "discrete.tol")
    _require(tol >= 0, "discrete.tol", "must be nonnegative")

    monitors = raw.get("monitors")
    if monitors is not None:
        _require(isinstance(monitors, list), "monitors", "must be a list of monitor names")
        for m in monitors:
            _require(m in MONITOR_NAMES, "monitors", f"unknown monitor {m!r}")

    seed = raw.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool), "seed", "must be an integer")

    output_dir = raw.get("output_dir", "out")
    _require(isinstance(output_dir, str), "output_dir", "must be a path string")

    x0 = raw.get("x0")
    if x0 is not None:
        _require(
            isinstance(x0, list) and all(isinstance(v, (int, float)) for v in x0),
            "x0",
            "must be a list of numbers",
        )
        _require(all(np.isfinite(v) for v in x0), "x0", "must be finite")

    return RunConfig(
        problem_name=name,
        problem_params=params,
        mode=mode,
        schedule_name=schedule_name,
        schedule_params=schedule_params,
        method=method,
        h=h,
        horizon=horizon,
        sample_every=sample_every,
        max_iter=max_iter,
        tol=tol,
        monitors=monitors,
        output_dir=output_dir,
        seed=seed,
        x0=x0,
    )


def load_raw(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config: file not found: {path}")
    try:
        return _parse_toml(path.read_text())
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc


def load_config(path) -> RunConfig:
    return validate_config(load_raw(path))


def build_from_config(cfg: RunConfig):
    """Materialize (problem, schedule); range errors name the failing section."""
    try:
        problem = problems.build(cfg.problem_name, **cfg.problem_params)
    except (ConstructionError, TypeError, KeyError) as exc:
        raise ConfigError(f"problem: {exc}") from exc
    try:
        schedule = schedule_catalog(cfg.schedule_name, beta=problem.beta, **cfg.schedule_params)
    except (ConstructionError, TypeError, KeyError) as exc:
        raise ConfigError(f"schedule: {exc}") from exc
    if cfg.x0 is not None and len(cfg.x0) != problem.dim:
        raise ConfigError(f"x0: dimension {len(cfg.x0)} does not match problem dim {problem.dim}")
    return problem, schedule


def initial_state(cfg: RunConfig, problem: ProblemInstance) -> np.ndarray:
    """Configured x0, or a deterministic draw from the run seed."""
    if cfg.x0 is not None:
        return np.asarray(cfg.x0, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    return rng.standard_normal(problem.dim)


def set_by_path(raw: dict, dotted: str, value) -> None:
    """Override a nested config key given as e.g. 'integrator.h'."""
    parts = dotted.split(".")
    node = raw
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    leaf = parts[-1]
    old = node.get(leaf)
    if old is not None and not isinstance(old, (int, float)):
        raise ConfigError(f"{dotted}: sweep target must be a numeric key")
    if isinstance(old, int) and not isinstance(old, bool) and float(value).is_integer():
        node[leaf] = int(value)
    else:
        node[leaf] = value
