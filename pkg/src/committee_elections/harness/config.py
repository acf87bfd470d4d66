"""YAML experiment configs with line-addressed validation errors."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from ..simulator import ElectionConfig
from ..strategies import ABSTAIN, CARDINAL, THRESHOLD, Strategy

TOP_KEYS = ("m", "n", "k", "t", "rho", "p", "p_h", "p_m", "sigma", "strategy", "sweep", "engine", "trials", "seed")
REQUIRED = ("m", "n", "k", "t", "p", "p_h", "p_m", "sigma", "strategy")
STRATEGY_KEYS = ("kind", "z")
SWEEP_KEYS = ("axis", "from", "to", "step")
AXES = ("z", "n", "k", "p", "gap")
ENGINES = ("exact", "mc", "bound")
INT_AXES = ("n", "k")


class ConfigError(ValueError):
    def __init__(self, msg: str, source: str = "<config>", line: int | None = None):
        self.line = line
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {msg}")


@dataclass(frozen=True)
class Settings:
    """Scalar election parameters as written in a config file."""

    m: int
    n: int
    k: int
    t: int
    rho: Fraction
    p: float
    p_h: float
    p_m: float
    sigma: object
    strategy: Strategy
    seed: int = 0

    def election(self) -> ElectionConfig:
        return ElectionConfig.uniform(
            self.m, self.n, self.k, self.t, self.p, self.p_h, self.p_m, self.sigma, self.strategy,
            rho=self.rho, seed=self.seed,
        )

    def at(self, axis: str | None, value) -> "Settings":
        """Settings at one grid value of ``axis``."""
        if axis is None:
            return self
        if axis == "z":
            return replace(self, strategy=Strategy(self.strategy.kind, value))
        if axis == "n":
            if np.ndim(self.sigma) != 0:
                raise ValueError("sweeping n needs a scalar sigma")
            return replace(self, n=int(value))
        if axis == "k":
            return replace(self, k=int(value))
        if axis == "p":
            return replace(self, p=float(value))
        if axis == "gap":
            return replace(self, p_h=round(self.p_m + float(value), 12))
        raise ValueError(f"unknown axis {axis!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    settings: Settings
    axis: str | None
    grid: tuple
    engine: str
    trials: int
    output_path: str | None = None

    def __post_init__(self):
        if not self.grid:
            raise ValueError("sweep grid is empty")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.engine == "exact" and self.settings.strategy.kind == CARDINAL:
            raise ValueError("engine 'exact' requires threshold voters")

    @property
    def base(self) -> ElectionConfig:
        return self.settings.election()

    def point(self, value) -> Settings:
        return self.settings.at(self.axis, value)


def grid_values(start, stop, step, integer: bool) -> tuple:
    if step <= 0:
        raise ValueError("sweep step must be positive")
    if stop < start:
        raise ValueError("sweep 'to' must be >= 'from'")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    vals = [start + i * step for i in range(count)]
    if integer:
        return tuple(int(round(v)) for v in vals)
    return tuple(round(v, 12) for v in vals)


def _line(node) -> int:
    return node.start_mark.line + 1


def _mapping(node, source: str, what: str) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{what} must be a mapping", source, _line(node))
    return {key.value: (key, val) for key, val in node.value}


def _scalar(node, source: str, key: str):
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError(f"key '{key}' must be a scalar", source, _line(node))
    return yaml.safe_load(yaml.serialize(node))


def _number(node, source: str, key: str, integer: bool = False):
    val = _scalar(node, source, key)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"key '{key}' must be a number, got {val!r}", source, _line(node))
    if integer:
        if int(val) != val:
            raise ConfigError(f"key '{key}' must be an integer, got {val!r}", source, _line(node))
        return int(val)
    return float(val)


def _check_keys(entries: dict, allowed, source: str, where: str):
    for name, (key, _) in entries.items():
        if name not in allowed:
            raise ConfigError(f"unknown key '{name}' in {where}", source, _line(key))


def load_config(path, output_path: str | None = None) -> ExperimentSpec:
    """Parse and validate an experiment file; errors name the key and line."""
    source = str(path)
    text = Path(path).read_text()
    return parse_config(text, source, output_path)


def parse_config(text: str, source: str = "<config>", output_path: str | None = None) -> ExperimentSpec:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"not valid YAML: {exc}", source, mark.line + 1 if mark else None) from None
    if root is None:
        raise ConfigError("empty config", source)
    top = _mapping(root, source, "config")
    _check_keys(top, TOP_KEYS, source, "config")
    for name in REQUIRED:
        if name not in top:
            raise ConfigError(f"missing required key '{name}'", source)

    def line_of(name):
        return _line(top[name][1]) if name in top else None

    def num(name, integer=False, default=None):
        if name not in top:
            return default
        return _number(top[name][1], source, name, integer)

    m, n, k, t = (num(x, integer=True) for x in ("m", "n", "k", "t"))
    p, p_h, p_m = num("p"), num("p_h"), num("p_m")
    trials = num("trials", integer=True, default=10_000)
    seed = num("seed", integer=True, default=0)

    rho_raw = _scalar(top["rho"][1], source, "rho") if "rho" in top else "1/3"
    try:
        rho = Fraction(str(rho_raw).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"key 'rho' must be a rational such as \"1/3\", got {rho_raw!r}", source, line_of("rho")) from None

    sigma_node = top["sigma"][1]
    if isinstance(sigma_node, yaml.SequenceNode):
        sigma = [_number(item, source, "sigma") for item in sigma_node.value]
        if len(sigma) != n:
            raise ConfigError(f"key 'sigma' lists {len(sigma)} values for n={n} voters", source, _line(sigma_node))
    else:
        sigma = _number(sigma_node, source, "sigma")

    checks = [
        ("m", m >= 1, "m ≥ 1 violated"),
        ("k", k >= 1, "k ≥ 1 violated"),
        ("k", m >= k, "m ≥ k violated"),
        ("t", 1 <= t <= m, "1 ≤ t ≤ m violated"),
        ("n", n >= 0, "n ≥ 0 violated"),
        ("rho", 0 < rho < 1, "0 < rho < 1 violated"),
        ("p", 0.0 <= p <= 1.0, "0 ≤ p ≤ 1 violated"),
        ("p_h", p_h >= p_m, "p_h ≥ p_m violated"),
        ("sigma", all(s > 0 for s in np.atleast_1d(sigma)), "sigma > 0 violated"),
        ("trials", trials >= 1, "trials ≥ 1 violated"),
        ("seed", 0 <= seed < 2**64, "seed must be an unsigned 64-bit integer"),
    ]
    for name, ok, msg in checks:
        if not ok:
            raise ConfigError(msg, source, line_of(name))

    strat_entries = _mapping(top["strategy"][1], source, "strategy")
    _check_keys(strat_entries, STRATEGY_KEYS, source, "strategy")
    if "kind" not in strat_entries:
        raise ConfigError("missing required key 'strategy.kind'", source, line_of("strategy"))
    kind_node = strat_entries["kind"][1]
    kind = _scalar(kind_node, source, "strategy.kind")
    if kind not in (THRESHOLD, CARDINAL, ABSTAIN):
        raise ConfigError(f"key 'strategy.kind' must be threshold, cardinal or abstain, got {kind!r}", source, _line(kind_node))
    z = None
    if kind != ABSTAIN:
        if "z" not in strat_entries:
            raise ConfigError("missing required key 'strategy.z'", source, line_of("strategy"))
        z_node = strat_entries["z"][1]
        z = _number(z_node, source, "strategy.z", integer=kind == CARDINAL)
        bad = (kind == THRESHOLD and not 0 <= z <= 1) or (kind == CARDINAL and not 1 <= z <= min(m, t))
        if bad:
            rng = "[0, 1]" if kind == THRESHOLD else "1..min(m, t)"
            raise ConfigError(f"key 'strategy.z' outside {rng}", source, _line(z_node))
    strategy = Strategy(kind, z)

    axis, grid = None, (None,)
    if "sweep" in top:
        sw = _mapping(top["sweep"][1], source, "sweep")
        _check_keys(sw, SWEEP_KEYS, source, "sweep")
        for name in SWEEP_KEYS:
            if name not in sw:
                raise ConfigError(f"missing required key 'sweep.{name}'", source, line_of("sweep"))
        axis = _scalar(sw["axis"][1], source, "sweep.axis")
        if axis not in AXES:
            raise ConfigError(f"key 'sweep.axis' must be one of {', '.join(AXES)}, got {axis!r}", source, _line(sw["axis"][1]))
        integer = axis in INT_AXES or (axis == "z" and kind == CARDINAL)
        lo = _number(sw["from"][1], source, "sweep.from")
        hi = _number(sw["to"][1], source, "sweep.to")
        step = _number(sw["step"][1], source, "sweep.step")
        try:
            grid = grid_values(lo, hi, step, integer)
        except ValueError as exc:
            raise ConfigError(str(exc), source, line_of("sweep")) from None
        if axis == "z" and kind == ABSTAIN:
            raise ConfigError("cannot sweep z for abstaining voters", source, line_of("sweep"))
        if axis == "n" and isinstance(sigma, list):
            raise ConfigError("sweeping n needs a scalar sigma", source, line_of("sigma"))

    engine = _scalar(top["engine"][1], source, "engine") if "engine" in top else ("exact" if kind == THRESHOLD else "mc")
    if engine not in ENGINES:
        raise ConfigError(f"key 'engine' must be one of {', '.join(ENGINES)}, got {engine!r}", source, line_of("engine"))
    if engine == "exact" and kind not in (THRESHOLD, ABSTAIN):
        raise ConfigError("engine 'exact' requires a threshold strategy", source, line_of("engine"))

    try:
        settings = Settings(m, n, k, t, rho, p, p_h, p_m, sigma, strategy, seed)
        spec = ExperimentSpec(settings, axis, grid, engine, trials, output_path)
        for value in grid:
            spec.point(value).election()
    except ValueError as exc:
        raise ConfigError(f"invalid combination: {exc}", source, line_of("sweep") if axis else None) from None
    return spec


def with_output(spec: ExperimentSpec, path: str) -> ExperimentSpec:
    return replace(spec, output_path=path)
