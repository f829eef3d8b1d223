"""Experiment configuration: one frozen dataclass plus a flat text format.

Config files are plain `key = value` lines with `#` comments.  Keys are
namespaced by section (run.seed, env.name, strategy.kind, td3.gamma).
Unknown keys are errors, not warnings: a typo that silently falls back
to a default is the worst failure mode a sweep can have.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .errors import InvalidConfigError
from .strategies import StrategyConfig
from .td3 import TD3Config


@dataclass(frozen=True)
class RunConfig:
    """Everything one training run needs."""

    env_name: str = "pendulum"
    env_noise_sd: float = 0.0
    env_horizon: int = 200
    env_system_seed: int = 0
    strategy: StrategyConfig = field(
        default_factory=lambda: StrategyConfig(kind="uniform"))
    td3: TD3Config = field(default_factory=TD3Config)
    total_env_steps: int = 50_000
    eval_interval: int = 1000
    eval_episodes: int = 5
    smoothing_window: int = 11
    buffer_capacity: int = 200_000
    seed: int = 0
    out_dir: str = "runs"

    def __post_init__(self):
        if self.env_name not in ("linear", "pendulum"):
            raise InvalidConfigError(
                f"env.name must be 'linear' or 'pendulum', got {self.env_name!r}"
            )
        if self.total_env_steps < 0:
            raise InvalidConfigError("run.total_env_steps must be non-negative")
        if self.eval_interval < 1 or self.eval_episodes < 1:
            raise InvalidConfigError("eval settings must be positive")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise InvalidConfigError(
                f"run.smoothing_window must be odd, got {self.smoothing_window}"
            )
        if self.buffer_capacity < 1:
            raise InvalidConfigError("run.buffer_capacity must be positive")
        if self.env_horizon < 1:
            raise InvalidConfigError("env.horizon must be positive")
        if self.env_noise_sd < 0:
            raise InvalidConfigError("env.noise_sd must be non-negative")


_RUN_KEYS = {
    "run.total_env_steps": ("total_env_steps", int),
    "run.eval_interval": ("eval_interval", int),
    "run.eval_episodes": ("eval_episodes", int),
    "run.smoothing_window": ("smoothing_window", int),
    "run.buffer_capacity": ("buffer_capacity", int),
    "run.seed": ("seed", int),
    "run.out": ("out_dir", str),
    "env.name": ("env_name", str),
    "env.noise_sd": ("env_noise_sd", float),
    "env.horizon": ("env_horizon", int),
    "env.system_seed": ("env_system_seed", int),
}


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise InvalidConfigError(f"expected a boolean, got {raw!r}")


def _parse_typed(raw: str, typ):
    try:
        if typ is bool:
            return _parse_bool(raw)
        if typ is tuple:
            return tuple(int(p) for p in raw.split(",") if p.strip())
        return typ(raw)
    except (ValueError, TypeError):
        raise InvalidConfigError(f"cannot parse {raw!r} as {typ.__name__}")


def _section_fields(dc_type):
    out = {}
    for f in fields(dc_type):
        typ = f.type if isinstance(f.type, type) else None
        if typ is None:
            # dataclass stores annotations as strings under future import
            typ = {"int": int, "float": float, "str": str,
                   "bool": bool, "tuple": tuple}.get(f.type)
        out[f.name] = typ
    return out


_STRATEGY_FIELDS = _section_fields(StrategyConfig)
_TD3_FIELDS = _section_fields(TD3Config)


def apply_settings(cfg: RunConfig, settings: dict) -> RunConfig:
    """New RunConfig with namespaced string settings applied.

    Values may be already-typed Python objects (from CLI flags) or raw
    strings (from config files); strings are coerced to the field type.
    """
    run_updates = {}
    strat_updates = {}
    td3_updates = {}
    for key, value in settings.items():
        if key in _RUN_KEYS:
            name, typ = _RUN_KEYS[key]
            run_updates[name] = _parse_typed(value, typ) \
                if isinstance(value, str) else value
            continue
        section, _, leaf = key.partition(".")
        if section == "strategy" and leaf in _STRATEGY_FIELDS:
            typ = _STRATEGY_FIELDS[leaf]
            strat_updates[leaf] = _parse_typed(value, typ) \
                if isinstance(value, str) else value
        elif section == "td3" and leaf in _TD3_FIELDS:
            typ = _TD3_FIELDS[leaf]
            td3_updates[leaf] = _parse_typed(value, typ) \
                if isinstance(value, str) else value
        else:
            raise InvalidConfigError(f"unknown config key {key!r}")
    if strat_updates:
        run_updates["strategy"] = replace(cfg.strategy, **strat_updates)
    if td3_updates:
        run_updates["td3"] = replace(cfg.td3, **td3_updates)
    return replace(cfg, **run_updates) if run_updates else cfg


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """RunConfig from `key = value` lines; later lines win."""
    settings = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(
                f"line {lineno}: expected 'key = value', got {raw!r}"
            )
        key, _, value = line.partition("=")
        settings[key.strip()] = value.strip()
    return apply_settings(base or RunConfig(), settings)


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), base)
