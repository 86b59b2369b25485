"""Run configuration and the plain-text key=value config file format."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

from .schedules import Dynamic, StaticConvex, StaticNonconvex

SCHEDULES = ("static-nc", "static-c", "dynamic")


class ConfigError(ValueError):
    """A configuration file or value could not be parsed."""


@dataclass
class RunConfig:
    """Everything a single solver run needs besides the problem itself.

    ``schedule`` selects the parameter regime:

    * ``static-nc`` -- constant coefficients, nonconvex step rule on every
      block (always sound, conservative);
    * ``static-c`` -- constant coefficients, convex step rule on blocks whose
      nonsmooth term is convex and the nonconvex rule elsewhere (the usual
      choice);
    * ``dynamic`` -- coefficients ``(k-1)/(k+2)`` with ``tau = L`` (heuristic).
    """

    schedule: str = "static-c"
    alpha_bar: float = 0.0
    beta_bar: float = 0.0
    epsilon: float = 0.0
    iters: int = 1000
    tol: float = 1e-9
    seed: int = 0
    backtrack: bool = True
    bt_growth: float = 2.0
    bt_shrink: float = 0.5
    bt_max_rounds: int = 60
    bt_l0: float = 1.0
    kernel_step_scale: float = 1.0
    step_scale: Optional[tuple] = None  # per-block tau multipliers, overrides
    constant_delta: Optional[tuple] = None  # pins the Lyapunov step weights
    checkpoints: tuple = (100, 500, 1000, 5000)
    out: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ConfigError(
                f"unknown schedule {self.schedule!r}; expected one of {SCHEDULES}"
            )
        if self.iters < 1:
            raise ConfigError(f"iters must be >= 1, got {self.iters}")
        if self.kernel_step_scale < 1.0:
            raise ConfigError(
                f"kernel_step_scale must be >= 1, got {self.kernel_step_scale}"
            )

    def resolved_step_scale(self, num_blocks: int) -> tuple:
        if self.step_scale is not None:
            return tuple(self.step_scale)
        return (1.0,) * num_blocks


def block_kinds(problem, config: RunConfig) -> tuple:
    """Per-block schedule kinds implied by the configuration."""
    if config.schedule == "dynamic":
        return (Dynamic(),) * problem.num_blocks
    kinds = []
    for i in range(problem.num_blocks):
        if config.schedule == "static-c" and problem.is_convex(i):
            kinds.append(
                StaticConvex(config.alpha_bar, config.beta_bar, config.epsilon)
            )
        else:
            kinds.append(
                StaticNonconvex(config.alpha_bar, config.beta_bar, config.epsilon)
            )
    return tuple(kinds)


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}

# keys settable from a config file, with their coercions
_FILE_KEYS = {
    "schedule": str,
    "alpha_bar": float,
    "beta_bar": float,
    "epsilon": float,
    "iters": int,
    "tol": float,
    "seed": int,
    "backtrack": "bool",
    "bt_growth": float,
    "bt_shrink": float,
    "bt_max_rounds": int,
    "bt_l0": float,
    "kernel_step_scale": float,
    "checkpoints": "int_list",
    "out": str,
    "jobs": int,
}


def _coerce(key: str, raw: str, lineno: int):
    kind = _FILE_KEYS[key]
    try:
        if kind == "bool":
            word = raw.strip().lower()
            if word not in _BOOL_WORDS:
                raise ValueError(f"not a boolean: {raw!r}")
            return _BOOL_WORDS[word]
        if kind == "int_list":
            return tuple(int(part) for part in raw.split(",") if part.strip())
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None


def load_config(path) -> RunConfig:
    """Parse a ``key=value`` file (one per line, ``#`` comments) into a RunConfig.

    Unknown keys are rejected; malformed lines report their line number.
    An empty file yields all defaults.
    """
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected key=value, got {line.rstrip()!r}")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in _FILE_KEYS:
                known = ", ".join(sorted(_FILE_KEYS))
                raise ConfigError(f"line {lineno}: unknown key {key!r} (known: {known})")
            values[key] = _coerce(key, raw, lineno)
    cfg = RunConfig(**values)
    # which keys the file actually set, so callers can layer precedence
    cfg.explicit_keys = frozenset(values)
    return cfg


def config_defaults_help() -> str:
    """One line per config key with its default, for CLI help output."""
    default = RunConfig()
    lines = []
    for f in fields(RunConfig):
        if f.name in _FILE_KEYS:
            lines.append(f"{f.name}={getattr(default, f.name)}")
    return "; ".join(lines)
