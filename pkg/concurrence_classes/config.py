"""
Environment driven settings.

Every knob the library exposes has a CONCURRENCE_* variable. Values are read
on each call to get_settings() so callers (and tests) can change the
environment at runtime. The CLI loads a .env file before calling it.
"""

import os
from dataclasses import dataclass
from typing import Optional

from concurrence_classes.errors import ConfigError

ENV_PREFIX = "CONCURRENCE_"

DEFAULT_SEED = 1234
DEFAULT_MAX_QUBITS = 12
DEFAULT_RESTARTS = 32
DEFAULT_ITERS = 200
DEFAULT_WORKERS = 1
DEFAULT_LOG_LEVEL = "WARNING"


@dataclass(frozen=True)
class Settings:
    seed: int = DEFAULT_SEED
    max_qubits: int = DEFAULT_MAX_QUBITS
    restarts: int = DEFAULT_RESTARTS
    iters: int = DEFAULT_ITERS
    workers: int = DEFAULT_WORKERS
    norm_w: Optional[float] = None
    norm_ghz: Optional[float] = None
    norm_ghz_sub: Optional[float] = None
    log_level: str = DEFAULT_LOG_LEVEL


def _env(name: str) -> Optional[str]:
    raw = os.getenv(ENV_PREFIX + name)
    if raw is None or not raw.strip():
        return None
    return raw.strip()


def _int(name: str, default: int, minimum: int) -> int:
    raw = _env(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{ENV_PREFIX}{name} must be an integer, got {raw!r}") from exc
    if value < minimum:
        raise ConfigError(f"{ENV_PREFIX}{name} must be >= {minimum}, got {value}")
    return value


def _positive_float(name: str) -> Optional[float]:
    raw = _env(name)
    if raw is None:
        return None
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{ENV_PREFIX}{name} must be a number, got {raw!r}") from exc
    if not value > 0:
        raise ConfigError(f"{ENV_PREFIX}{name} must be strictly positive, got {value}")
    return value


def get_settings() -> Settings:
    """
    Build settings from the current environment.

    Returns:
        A frozen Settings instance.

    Raises:
        ConfigError: if a variable is set to an unusable value.
    """
    return Settings(
        seed=_int("SEED", DEFAULT_SEED, minimum=0),
        max_qubits=_int("MAX_QUBITS", DEFAULT_MAX_QUBITS, minimum=1),
        restarts=_int("RESTARTS", DEFAULT_RESTARTS, minimum=1),
        iters=_int("ITERS", DEFAULT_ITERS, minimum=1),
        workers=_int("WORKERS", DEFAULT_WORKERS, minimum=1),
        norm_w=_positive_float("NORM_W"),
        norm_ghz=_positive_float("NORM_GHZ"),
        norm_ghz_sub=_positive_float("NORM_GHZSUB"),
        log_level=(_env("LOG_LEVEL") or DEFAULT_LOG_LEVEL).upper(),
    )
