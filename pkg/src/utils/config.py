import os
import logging
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

STAGE_SOLVERS = ("newton", "fixed-point")


@dataclass(frozen=True)
class Settings:
    """
    Runtime configuration, read from the environment (and an optional .env file).

    Every consumer also accepts explicit keyword overrides; these values are only
    the defaults used when a caller does not say otherwise.
    """
    max_degree: int = 8
    log_level: str = "WARNING"
    stage_solver: str = "newton"
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    progress: bool = False


_settings: Optional[Settings] = None


def _read_int(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return value


def _read_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be a number, got {raw!r}")
    if not value > 0:
        raise ConfigurationError(f"{name} must be positive, got {value}")
    return value


def _read_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{name} must be a boolean, got {raw!r}")


def load_settings() -> Settings:
    """
    Build a Settings object from CSRKN_* environment variables.

    Returns:
        Settings with defaults filled in for unset variables

    Raises:
        ConfigurationError: a variable is set to an unusable value
    """
    load_dotenv(override=False)

    solver = os.getenv("CSRKN_STAGE_SOLVER", "newton").strip().lower()
    if solver not in STAGE_SOLVERS:
        raise ConfigurationError(f"CSRKN_STAGE_SOLVER must be one of {STAGE_SOLVERS}, got {solver!r}")

    level = os.getenv("CSRKN_LOG_LEVEL", "WARNING").strip().upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigurationError(f"CSRKN_LOG_LEVEL is not a logging level: {level!r}")

    settings = Settings(
        max_degree=_read_int("CSRKN_MAX_DEGREE", 8, minimum=2),
        log_level=level,
        stage_solver=solver,
        newton_tol=_read_float("CSRKN_NEWTON_TOL", 1e-12),
        newton_max_iter=_read_int("CSRKN_NEWTON_MAX_ITER", 50, minimum=1),
        progress=_read_bool("CSRKN_PROGRESS", False),
    )
    logger.debug(f"Loaded settings: {settings}")
    return settings


def get_settings() -> Settings:
    """Cached settings; the environment is read on first use only."""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def reset_settings() -> None:
    """Forget cached settings so the next get_settings() re-reads the environment."""
    global _settings
    _settings = None
