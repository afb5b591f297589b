import os
from dataclasses import dataclass

DEFAULT_MAX_EVENTS = 16
DEFAULT_MAX_SYNC_PAIRS = 64

GUARD_ENV_VAR = "ESGAME_GUARD"


@dataclass(frozen=True, slots=True)
class Settings:
    """Runtime limits for enumerating operations."""

    max_events: int = DEFAULT_MAX_EVENTS
    max_sync_pairs: int = DEFAULT_MAX_SYNC_PAIRS


_override: Settings | None = None


def get_settings() -> Settings:
    """
    Return the active settings.

    An explicit override (see `configure`) wins over the ``ESGAME_GUARD``
    environment variable, which wins over the defaults.

    Raises:
        ValueError: If ``ESGAME_GUARD`` is not a positive integer.
    """
    if _override is not None:
        return _override

    raw = os.environ.get(GUARD_ENV_VAR)
    if raw is None or raw == "":
        return Settings()

    try:
        max_events = int(raw)
    except ValueError as err:
        raise ValueError(f"Invalid {GUARD_ENV_VAR} value: {raw!r}") from err
    if max_events <= 0:
        raise ValueError(f"Invalid {GUARD_ENV_VAR} value: {raw!r}")

    return Settings(max_events=max_events)


def configure(settings: Settings | None) -> None:
    """Install (or with None, clear) a process-wide settings override."""
    global _override
    _override = settings
