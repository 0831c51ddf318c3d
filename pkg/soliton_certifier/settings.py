"""
Process-level settings for the soliton certifier.

Values come from the environment (or a .env file at the repository root):

    SOLITON_LOG_LEVEL    console log level                 (default INFO)
    SOLITON_LOG_DIR      directory for log files, or ""     (default "", no file log)
    SOLITON_WORKERS      default sweep parallelism          (default 1)
    SOLITON_OUTPUT_DIR   default output directory           (default "results")

Run configuration (model, grid, solver, ...) lives in the config file, not here.
"""

import os
from dataclasses import dataclass
from pathlib import Path

import environ

from Modules.Definitions import ConfigurationError

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env = environ.Env(
    SOLITON_LOG_LEVEL=(str, "INFO"),
    SOLITON_LOG_DIR=(str, ""),
    SOLITON_WORKERS=(int, 1),
    SOLITON_OUTPUT_DIR=(str, "results"),
)

ENV_FILE = BASE_DIR / ".env"
if ENV_FILE.is_file():
    environ.Env.read_env(str(ENV_FILE))


@dataclass(frozen=True)
class Settings:
    log_level: str
    log_dir: str
    workers: int
    output_dir: str


def load_settings() -> Settings:
    """Read the settings now, so changes to os.environ after import are honoured."""
    try:
        workers = env("SOLITON_WORKERS")
    except ValueError:
        raise ConfigurationError(f"SOLITON_WORKERS must be an integer, got {os.environ.get('SOLITON_WORKERS')!r}",
                                 field="SOLITON_WORKERS") from None
    if workers < 1:
        raise ConfigurationError(f"SOLITON_WORKERS must be at least 1, got {workers}", field="SOLITON_WORKERS")
    return Settings(
        log_level=env("SOLITON_LOG_LEVEL").upper(),
        log_dir=env("SOLITON_LOG_DIR"),
        workers=workers,
        output_dir=env("SOLITON_OUTPUT_DIR"),
    )
