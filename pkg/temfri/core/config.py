import os
from dataclasses import dataclass

from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()


def _env_float(name: str, default: str) -> float:
    raw = os.getenv(name, default)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}")


def _env_int(name: str, default: str) -> int:
    raw = os.getenv(name, default)
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


@dataclass
class Settings:
    # App
    app_name: str = os.getenv("TEMFRI_APP_NAME", "temfri")
    log_level: str = os.getenv("TEMFRI_LOG_LEVEL", "WARNING").upper()

    # Local data paths
    # root is project root (two levels up from this file: temfri/core/config.py)
    project_root: str = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    output_dir: str = os.getenv("TEMFRI_OUTPUT_DIR", os.path.join(project_root, "data", "out"))

    # Numerical tolerances
    spectrum_tolerance: float = _env_float("TEMFRI_SPECTRUM_TOL", "1e-10")
    svd_rcond: float = _env_float("TEMFRI_SVD_RCOND", "1e-12")
    root_xtol: float = _env_float("TEMFRI_ROOT_XTOL", "1e-13")  # relative to the period

    # Grids
    bound_grid_points: int = _env_int("TEMFRI_BOUND_GRID", "65536")
    mse_grid_points: int = _env_int("TEMFRI_MSE_GRID", "16384")

    # Experiments
    default_trials: int = _env_int("TEMFRI_TRIALS", "200")
    default_seed: int = _env_int("TEMFRI_SEED", "20210601")
    workers: int = _env_int("TEMFRI_WORKERS", "1")

    # Artifacts
    csv_digits: int = _env_int("TEMFRI_CSV_DIGITS", "17")


settings = Settings()

if settings.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
    raise ConfigError(f"TEMFRI_LOG_LEVEL must be a logging level name, got {settings.log_level!r}")
if settings.workers < 1:
    raise ConfigError("TEMFRI_WORKERS must be at least 1")
