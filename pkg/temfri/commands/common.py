from __future__ import annotations

import functools
import json
import logging
import os
from typing import Any, Callable, Literal, Optional, TypeVar

import click
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..core.errors import ConfigError, TemFriError
from ..core.utils import json_sanitize
from ..services.model import SignalDocument

log = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])


# -------------------------------------------------------------------
# CONFIG SCHEMA (shared by every subcommand)
# -------------------------------------------------------------------

class KernelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    K: int = Field(ge=1)
    include_dc: bool = True


class TemSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    b: float
    kappa: float = Field(default=1.0, gt=0)
    delta: float = Field(gt=0)
    c: Optional[float] = Field(default=None, ge=0)
    bound: Literal["grid", "analytic"] = "grid"


class WindowSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    t_start: float = 0.0
    T_obs: Optional[float] = Field(default=None, gt=0)


class NoiseSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    variance: float = Field(default=0.0, ge=0)


class RecoverySection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    L: Optional[int] = Field(default=None, ge=1)
    K: Optional[int] = Field(default=None, ge=1)
    method: Optional[Literal["with-dc", "no-dc"]] = None
    spectral: Literal["annihilating", "omp"] = "annihilating"
    on_grid: bool = False
    grid_resolution: Optional[float] = Field(default=None, gt=0)


class CliConfig(BaseModel):
    """One document for all subcommands; each reads the sections it needs."""

    model_config = ConfigDict(extra="forbid")

    signal: Optional[SignalDocument] = None
    kernel: Optional[KernelSection] = None
    tem: Optional[TemSection] = None
    window: WindowSection = WindowSection()
    noise: NoiseSection = NoiseSection()
    recovery: RecoverySection = RecoverySection()
    periodize_margin: int = Field(default=0, ge=0)
    seed: Optional[int] = Field(default=None, ge=0)
    trials: Optional[int] = Field(default=None, ge=1)


def load_config(path: Optional[str]) -> CliConfig:
    if not path:
        return CliConfig()
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    try:
        return CliConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}: {e}")


def require(value: Optional[Any], what: str) -> Any:
    if value is None:
        raise ConfigError(f"config is missing the {what} section")
    return value


# -------------------------------------------------------------------
# OUTPUT AND ERRORS
# -------------------------------------------------------------------

def echo_json(data: Any) -> None:
    click.echo(json.dumps(json_sanitize(data), indent=2, sort_keys=True))


def guarded(fn: F) -> F:
    """
    Map toolkit errors to exit codes: 1 for config/usage, 2 for precondition and
    numerical failures. The violated condition, if any, goes to stderr.
    """

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except TemFriError as e:
            log.debug("command failed", exc_info=True)
            click.echo(f"error: {e}", err=True)
            raise click.exceptions.Exit(e.exit_code)
        except ValidationError as e:
            click.echo(f"error: invalid document: {e}", err=True)
            raise click.exceptions.Exit(ConfigError.exit_code)

    return wrapper  # type: ignore[return-value]
