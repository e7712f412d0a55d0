from __future__ import annotations

from typing import Optional


class TemFriError(Exception):
    """
    Root of every error raised by the toolkit.

    `exit_code` is what the command line returns for this class of failure;
    `condition` names the sampling/recovery condition that was violated, if any.
    """

    exit_code: int = 2

    def __init__(self, detail: str, *, condition: Optional[str] = None) -> None:
        super().__init__(detail)
        self.detail = detail
        self.condition = condition

    def __str__(self) -> str:
        if self.condition:
            return f"{self.detail} (requires {self.condition})"
        return self.detail


class ConfigError(TemFriError):
    exit_code = 1


class PreconditionError(TemFriError, ValueError):
    exit_code = 2


class NumericalError(TemFriError, ArithmeticError):
    exit_code = 2
