from __future__ import annotations

import logging
import sys
from typing import Any

import click

from .commands.kernel import kernel_dump
from .commands.recover import recover
from .commands.simulate import simulate
from .commands.study import study
from .core.config import settings


class TemFriGroup(click.Group):
    """Click group with the toolkit's exit codes: usage errors exit 1, not click's 2."""

    def main(self, *args: Any, **kwargs: Any) -> Any:
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(*args, **kwargs)
        except click.UsageError as e:
            e.show()
            sys.exit(1)
        except click.ClickException as e:
            e.show()
            sys.exit(e.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)
        sys.exit(rv if isinstance(rv, int) else 0)


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format=f"%(asctime)s {settings.app_name} %(name)s %(levelname)s: %(message)s",
    )
    logging.getLogger("temfri").setLevel(level)


def create_cli() -> click.Group:
    @click.group(cls=TemFriGroup, help="IF-TEM time encoding and recovery of FRI signals.")
    @click.option("--verbose", "-v", is_flag=True, default=False, help="Debug logging.")
    def cli(verbose: bool) -> None:
        _configure_logging(verbose)

    cli.add_command(simulate)
    cli.add_command(recover)
    cli.add_command(study)
    cli.add_command(kernel_dump)
    return cli
