from __future__ import annotations

from typing import Optional

import click

from ..services.artifact_store import ArtifactStore
from ..services.kernel import design
from .common import echo_json, guarded, load_config


@click.command("kernel-dump")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--K", "K", type=click.IntRange(min=1), default=None, help="Kernel order.")
@click.option("--dc/--no-dc", "include_dc", default=None, help="Keep or remove the k = 0 harmonic.")
@click.option("--period", type=float, default=1.0, show_default=True)
@click.option("--points", type=click.IntRange(min=2), default=1024, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@guarded
def kernel_dump(
    config_path: Optional[str],
    K: Optional[int],
    include_dc: Optional[bool],
    period: float,
    points: int,
    out_dir: Optional[str],
) -> None:
    """Write time-domain samples of the sum-of-sincs kernel (columns t, g)."""
    cfg = load_config(config_path)
    if K is None:
        if cfg.kernel is None:
            raise click.UsageError("give --K or a config with a kernel section")
        K = cfg.kernel.K
    if include_dc is None:
        include_dc = cfg.kernel.include_dc if cfg.kernel else True
    if cfg.signal is not None:
        period = cfg.signal.period

    spec = design(K, include_dc, period)
    stem = f"kernel_K{K}_{'dc' if include_dc else 'nodc'}"
    files = ArtifactStore(out_dir).save_kernel(stem, spec, points)
    echo_json({"kernel": spec.to_dict(), "points": points, "files": files})
