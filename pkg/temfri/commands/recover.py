from __future__ import annotations

import logging
import os
from typing import Optional

import click

from ..core.errors import ConfigError
from ..services.artifact_store import ArtifactStore
from ..services.model import signal_from_dict
from ..services.recovery import reconstruct_alg1, reconstruct_alg2
from .common import echo_json, guarded, load_config

log = logging.getLogger(__name__)


@click.command("recover")
@click.option("--firings", "firings_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Firing metadata JSON written by simulate (a sibling CSV overrides its instants).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--method", type=click.Choice(["with-dc", "no-dc"]), default=None,
              help="with-dc: matrix A pipeline; no-dc: matrix B pipeline.")
@click.option("--on-grid", is_flag=True, default=False, help="Delays lie on a known grid (OMP).")
@click.option("--grid-resolution", type=float, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--name", default="recovered", show_default=True)
@guarded
def recover(
    firings_path: str,
    config_path: Optional[str],
    method: Optional[str],
    on_grid: bool,
    grid_resolution: Optional[float],
    out_dir: Optional[str],
    name: str,
) -> None:
    """Recover amplitudes and delays from a firing record."""
    cfg = load_config(config_path)
    path = os.path.abspath(firings_path)
    reader = ArtifactStore(os.path.dirname(path))
    meta = reader.read_json(path)
    record = reader.load_firings(path)

    signal_doc = cfg.signal.model_dump() if cfg.signal else meta.get("signal")
    if signal_doc is None:
        raise ConfigError("pulse shape and period unknown: add a signal section to the config")
    model = signal_from_dict(signal_doc)
    kernel_meta = meta.get("kernel") or {}

    rec = cfg.recovery
    L = rec.L or model.L
    K = rec.K or (cfg.kernel.K if cfg.kernel else kernel_meta.get("K"))
    if K is None:
        raise ConfigError("kernel order K unknown: add a kernel or recovery section to the config")
    method = method or rec.method or ("with-dc" if kernel_meta.get("include_dc", True) else "no-dc")
    on_grid = on_grid or rec.on_grid
    resolution = grid_resolution or rec.grid_resolution
    if on_grid and resolution is None:
        raise ConfigError("--on-grid needs --grid-resolution")

    T = model.period
    if method == "with-dc":
        spectral = "omp" if on_grid else rec.spectral
        result = reconstruct_alg1(record, record.params, int(K), model.pulse, L, T,
                                  method=spectral, grid_resolution=resolution)
    else:
        result = reconstruct_alg2(record, record.params, int(K), model.pulse, L, T,
                                  delays_on_grid=on_grid, grid_resolution=resolution)

    payload = dict(result.to_dict(), firings=len(record), pipeline=method, K=int(K), L=L, period=T)
    written = ArtifactStore(out_dir).write_json(f"{name}.json", payload)
    log.info("recover: %s pipeline, cond=%.3g, written to %s", method, result.condition_number, written)
    echo_json(payload)
