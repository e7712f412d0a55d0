from __future__ import annotations

import logging
from typing import Optional

import click

from ..core.errors import PreconditionError
from ..services.artifact_store import ArtifactStore
from ..services.encoder import RATE_CONDITION, TemParams, encode, validate_rate
from ..services.kernel import FilteredSignal, KernelSpec, bound_c, design, filter_signal
from ..services.model import FriSignal, pulse_support, signal_from_dict, signal_to_dict
from ..services.recovery import filter_nonperiodic, periodize_kernel
from .common import CliConfig, echo_json, guarded, load_config, require

log = logging.getLogger(__name__)


def filtered_input(signal: FriSignal, spec: KernelSpec, margin: int = 0) -> FilteredSignal:
    if signal.periodic:
        return filter_signal(signal, spec)
    periodized = periodize_kernel(spec, pulse_support(signal.pulse), signal.period, margin)
    return filter_nonperiodic(signal, periodized)


def build_params(cfg: CliConfig, signal: FriSignal, spec: KernelSpec, y: FilteredSignal) -> TemParams:
    tem = require(cfg.tem, "tem")
    c = tem.c
    if c is None:
        c = bound_c(signal, spec, mode=tem.bound, filtered=y)
    return TemParams(b=tem.b, kappa=tem.kappa, delta=tem.delta, c=c)


@click.command("simulate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--name", default="firings", show_default=True, help="Artifact file stem.")
@guarded
def simulate(config_path: str, out_dir: Optional[str], name: str) -> None:
    """Filter the configured FRI stream and time-encode it with the IF-TEM."""
    cfg = load_config(config_path)
    signal = signal_from_dict(require(cfg.signal, "signal").model_dump())
    kernel = require(cfg.kernel, "kernel")
    spec = design(kernel.K, kernel.include_dc, signal.period)

    y = filtered_input(signal, spec, cfg.periodize_margin)
    params = build_params(cfg, signal, spec, y)
    rate = validate_rate(params, spec.K, signal.period)
    if not rate.ok:
        raise PreconditionError(
            f"firing rate too low: (b - c)/(kappa*delta) = {rate.min_rate:.6g} < (2K+2)/T = {rate.required:.6g}",
            condition=RATE_CONDITION,
        )

    T_obs = cfg.window.T_obs or signal.period
    record = encode(y, params, cfg.window.t_start, T_obs)
    store = ArtifactStore(out_dir)
    files = store.save_firings(
        name, record, extra={"signal": signal_to_dict(signal), "kernel": spec.to_dict(), "rate": rate.to_dict()}
    )
    log.info("simulate: %d firings written to %s", len(record), files[0])
    echo_json({"firings": len(record), "params": params.to_dict(), "rate": rate.to_dict(), "files": files})
