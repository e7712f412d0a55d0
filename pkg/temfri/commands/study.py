from __future__ import annotations

import logging
from dataclasses import replace
from typing import Any, Dict, Optional

import click

from ..core.config import settings
from ..core.errors import ConfigError
from ..services import bench
from ..services.artifact_store import ArtifactStore
from ..services.model import signal_from_dict
from .common import CliConfig, echo_json, guarded, load_config

log = logging.getLogger(__name__)

STUDIES = ("table1", "cond", "mse", "pulses", "dirac")

# config sections each study reads besides seed and trials
STUDY_SECTIONS: Dict[str, frozenset] = {
    "table1": frozenset(),
    "cond": frozenset(),
    "dirac": frozenset(),
    "pulses": frozenset({"signal", "kernel", "tem"}),
    "mse": frozenset({"signal", "kernel", "tem", "noise", "recovery"}),
}


def experiment_overrides(kind: str, cfg: CliConfig) -> Dict[str, Any]:
    """ExperimentConfig fields taken from the config; sections the study cannot use are rejected."""
    unused = sorted(set(cfg.model_fields_set) - {"seed", "trials"} - STUDY_SECTIONS[kind])
    if unused:
        raise ConfigError(f"study {kind} does not read config section(s): {', '.join(unused)}")

    out: Dict[str, Any] = {}
    if cfg.signal is not None:
        out["signal"] = signal_from_dict(cfg.signal.model_dump())
    if cfg.kernel is not None:
        if not cfg.kernel.include_dc and kind == "pulses":
            raise ConfigError("study pulses runs the DC kernel; drop kernel.include_dc")
        out["K"] = cfg.kernel.K
    if cfg.tem is not None:
        if cfg.tem.c is not None:
            raise ConfigError("studies derive c from the signal; drop tem.c")
        out.update(b=cfg.tem.b, kappa=cfg.tem.kappa, deltas=(cfg.tem.delta,))
    if kind == "mse" and cfg.recovery.grid_resolution is not None:
        out["grid_resolution"] = cfg.recovery.grid_resolution
    return out


@click.command("study")
@click.argument("kind", type=click.Choice(STUDIES))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Master seed.")
@click.option("--trials", type=click.IntRange(min=1), default=None)
@click.option("--noiseless", is_flag=True, default=False, help="mse only: drop the jitter.")
@guarded
def study(
    kind: str,
    config_path: Optional[str],
    out_dir: Optional[str],
    seed: Optional[int],
    trials: Optional[int],
    noiseless: bool,
) -> None:
    """Run an experiment and write {scenario}_{seed}.csv/.json; exits 0 only if its checks pass."""
    cfg = load_config(config_path)
    overrides = experiment_overrides(kind, cfg)
    if seed is None:
        seed = cfg.seed if cfg.seed is not None else settings.default_seed
    trials = trials or cfg.trials

    if kind == "table1":
        report = bench.run_table1(bench.ExperimentConfig(scenario="table1", seed=seed))
    elif kind == "dirac":
        report = bench.run_dirac_demo(bench.ExperimentConfig(scenario="dirac", seed=seed))
    elif kind == "pulses":
        report = bench.run_pulse_demo(bench.ExperimentConfig(scenario="pulses", seed=seed, **overrides))
    elif kind == "cond":
        n = trials or 1000
        report = bench.run_condition_study(
            trials=n, config=bench.ExperimentConfig(scenario="cond", seed=seed, trials=n)
        )
    else:
        experiment = bench.ExperimentConfig.mse_default(trials=trials, seed=seed, noiseless=noiseless)
        if not noiseless and cfg.noise.variance:
            overrides["variance"] = cfg.noise.variance
        report = bench.run_mse_study(replace(experiment, **overrides), noiseless=noiseless)

    files = ArtifactStore(out_dir).save_report(report)
    log.info("study %s: passed=%s, files %s", kind, report.passed, files)
    echo_json({"scenario": report.scenario, "seed": report.seed, "passed": report.passed,
               "checks": report.checks, "files": files})
    if not report.passed:
        click.echo(f"error: study {kind} failed checks: "
                   + ", ".join(k for k, ok in report.checks.items() if not ok), err=True)
        raise click.exceptions.Exit(2)
