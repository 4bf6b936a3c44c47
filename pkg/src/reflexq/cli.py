"""Command-line front end.

Exit codes: 0 success, 1 internal failure, 2 usage or input error.
Configuration precedence is flag > config file > built-in default; the run
manifest records where every value came from.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import CONFIG_SCHEMA, load_config_file, resolve_config
from .dynamics import DelayLine, SdofParams, discretize
from .errors import ReflexQError
from .gamma_filter import build_from_probe, save_filter_csv
from .report import write_report
from .reward import uncontrolled_peaks
from .trainer import load_motion, run, write_trace_csv

USAGE_ERROR = 2


def _fail(message):
    click.echo(f"error: {message}", err=True)
    sys.exit(USAGE_ERROR)


def _resolved_config(config_path, set_overrides, **named_flags):
    file_values = {}
    if config_path:
        try:
            file_values = load_config_file(config_path)
        except FileNotFoundError:
            _fail(f"config file not found: {config_path}")
        except ReflexQError as exc:
            _fail(str(exc))
    flag_values = {}
    for item in set_overrides:
        key, sep, value = item.partition("=")
        if not sep:
            _fail(f"--set expects key=value, got {item!r}")
        flag_values[key.strip()] = value.strip()
    for key, value in named_flags.items():
        if value is not None:
            flag_values[key] = value
    try:
        return resolve_config(file_values, flag_values)
    except ReflexQError as exc:
        _fail(str(exc))


def _set_option(fn):
    return click.option("--set", "-s", "set_overrides", multiple=True, metavar="KEY=VALUE",
                        help="Override any configuration key (repeatable).")(fn)


@click.group()
@click.version_option(version=__version__)
def main():
    """Q-learning vibration control with impulse-derived reward filters."""


@main.command("simulate-uncontrolled")
@click.option("--config", "config_path", type=click.Path(), default=None, help="Config file.")
@click.option("--record", "record_path", type=click.Path(), default=None, help="Ground-motion file (CSV or AT2).")
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Output directory.")
@_set_option
def simulate_uncontrolled(config_path, record_path, out_dir, set_overrides):
    """Null-controller baseline: response trace and peak summary."""
    cfg, _ = _resolved_config(config_path, set_overrides,
                              **({"record.path": record_path} if record_path else {}))
    try:
        motion = load_motion(cfg)
        model = discretize(SdofParams(cfg.mass, cfg.stiffness, cfg.damping), cfg.dt)
        peaks = uncontrolled_peaks(model, motion,
                                   delay=DelayLine.from_seconds(cfg.delay_seconds, cfg.dt),
                                   delay_applies_to=cfg.delay_applies_to)
        from .dynamics import simulate
        series = simulate(model, motion, delay=DelayLine.from_seconds(cfg.delay_seconds, cfg.dt),
                          delay_applies_to=cfg.delay_applies_to)
    except (ReflexQError, FileNotFoundError) as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(series, out / "uncontrolled_trace.csv")
    summary = {"u_max": peaks[0], "v_max": peaks[1], "a_max": peaks[2],
               "pga": motion.peak, "record": motion.name, "n_samples": len(motion)}
    with open(out / "peaks.json", "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    click.echo(f"wrote {out / 'uncontrolled_trace.csv'} and {out / 'peaks.json'}")


@main.command("build-filter")
@click.option("--config", "config_path", type=click.Path(), default=None, help="Config file.")
@click.option("--delay", "delay_seconds", type=float, default=None, help="Action-effect delay, s.")
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Output directory.")
@_set_option
def build_filter(config_path, delay_seconds, out_dir, set_overrides):
    """Probe the structure once and build the reward response filter."""
    flags = {}
    if delay_seconds is not None:
        flags["delay.seconds"] = delay_seconds
    cfg, _ = _resolved_config(config_path, set_overrides, **flags)
    try:
        model = discretize(SdofParams(cfg.mass, cfg.stiffness, cfg.damping), cfg.dt)
        filt, response = build_from_probe(
            model, DelayLine.from_seconds(cfg.delay_seconds, cfg.dt),
            probe_force=cfg.effective_probe_force(),
            p=cfg.filter_cutoff_percent, rule=cfg.filter_cutoff_rule)
    except ReflexQError as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_filter_csv(filt, out / "filter.csv")
    with open(out / "probe_trace.csv", "w") as fh:
        fh.write("step,time,abs_displacement\n")
        for i, value in enumerate(response):
            fh.write(f"{i},{i * model.dt!r},{float(value)!r}\n")
    click.echo(f"filter: {len(filt.gammas)} weights + bootstrap {filt.bootstrap_gamma:.6g} "
               f"({filt.duration:.3g} s window)")
    click.echo(f"wrote {out / 'filter.csv'} and {out / 'probe_trace.csv'}")


@main.command("train")
@click.option("--config", "config_path", type=click.Path(), default=None, help="Config file.")
@click.option("--method", type=click.Choice(["original", "enhanced"]), default=None)
@click.option("--delay", "delay_seconds", type=float, default=None, help="Action-effect delay, s.")
@click.option("--seed", type=int, default=None, help="Master RNG seed.")
@click.option("--episodes", type=int, default=None, help="Training episodes.")
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Output directory.")
@_set_option
def train(config_path, method, delay_seconds, seed, episodes, out_dir, set_overrides):
    """Run a full training experiment and write all artifacts."""
    flags = {}
    if method is not None:
        flags["train.method"] = method
    if delay_seconds is not None:
        flags["delay.seconds"] = delay_seconds
    if seed is not None:
        flags["train.seed"] = seed
    if episodes is not None:
        flags["train.episodes"] = episodes
    cfg, provenance = _resolved_config(config_path, set_overrides, **flags)
    for note in ("assumed defaults are listed in the run manifest",):
        click.echo(f"note: {note}")
    try:
        result = run(cfg, out_dir=out_dir, provenance=provenance)
    except (ReflexQError, FileNotFoundError) as exc:
        _fail(str(exc))
    log = result.log
    if log.best_eval_index is not None:
        best = log.evaluations[log.best_eval_index]
        click.echo(
            f"best greedy evaluation (episode {best.episode}): "
            f"displacement improvement {best.improvements[0]:.2f}%, "
            f"velocity {best.improvements[1]:.2f}%, acceleration {best.improvements[2]:.2f}%")
    click.echo(f"wrote run artifacts to {out_dir}")


@main.command("report")
@click.option("--runs", "run_dirs", type=click.Path(), multiple=True, required=True,
              help="Run directories to aggregate (repeatable).")
@click.option("--out", "out_file", type=click.Path(), required=True,
              help="Comparison table CSV path.")
def report(run_dirs, out_file):
    """Aggregate run summaries into one method x delay x metric table."""
    try:
        csv_path, text_path, rewards_path = write_report(run_dirs, out_file)
    except (ReflexQError, FileNotFoundError) as exc:
        _fail(str(exc))
    click.echo(f"wrote {csv_path}, {text_path}, {rewards_path}")


if __name__ == "__main__":
    main()
