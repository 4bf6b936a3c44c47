"""Aggregate run artifacts into one comparison table plus reward curves."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import IncompatibleRunsError, InvalidParameterError
from .trainer import improvement_pct, write_summary

__all__ = ["load_run_artifacts", "aggregate_runs", "write_report"]

# run compatibility requires these manifest-config keys to agree
_COMPAT_KEYS = ("structure.mass", "structure.stiffness", "structure.damping",
                "sim.sample_rate_hz", "sim.steps_per_episode")

# recomputed improvements must match the stored column this closely (pct points)
_CROSSCHECK_TOL = 1e-9


def load_run_artifacts(run_dir):
    """Read manifest, summary rows, and the per-episode reward curve."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    summary_path = run_dir / "summary.csv"
    log_path = run_dir / "training_log.csv"
    if not manifest_path.exists():
        raise InvalidParameterError(f"{run_dir}: no manifest.json; not a run directory")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    rows = []
    if summary_path.exists():
        with open(summary_path) as fh:
            header = fh.readline().strip().split(",")
            for line in fh:
                cells = line.strip().split(",")
                row = dict(zip(header, cells))
                for key in ("delay_s", "uncontrolled", "controlled", "improvement_pct"):
                    row[key] = float(row[key])
                rows.append(row)
    rewards = []
    if log_path.exists():
        with open(log_path) as fh:
            fh.readline()
            for line in fh:
                cells = line.strip().split(",")
                rewards.append((int(cells[0]), float(cells[1])))
    return {"dir": run_dir, "manifest": manifest, "summary": rows, "rewards": rewards}


def _check_compatible(runs):
    reference = runs[0]["manifest"]
    for other in runs[1:]:
        man = other["manifest"]
        for key in _COMPAT_KEYS:
            if man["config"].get(key) != reference["config"].get(key):
                raise IncompatibleRunsError(
                    f"{other['dir']}: {key}={man['config'].get(key)!r} differs from "
                    f"{runs[0]['dir']}: {reference['config'].get(key)!r}")
        if man.get("record_digest") != reference.get("record_digest"):
            raise IncompatibleRunsError(
                f"{other['dir']}: record digest differs from {runs[0]['dir']}")


def aggregate_runs(run_dirs):
    """Collect and cross-check summary rows across runs (method x delay x metric)."""
    runs = [load_run_artifacts(d) for d in run_dirs]
    _check_compatible(runs)
    table = []
    for entry in runs:
        for row in entry["summary"]:
            recomputed = improvement_pct(row["uncontrolled"], row["controlled"])
            if abs(recomputed - row["improvement_pct"]) > _CROSSCHECK_TOL:
                raise IncompatibleRunsError(
                    f"{entry['dir']}: stored improvement {row['improvement_pct']} "
                    f"disagrees with recomputed {recomputed}")
            table.append(dict(row))
    return runs, table


def write_report(run_dirs, out_file):
    """Write the comparison table (CSV + text) and the reward-curve CSV.

    Returns the paths written.
    """
    runs, table = aggregate_runs(run_dirs)
    out_file = Path(out_file)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    text_path = out_file.with_suffix(".txt")
    write_summary(table, out_file, text_path)
    rewards_path = out_file.with_name(out_file.stem + "_rewards.csv")
    with open(rewards_path, "w") as fh:
        fh.write("run,method,delay_s,seed,episode,mean_reward\n")
        for entry in runs:
            cfg = entry["manifest"]["config"]
            label = entry["dir"].name
            for episode, mean_reward in entry["rewards"]:
                fh.write(f"{label},{cfg['train.method']},{cfg['delay.seconds']!r},"
                         f"{entry['manifest']['seed']},{episode},{mean_reward!r}\n")
    return out_file, text_path, rewards_path
