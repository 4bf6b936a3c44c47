"""Training orchestration: episodes, filter construction, evaluation, artifacts.

A run (1) simulates the uncontrolled baseline to obtain the reward
normalization peaks, (2) for the enhanced method probes the plant once and
freezes the reward response filter, (3) loops episodes of epsilon-greedy
rollout with experience-window emission and replay training, syncing the
target network on its episode schedule, and (4) evaluates greedily on a
cadence, keeping the best snapshot by peak-displacement improvement.

Everything a run produces is deterministic for a fixed (config, seed); wall
clock and timestamps live only in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .agent import (ActionSpace, ExperienceWindow, ReplayBuffer, epsilon_schedule,
                    select_action, sync_target, train_minibatch)
from .config import CONFIG_SCHEMA, ExperimentConfig
from .dynamics import DelayLine, ResponseSeries, SdofParams, discretize, step
from .errors import InvalidParameterError
from .excitation import GroundMotion, load_at2, load_csv, pad_or_trim, resample, synth
from .gamma_filter import ReflexiveGamma, build_from_probe, save_filter_csv
from .qnet import QNetwork, clone, init_network, load_checkpoint, save_checkpoint
from .reward import RewardConfig, reward_terms, uncontrolled_peaks

__all__ = ["EvalSnapshot", "TrainingLog", "RunResult", "load_motion", "run",
           "evaluate", "write_run_artifacts", "improvement_pct"]

METRIC_NAMES = ("displacement", "velocity", "acceleration")


def improvement_pct(uncontrolled, controlled):
    """(uncontrolled - controlled) / uncontrolled * 100."""
    return (uncontrolled - controlled) / uncontrolled * 100.0


@dataclass
class EvalSnapshot:
    episode: int
    peaks: tuple            # (|u|, |v|, |a|) maxima of the greedy rollout
    improvements: tuple     # percent, per metric


@dataclass
class TrainingLog:
    mean_reward: list = field(default_factory=list)
    mean_td_error: list = field(default_factory=list)
    epsilon: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)
    best_eval_index: int | None = None
    seed: int = 0


@dataclass
class RunResult:
    config: ExperimentConfig
    motion: GroundMotion
    uncontrolled_peaks: tuple       # (u_max, v_max, a_max)
    pga: float
    filt: ReflexiveGamma | None
    probe_response: np.ndarray | None
    net: QNetwork                   # final live network
    best_net: QNetwork | None
    best_trace: ResponseSeries | None
    log: TrainingLog
    manifest: dict


def load_motion(cfg: ExperimentConfig) -> GroundMotion:
    """Load or synthesize the record, resample to the control rate, and fit
    it to exactly steps_per_episode samples (zero-padding or trimming)."""
    if cfg.record_path:
        path = Path(cfg.record_path)
        if not path.exists():
            raise FileNotFoundError(f"record file not found: {path}")
        if path.suffix.lower() == ".at2":
            motion = load_at2(path)
        else:
            motion = load_csv(path)
    else:
        motion = synth(cfg.synth_kind, cfg.synth_duration_s, cfg.dt,
                       cfg.synth_amplitude, seed=cfg.synth_seed,
                       f0=cfg.synth_f0, f1=cfg.synth_f1)
    motion = resample(motion, cfg.dt)
    return pad_or_trim(motion, cfg.steps_per_episode)


def _record_digest(cfg: ExperimentConfig, motion: GroundMotion):
    if cfg.record_path:
        digest = hashlib.sha256(Path(cfg.record_path).read_bytes()).hexdigest()
        return f"sha256:{digest}"
    digest = hashlib.sha256(motion.samples.tobytes()).hexdigest()
    return f"samples-sha256:{digest}"


@dataclass
class _TrainCtx:
    net: QNetwork
    target_net: QNetwork
    buffer: ReplayBuffer
    batch_size: int
    method: str
    filt: ReflexiveGamma | None
    discount: float
    step_size: float
    train_every: int
    rng: np.random.Generator
    window_len: int
    global_step: int = 0
    td_errors: list = field(default_factory=list)


def _rollout(model, motion, delay, delay_applies_to, net, action_space,
             normalization, reward_cfg, epsilon, rng, train_ctx=None):
    """One episode from the quiescent state; returns (trace, rewards).

    The observation at step t is the normalized 6-vector
    [u_t, u_{t-1}, u_{t-2}, v_t, a_t, ag_t]; a_t is the structural
    acceleration carried over from the previous interval.
    """
    samples = motion.samples
    n = len(samples)
    dt = model.dt
    forces = action_space.forces
    delay.reset()

    obs_buf = np.empty((n, 6))
    act_buf = np.empty(n, dtype=int)
    rew_buf = np.empty(n)
    time_arr = np.empty(n)
    disp = np.empty(n)
    vel = np.empty(n)
    acc = np.empty(n)
    frc = np.empty(n)
    gnd = np.empty(n)

    window_len = train_ctx.window_len if train_ctx is not None else 0
    x = np.zeros(2)
    accel = 0.0
    u_prev1 = 0.0
    u_prev2 = 0.0
    for t in range(n):
        ag = samples[t]
        obs = np.array([x[0], u_prev1, u_prev2, x[1], accel, ag]) / normalization
        obs_buf[t] = obs

        if train_ctx is not None:
            if t >= window_len:
                t0 = t - window_len
                train_ctx.buffer.push(ExperienceWindow(
                    state=obs_buf[t0],
                    action_index=int(act_buf[t0]),
                    rewards=rew_buf[t0:t],
                    next_state=obs,
                ))
            if (len(train_ctx.buffer) >= train_ctx.batch_size
                    and train_ctx.global_step % train_ctx.train_every == 0):
                mse = train_minibatch(
                    train_ctx.net, train_ctx.target_net, train_ctx.buffer,
                    train_ctx.batch_size, train_ctx.method, train_ctx.rng,
                    train_ctx.step_size, filt=train_ctx.filt,
                    discount=train_ctx.discount)
                train_ctx.td_errors.append(mse)
            train_ctx.global_step += 1

        a_idx = select_action(net, obs, epsilon, rng)
        act_buf[t] = a_idx
        command = forces[a_idx]
        if delay_applies_to == "force":
            force = delay.push(command)
        else:
            force = command
            ag = delay.push(ag)
        u_prev2 = u_prev1
        u_prev1 = x[0]
        x, accel = step(model, x, force, ag, step_index=t)
        rew_buf[t] = reward_terms(x[0], x[1], accel, force, reward_cfg)
        time_arr[t] = (t + 1) * dt
        disp[t] = x[0]
        vel[t] = x[1]
        acc[t] = accel
        frc[t] = force
        gnd[t] = ag

    if train_ctx is not None:
        # episode end: remaining windows are terminal and bootstrap nothing
        empty_next = np.zeros(6)
        for t0 in range(max(0, n - window_len), n):
            train_ctx.buffer.push(ExperienceWindow(
                state=obs_buf[t0],
                action_index=int(act_buf[t0]),
                rewards=rew_buf[t0:n],
                next_state=empty_next,
                terminal=True,
            ))

    series = ResponseSeries(time=time_arr, displacement=disp, velocity=vel,
                            acceleration=acc, applied_force=frc, ground_accel=gnd)
    return series, rew_buf


def _greedy_metrics(series, peaks):
    run_peaks = series.peaks()
    improvements = tuple(improvement_pct(p, c) for p, c in zip(peaks, run_peaks))
    return run_peaks, improvements


def _build_manifest(cfg, provenance, motion, peaks, pga, filt, wall_clock_s):
    assumed = sorted(k for k, v in (provenance or {}).items() if v == "default (assumed)")
    manifest = {
        "tool": "reflexq",
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "seed": cfg.seed,
        "config": cfg.as_key_values(),
        "provenance": provenance or {key: "library call" for key in CONFIG_SCHEMA},
        "assumed_defaults": assumed,
        "record_digest": _record_digest(cfg, motion),
        "uncontrolled_peaks": {"u_max": peaks[0], "v_max": peaks[1], "a_max": peaks[2], "pga": pga},
        "filter": None if filt is None else {
            "length": len(filt.gammas),
            "bootstrap_gamma": filt.bootstrap_gamma,
            "cutoff_fraction": filt.cutoff_fraction,
            "cutoff_rule": filt.cutoff_rule,
            "override": cfg.filter_override is not None,
        },
        "notes": [
            "minibatch sampling is uniform over the replay buffer; the key-state "
            "selector cited for the benchmark protocol is external prior work and "
            "is not reproduced here",
            "the reported training-rate constant 0.99 is not usable as a "
            "backpropagation step size; train.step_size governs the optimizer",
        ],
        "wall_clock_s": wall_clock_s,
    }
    return manifest


def run(cfg: ExperimentConfig, out_dir=None, provenance=None, motion=None) -> RunResult:
    """Full training run; writes artifacts under out_dir when given.

    An in-memory GroundMotion may be passed to bypass cfg's record source; it
    is resampled to the control rate and fitted to the episode length either
    way.  On a simulation or training failure the partial training log and
    manifest are still flushed to out_dir before the error propagates.
    """
    t_start = time.perf_counter()
    cfg.validate()
    if motion is None:
        motion = load_motion(cfg)
    else:
        motion = pad_or_trim(resample(motion, cfg.dt), cfg.steps_per_episode)
    params = SdofParams(mass=cfg.mass, stiffness=cfg.stiffness, damping=cfg.damping)
    model = discretize(params, cfg.dt)
    delay = DelayLine.from_seconds(cfg.delay_seconds, cfg.dt)

    peaks = uncontrolled_peaks(model, motion, delay=DelayLine(delay.delay_steps),
                               delay_applies_to=cfg.delay_applies_to)
    pga = motion.peak
    reward_cfg = RewardConfig(u_max=peaks[0], v_max=peaks[1], a_max=peaks[2],
                              force_penalty=cfg.force_penalty, force_unit=cfg.force_unit,
                              signed_force_term=cfg.signed_force_term)
    normalization = np.array([peaks[0], peaks[0], peaks[0], peaks[1], peaks[2], pga])

    filt = None
    probe_response = None
    if cfg.method == "enhanced":
        if cfg.filter_override is not None:
            filt = cfg.filter_override
        else:
            filt, probe_response = build_from_probe(
                model, DelayLine(delay.delay_steps),
                probe_force=cfg.effective_probe_force(),
                p=cfg.filter_cutoff_percent, rule=cfg.filter_cutoff_rule)
    window_len = len(filt.gammas) if filt is not None else 1

    action_space = ActionSpace(n_actions=cfg.n_actions, max_force=cfg.max_force)
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    net = init_network([6] + list(cfg.hidden_sizes) + [cfg.n_actions], seed=seeds[0])
    net.normalization = normalization
    rng = np.random.default_rng(seeds[1])
    target_net = sync_target(net)

    ctx = _TrainCtx(net=net, target_net=target_net, buffer=ReplayBuffer(cfg.buffer_capacity),
                    batch_size=cfg.batch_size, method=cfg.method, filt=filt,
                    discount=cfg.discount, step_size=cfg.step_size,
                    train_every=cfg.train_every, rng=rng, window_len=window_len)
    log = TrainingLog(seed=cfg.seed)
    best_net = None
    best_trace = None
    eval_delay = DelayLine(delay.delay_steps)
    eval_rng = np.random.default_rng(0)   # never consumed at epsilon == 0

    def _finish():
        wall = time.perf_counter() - t_start
        manifest = _build_manifest(cfg, provenance, motion, peaks, pga, filt, wall)
        result = RunResult(config=cfg, motion=motion, uncontrolled_peaks=peaks, pga=pga,
                           filt=filt, probe_response=probe_response, net=ctx.net,
                           best_net=best_net, best_trace=best_trace, log=log,
                           manifest=manifest)
        if out_dir is not None:
            write_run_artifacts(result, out_dir)
        return result

    try:
        for episode in range(cfg.episodes):
            eps = epsilon_schedule(episode, cfg.episodes, start=cfg.epsilon_start,
                                   minimum=cfg.epsilon_min,
                                   decay_fraction=cfg.epsilon_decay_fraction)
            ctx.td_errors = []
            _, rewards = _rollout(model, motion, delay, cfg.delay_applies_to, ctx.net,
                                  action_space, normalization, reward_cfg, eps, rng,
                                  train_ctx=ctx)
            log.mean_reward.append(float(np.mean(rewards)))
            log.mean_td_error.append(float(np.mean(ctx.td_errors)) if ctx.td_errors else float("nan"))
            log.epsilon.append(eps)

            if (episode + 1) % cfg.target_sync_episodes == 0:
                ctx.target_net = sync_target(ctx.net)

            if (episode + 1) % cfg.eval_every == 0 or episode == cfg.episodes - 1:
                series, _ = _rollout(model, motion, eval_delay, cfg.delay_applies_to,
                                     ctx.net, action_space, normalization, reward_cfg,
                                     0.0, eval_rng)
                run_peaks, improvements = _greedy_metrics(series, peaks)
                log.evaluations.append(EvalSnapshot(episode=episode, peaks=run_peaks,
                                                    improvements=improvements))
                is_best = (log.best_eval_index is None or
                           improvements[0] > log.evaluations[log.best_eval_index].improvements[0])
                if is_best:
                    log.best_eval_index = len(log.evaluations) - 1
                    best_net = clone(ctx.net)
                    best_trace = series
    except Exception:
        _finish()   # flush the partial log before propagating
        raise
    return _finish()


def evaluate(net, cfg: ExperimentConfig, peaks=None):
    """Greedy rollout of a trained network (or checkpoint path) under cfg.

    Returns (ResponseSeries, metrics) with peak responses and improvement
    percentages relative to the uncontrolled baseline.
    """
    if isinstance(net, (str, Path)):
        net = load_checkpoint(net)
    cfg.validate()
    if net.n_inputs != 6 or net.n_outputs != cfg.n_actions:
        raise InvalidParameterError(
            f"network shape {net.layer_sizes} does not match the configuration "
            f"(6 inputs, {cfg.n_actions} actions)")
    motion = load_motion(cfg)
    params = SdofParams(mass=cfg.mass, stiffness=cfg.stiffness, damping=cfg.damping)
    model = discretize(params, cfg.dt)
    delay = DelayLine.from_seconds(cfg.delay_seconds, cfg.dt)
    if peaks is None:
        peaks = uncontrolled_peaks(model, motion, delay=DelayLine(delay.delay_steps),
                                   delay_applies_to=cfg.delay_applies_to)
    if net.normalization is not None:
        normalization = net.normalization
    else:
        normalization = np.array([peaks[0], peaks[0], peaks[0], peaks[1], peaks[2], motion.peak])
    reward_cfg = RewardConfig(u_max=peaks[0], v_max=peaks[1], a_max=peaks[2],
                              force_penalty=cfg.force_penalty, force_unit=cfg.force_unit,
                              signed_force_term=cfg.signed_force_term)
    action_space = ActionSpace(n_actions=cfg.n_actions, max_force=cfg.max_force)
    series, rewards = _rollout(model, motion, delay, cfg.delay_applies_to, net,
                               action_space, normalization, reward_cfg, 0.0,
                               np.random.default_rng(0))
    run_peaks, improvements = _greedy_metrics(series, peaks)
    metrics = {
        "peak_displacement": run_peaks[0],
        "peak_velocity": run_peaks[1],
        "peak_acceleration": run_peaks[2],
        "uncontrolled_displacement": peaks[0],
        "uncontrolled_velocity": peaks[1],
        "uncontrolled_acceleration": peaks[2],
        "improvement_displacement_pct": improvements[0],
        "improvement_velocity_pct": improvements[1],
        "improvement_acceleration_pct": improvements[2],
        "mean_reward": float(np.mean(rewards)),
    }
    return series, metrics


def write_trace_csv(series: ResponseSeries, path):
    with open(path, "w") as fh:
        fh.write("time,u,v,a,force,ground_accel\n")
        for i in range(len(series)):
            fh.write(f"{float(series.time[i])!r},{float(series.displacement[i])!r},"
                     f"{float(series.velocity[i])!r},{float(series.acceleration[i])!r},"
                     f"{float(series.applied_force[i])!r},{float(series.ground_accel[i])!r}\n")


def _summary_rows(result: RunResult):
    cfg = result.config
    best = result.log.evaluations[result.log.best_eval_index]
    rows = []
    for i, metric in enumerate(METRIC_NAMES):
        rows.append({
            "method": cfg.method,
            "delay_s": cfg.delay_seconds,
            "metric": metric,
            "uncontrolled": result.uncontrolled_peaks[i],
            "controlled": best.peaks[i],
            "improvement_pct": best.improvements[i],
        })
    return rows


def write_summary(rows, csv_path, text_path=None):
    header = ["method", "delay_s", "metric", "uncontrolled", "controlled", "improvement_pct"]
    with open(csv_path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(f"{row['method']},{row['delay_s']!r},{row['metric']},"
                     f"{row['uncontrolled']!r},{row['controlled']!r},"
                     f"{row['improvement_pct']!r}\n")
    if text_path is not None:
        widths = [10, 8, 14, 14, 14, 16]
        with open(text_path, "w") as fh:
            fh.write("".join(h.ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
            for row in rows:
                cells = [row["method"], f"{row['delay_s']:g}", row["metric"],
                         f"{row['uncontrolled']:.6g}", f"{row['controlled']:.6g}",
                         f"{row['improvement_pct']:.2f}%"]
                fh.write("".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip() + "\n")


def write_run_artifacts(result: RunResult, out_dir):
    """Write every artifact of a run; see the package README for the layout."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "manifest.json", "w") as fh:
        json.dump(result.manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")

    log = result.log
    with open(out / "training_log.csv", "w") as fh:
        fh.write("episode,mean_reward,mean_td_error,epsilon\n")
        for i in range(len(log.mean_reward)):
            fh.write(f"{i},{log.mean_reward[i]!r},{log.mean_td_error[i]!r},{log.epsilon[i]!r}\n")

    with open(out / "evaluations.csv", "w") as fh:
        fh.write("episode,peak_displacement,peak_velocity,peak_acceleration,"
                 "improvement_displacement_pct,improvement_velocity_pct,"
                 "improvement_acceleration_pct,best\n")
        for i, snap in enumerate(log.evaluations):
            best = 1 if i == log.best_eval_index else 0
            fh.write(f"{snap.episode},{snap.peaks[0]!r},{snap.peaks[1]!r},{snap.peaks[2]!r},"
                     f"{snap.improvements[0]!r},{snap.improvements[1]!r},"
                     f"{snap.improvements[2]!r},{best}\n")

    if result.filt is not None:
        save_filter_csv(result.filt, out / "filter.csv")
    save_checkpoint(result.net, out / "model.json")
    if result.best_net is not None:
        save_checkpoint(result.best_net, out / "best_model.json")
    if result.best_trace is not None:
        write_trace_csv(result.best_trace, out / "eval_trace.csv")
    if result.log.evaluations:
        write_summary(_summary_rows(result), out / "summary.csv", out / "summary.txt")
