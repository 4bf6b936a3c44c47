"""Acceptance gate: every criterion below prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The comparative
experiment (criteria 6 and 7) trains 2 methods x 2 delays x 5 seeds at desk
scale and dominates the runtime (budgeted under 15 minutes for the delayed
block on a desktop CPU; the whole gate is typically 15-20 minutes).
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner

from oracles import damped_free_decay, global_relative_error, synthetic_decaying_oscillation
from reflexq import ReflexiveGamma, init_network
from reflexq.cli import main as cli_main
from reflexq.config import config_from_attrs
from reflexq.gamma_filter import build
from reflexq.qnet import clone, forward
from reflexq.trainer import improvement_pct, run

# ---------------------------------------------------------------------------
# pinned desk-scale profiles


def comparison_config(method, delay_seconds, seed):
    """Desk-scale comparative experiment: 20 s swept-sine record, 150 episodes."""
    return config_from_attrs(
        method=method, delay_seconds=delay_seconds, seed=seed,
        episodes=150, steps_per_episode=2000, sample_rate_hz=100.0,
        synth_kind="sweep", synth_duration_s=20.0, synth_amplitude=3.0,
        synth_seed=7, synth_f0=0.5, synth_f1=5.0,
        batch_size=50, buffer_capacity=60000, train_every=20, eval_every=5,
        step_size=1e-3, n_actions=11, max_force=10000.0)


def reduction_config(method, **overrides):
    """50-episode miniature run used for the reduction-equivalence check."""
    params = dict(
        method=method, delay_seconds=0.1, episodes=50, steps_per_episode=200,
        synth_kind="sweep", synth_duration_s=2.0, synth_amplitude=3.0,
        synth_seed=7, synth_f0=0.5, synth_f1=5.0,
        batch_size=16, buffer_capacity=2000, step_size=1e-3, n_actions=11,
        train_every=1, eval_every=10, seed=123)
    params.update(overrides)
    return config_from_attrs(**params)


SEEDS = (0, 1, 2, 3, 4)


def emit(criterion, name, ok, detail):
    print(f"\nACCEPTANCE {criterion} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


# ---------------------------------------------------------------------------
# 1. integrator fidelity


def test_criterion_1_integrator_fidelity(frame_model):
    t_start = time.perf_counter()
    n = 1000   # 10 s at 100 Hz
    from reflexq.dynamics import step
    x = np.array([0.01, 0.0])
    u = np.empty(n)
    v = np.empty(n)
    for i in range(n):
        x, _ = step(frame_model, x, 0.0, 0.0)
        u[i] = x[0]
        v[i] = x[1]
    elapsed = time.perf_counter() - t_start
    times = (np.arange(n) + 1) * 0.01
    u_ref, v_ref = damped_free_decay(2000.0, 7.9e6, 2.5e5, 0.01, 0.0, times)
    err = max(global_relative_error(u, u_ref), global_relative_error(v, v_ref))
    ok = err <= 1e-8 and elapsed < 1.0
    emit(1, "integrator-fidelity", ok, f"max rel err {err:.2e}, {elapsed * 1e3:.1f} ms")
    assert err <= 1e-8
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# 2. gradient correctness on the production architecture


def _loss(net, x, action, target):
    return 0.5 * (target - forward(net, x)[action]) ** 2


def test_criterion_2_gradient_correctness():
    h = 1e-5
    floor = 1e-4   # components below this are judged by absolute error <= floor * tol
    rng = np.random.default_rng(2024)
    worst = 0.0
    from reflexq.qnet import train_on_target
    for trial in range(10):
        net = init_network([6, 40, 40, 11], seed=500 + trial)
        x = rng.normal(size=6)
        action = int(rng.integers(11))
        target = float(rng.normal() * 3.0)

        trained = clone(net)
        train_on_target(trained, x, action, target, 1.0)   # unit step recovers gradients
        analytic = [w0 - w1 for w0, w1 in zip(net.weights, trained.weights)]
        analytic += [b0 - b1 for b0, b1 in zip(net.biases, trained.biases)]

        numeric = []
        for arr in list(net.weights) + list(net.biases):
            g = np.zeros_like(arr)
            flat, gflat = arr.ravel(), g.ravel()
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + h
                hi = _loss(net, x, action, target)
                flat[i] = keep - h
                lo = _loss(net, x, action, target)
                flat[i] = keep
                gflat[i] = (hi - lo) / (2.0 * h)
            numeric.append(g)
        for a, g in zip(analytic, numeric):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(g)), floor)
            worst = max(worst, float(np.max(np.abs(a - g) / denom)))
    ok = worst <= 1e-4
    emit(2, "gradient-correctness", ok, f"10 nets [6,40,40,11], max rel err {worst:.2e}")
    assert worst <= 1e-4


# ---------------------------------------------------------------------------
# 3. reduction equivalence


def test_criterion_3_reduction_equivalence():
    t_start = time.perf_counter()
    original = run(reduction_config("original", discount=0.99))
    degenerate = ReflexiveGamma(gammas=np.array([1.0]), bootstrap_gamma=0.99, dt=0.01)
    enhanced = run(reduction_config("enhanced", filter_override=degenerate))
    elapsed = time.perf_counter() - t_start

    def td_equal(a, b):
        return all(x == y or (np.isnan(x) and np.isnan(y)) for x, y in zip(a, b))

    same = (original.log.mean_reward == enhanced.log.mean_reward
            and td_equal(original.log.mean_td_error, enhanced.log.mean_td_error)
            and original.log.epsilon == enhanced.log.epsilon
            and all(a.peaks == b.peaks and a.improvements == b.improvements
                    for a, b in zip(original.log.evaluations, enhanced.log.evaluations))
            and all(np.array_equal(w0, w1)
                    for w0, w1 in zip(original.net.weights, enhanced.net.weights)))
    ok = same and elapsed < 120.0
    emit(3, "reduction-equivalence", ok,
         f"50 episodes, bit-identical={same}, {elapsed:.1f} s")
    assert same
    assert elapsed < 120.0


# ---------------------------------------------------------------------------
# 4. filter properties on randomized responses


def test_criterion_4_filter_properties():
    rng = np.random.default_rng(42)
    failures = []
    for case in range(100):
        response = synthetic_decaying_oscillation(rng)
        filt = build(response, dt=0.01, p=15.0)
        g = filt.gammas
        peak = int(np.argmax(g))
        checks = {
            "range": g.min() >= 0.0 and g.max() <= 1.0,
            "normalized": g.max() == 1.0,
            "unimodal": (np.all(np.diff(g[: peak + 1]) >= 0.0)
                         and np.all(np.diff(g[peak:]) <= 0.0)),
            "cutoff": (np.all(g[peak:] >= 0.85 - 1e-12)
                       and 0.0 <= filt.bootstrap_gamma < 0.85),
            "window": filt.n >= 0 and filt.duration == pytest.approx((filt.n + 1) * 0.01),
        }
        if not all(checks.values()):
            failures.append((case, [k for k, v in checks.items() if not v]))
    ok = not failures
    emit(4, "filter-properties", ok, f"100 randomized responses, failures: {failures or 'none'}")
    assert not failures


# ---------------------------------------------------------------------------
# 5. improvement metric against the published case-study tables
#
# (uncontrolled peak, controlled peak, printed improvement %) per delay
# scenario, method, and response quantity, exactly as printed in the
# benchmark's result tables; displacements in cm, velocities m/s,
# accelerations m/s^2.  Tolerance is +/- 0.5 percentage points.

REFERENCE_ROWS = [
    ("0s", "original", "dis", 4.39, 4.06, 7.1),
    ("0s", "original", "vel", 0.91, 0.83, 8.7),
    ("0s", "original", "acc", 22.97, 16.84, 26.7),
    ("0s", "enhanced", "dis", 4.39, 2.36, 46.1),
    ("0s", "enhanced", "vel", 0.91, 0.54, 41.0),
    ("0s", "enhanced", "acc", 22.97, 14.28, 37.8),
    ("5s", "original", "dis", 4.39, 4.24, 3.4),
    ("5s", "original", "vel", 0.91, 0.85, 6.5),
    ("5s", "original", "acc", 22.93, 20.0, 12.8),
    ("5s", "enhanced", "dis", 4.39, 3.06, 30.2),
    ("5s", "enhanced", "vel", 0.91, 0.62, 32.2),
    ("5s", "enhanced", "acc", 22.93, 16.38, 28.5),
    ("10s", "original", "dis", 4.39, 4.37, 0.41),
    ("10s", "original", "vel", 0.91, 0.89, 1.81),
    ("10s", "original", "acc", 22.93, 22.31, 2.70),
    ("10s", "enhanced", "dis", 4.39, 3.15, 28.2),
    ("10s", "enhanced", "vel", 0.91, 0.66, 26.9),
    ("10s", "enhanced", "acc", 22.93, 17.65, 23.0),
]


@pytest.mark.parametrize(
    "delay,method,metric,uncontrolled,controlled,printed",
    REFERENCE_ROWS,
    ids=[f"{d}-{m}-{q}" for d, m, q, *_ in REFERENCE_ROWS])
def test_criterion_5_metric_reproduction(delay, method, metric, uncontrolled,
                                         controlled, printed):
    computed = improvement_pct(uncontrolled, controlled)
    deviation = abs(computed - printed)
    ok = deviation <= 0.5
    emit(5, f"metric-reproduction[{delay}-{method}-{metric}]", ok,
         f"computed {computed:.2f}% vs printed {printed}%, |diff| {deviation:.3f} pp")
    # Known data artifact: the 10s-enhanced velocity row prints 26.9% while the
    # printed peaks 0.91 -> 0.66 give 27.47%, i.e. 0.57 pp apart; the printed
    # improvement was evidently computed from unrounded peaks.  The criterion
    # is asserted as stated and this one row fails it honestly.
    assert deviation <= 0.5, (
        f"{delay} {method} {metric}: computed {computed:.3f}% vs printed {printed}%")


# ---------------------------------------------------------------------------
# 6 and 7. comparative desk-scale experiment


@pytest.fixture(scope="module")
def comparison_matrix():
    """Best peak-displacement improvement per (method, delay, seed).

    The delay-1s block is the budgeted experiment; the delay-0s block feeds
    the robustness-trend criterion.
    """
    results = {}
    elapsed = {}
    for delay in (1.0, 0.0):
        t_start = time.perf_counter()
        for method in ("original", "enhanced"):
            for seed in SEEDS:
                res = run(comparison_config(method, delay, seed))
                best = res.log.evaluations[res.log.best_eval_index]
                results[(method, delay, seed)] = best.improvements[0]
        elapsed[delay] = time.perf_counter() - t_start
    return results, elapsed


def test_criterion_6_enhanced_beats_original_under_delay(comparison_matrix):
    results, elapsed = comparison_matrix
    enhanced = [results[("enhanced", 1.0, s)] for s in SEEDS]
    original = [results[("original", 1.0, s)] for s in SEEDS]
    wins = sum(e > o for e, o in zip(enhanced, original))
    mean_e, mean_o = np.mean(enhanced), np.mean(original)
    ok = wins >= 4 and mean_e > mean_o and elapsed[1.0] < 900.0
    emit(6, "comparative-experiment", ok,
         f"delay 1 s: enhanced wins {wins}/5 seeds, "
         f"mean {mean_e:.1f}% vs {mean_o:.1f}%, block took {elapsed[1.0]:.0f} s")
    print("  per-seed best displacement improvement (%):")
    for s in SEEDS:
        print(f"    seed {s}: enhanced {results[('enhanced', 1.0, s)]:8.2f}   "
              f"original {results[('original', 1.0, s)]:8.2f}")
    assert wins >= 4
    assert mean_e > mean_o
    assert elapsed[1.0] < 900.0


def test_criterion_7_delay_robustness_trend(comparison_matrix):
    results, _ = comparison_matrix
    floor = 1.0   # pp; keeps the degradation ratio finite for ~0% baselines

    def degradation(method, seed):
        imp0 = results[(method, 0.0, seed)]
        imp1 = results[(method, 1.0, seed)]
        return (imp0 - imp1) / max(abs(imp0), floor)

    wins = sum(degradation("original", s) > degradation("enhanced", s) for s in SEEDS)
    mean_imp = {(m, d): float(np.mean([results[(m, d, s)] for s in SEEDS]))
                for m in ("original", "enhanced") for d in (0.0, 1.0)}
    ok = wins >= 4
    emit(7, "delay-robustness-trend", ok,
         f"original degrades more in {wins}/5 seeds; mean improvements "
         f"original {mean_imp[('original', 0.0)]:.1f}% -> {mean_imp[('original', 1.0)]:.1f}%, "
         f"enhanced {mean_imp[('enhanced', 0.0)]:.1f}% -> {mean_imp[('enhanced', 1.0)]:.1f}%")
    assert wins >= 4


# ---------------------------------------------------------------------------
# 8. determinism of the command-line entry point


def test_criterion_8_cli_determinism(tmp_path):
    cfg = tmp_path / "desk.cfg"
    cfg.write_text(
        "sim.steps_per_episode = 200\n"
        "record.synth.kind = sweep\n"
        "record.synth.duration_s = 2.0\n"
        "record.synth.amplitude = 3.0\n"
        "record.synth.f1 = 5.0\n"
        "train.episodes = 4\n"
        "train.batch_size = 16\n"
        "train.buffer_capacity = 2000\n"
        "train.eval_every = 2\n"
        "action.count = 11\n"
        "delay.seconds = 0.1\n")
    runner = CliRunner()
    args = ["train", "--config", str(cfg), "--method", "enhanced", "--seed", "21"]
    for name in ("r1", "r2"):
        result = runner.invoke(cli_main, args + ["--out", str(tmp_path / name)])
        assert result.exit_code == 0, result.output
    compared = []
    identical = True
    for path in sorted((tmp_path / "r1").iterdir()):
        if path.name == "manifest.json":   # timestamps and wall clock live here
            continue
        same = path.read_bytes() == (tmp_path / "r2" / path.name).read_bytes()
        identical = identical and same
        compared.append(path.name)
    ok = identical and len(compared) >= 8
    emit(8, "cli-determinism", ok, f"{len(compared)} artifacts byte-compared: {compared}")
    assert identical
    assert len(compared) >= 8
