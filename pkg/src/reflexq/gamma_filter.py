"""Reward response filter built from a single-action probe of the environment.

The agent fires one force pulse into the quiescent structure, records the
absolute displacement response, and turns its peak envelope into a finite
sequence of per-step discount weights (a "reflexive gamma" filter): the
weights rise to 1 where the action's effect on the structure is largest and
are truncated once the envelope has decayed past a cutoff.  The value at the
cutoff step becomes the bootstrap discount applied to max Q(s', .).

The multi-step learning target is then

    TQ = sum_j gammas[j] * r_j  +  bootstrap_gamma * max_a Q(s', a)

which reduces exactly to the standard one-step Q target when the filter is
``[1]`` with a conventional bootstrap discount.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import DelayLine, step
from .errors import FilterBuildError, InvalidParameterError, ProbeFailedError
from .validation import check_positive

__all__ = [
    "ReflexiveGamma",
    "probe",
    "build",
    "build_from_probe",
    "enhanced_target",
    "save_filter_csv",
    "load_filter_csv",
]

HARD_HORIZON_PERIODS = 1000   # probe gives up after this many natural periods


@dataclass(frozen=True)
class ReflexiveGamma:
    """Finite per-step discount weights plus the bootstrap discount.

    Invariants enforced here: weights lie in [0, 1] with max exactly 1, the
    sequence rises to a single (first) peak and never rises again after it,
    and the bootstrap discount lies in [0, 1].
    """

    gammas: np.ndarray
    bootstrap_gamma: float
    dt: float
    probe_force: float | None = None   # N, None when built directly from numbers
    cutoff_fraction: float = 15.0      # percent
    cutoff_rule: str = "by"            # "by": drop by p% of peak; "to": drop to p% of peak

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        if g.ndim != 1 or len(g) < 1:
            raise InvalidParameterError("gammas must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(g)):
            raise InvalidParameterError("gammas contain non-finite values")
        if g.min() < 0.0 or g.max() > 1.0:
            raise InvalidParameterError("gammas must lie in [0, 1]")
        if g.max() != 1.0:
            raise InvalidParameterError("gammas must be normalized so the peak weight is 1")
        peak = int(np.argmax(g))
        if np.any(np.diff(g[: peak + 1]) < 0.0) or np.any(np.diff(g[peak:]) > 0.0):
            raise InvalidParameterError("gammas must be non-decreasing up to the peak and non-increasing after it")
        if not (0.0 <= self.bootstrap_gamma <= 1.0):
            raise InvalidParameterError(f"bootstrap_gamma must lie in [0, 1], got {self.bootstrap_gamma}")
        object.__setattr__(self, "dt", check_positive("dt", self.dt))
        if self.cutoff_rule not in ("by", "to"):
            raise InvalidParameterError(f"cutoff_rule must be 'by' or 'to', got {self.cutoff_rule!r}")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "bootstrap_gamma", float(self.bootstrap_gamma))

    @property
    def n(self):
        """Index of the last retained weight; the filter holds n+1 weights."""
        return len(self.gammas) - 1

    @property
    def duration(self):
        """Time span covered by the retained weights, s."""
        return len(self.gammas) * self.dt


def _cutoff_threshold(p, rule):
    if not (0.0 < p < 100.0):
        raise InvalidParameterError(f"cutoff percentage must be in (0, 100), got {p}")
    return 1.0 - p / 100.0 if rule == "by" else p / 100.0


def probe(model, delay=None, probe_force=1.0, horizon=None, cutoff_fraction=15.0,
          cutoff_rule="by"):
    """Absolute displacement response to a single one-step force pulse.

    The pulse passes through the delay line, so the returned series already
    reflects the action-effect delay.  With ``horizon`` set, exactly
    ``round(horizon/dt)`` steps are simulated.  Otherwise the horizon extends
    automatically until the response has decayed past the filter cutoff and at
    least four natural periods beyond its peak, giving up (ProbeFailedError)
    after ``HARD_HORIZON_PERIODS`` natural periods.
    """
    if probe_force == 0.0 or not np.isfinite(probe_force):
        raise InvalidParameterError("probe_force must be a finite non-zero force")
    if delay is None:
        delay = DelayLine(0)
    delay.reset()
    threshold = _cutoff_threshold(cutoff_fraction, cutoff_rule)

    dt = model.dt
    period = model.params.period
    hard_cap = int(round(HARD_HORIZON_PERIODS * period / dt))

    if horizon is not None:
        check_positive("horizon", horizon)
        n_steps = int(round(horizon / dt))
    else:
        n_steps = None

    # chunk long enough to straddle one damped half-cycle, so a chunk whose
    # maximum sits below the cutoff proves the envelope has decayed past it
    zeta = model.params.damping_ratio
    if zeta < 1.0:
        damped_period = period / np.sqrt(1.0 - zeta * zeta)
        chunk_time = max(4.0 * period, 1.5 * damped_period)
    else:
        chunk_time = max(4.0 * period, 6.0 * period / max(zeta, 1.0))
    chunk = max(8, int(round(chunk_time / dt)))

    values = [0.0]
    x = np.zeros(2)
    t = 0
    peak = 0.0
    peak_step = 0
    while True:
        limit = n_steps if n_steps is not None else min(t + chunk, hard_cap)
        chunk_max = 0.0
        while t < limit:
            command = probe_force if t == 0 else 0.0
            force = delay.push(command)
            x, _ = step(model, x, force, 0.0, step_index=t)
            t += 1
            mag = abs(x[0])
            values.append(mag)
            chunk_max = max(chunk_max, mag)
            if mag > peak:
                peak = mag
                peak_step = t
        if n_steps is not None:
            break
        decayed = peak > 0.0 and chunk_max < threshold * peak
        settled = t >= peak_step + int(round(4.0 * period / dt))
        if decayed and settled:
            break
        if t >= hard_cap:
            raise ProbeFailedError(
                f"probe response did not decay past the cutoff within {HARD_HORIZON_PERIODS} periods"
            )
    return np.array(values)


def build(response, dt, p=15.0, rule="by", probe_force=None) -> ReflexiveGamma:
    """Turn a rectified response series into a ReflexiveGamma filter.

    Steps: locate the local maxima of the series (the run of leading zeros
    counts as a single zero anchor), linearly interpolate the peak envelope at
    every control step (samples after the last detected peak stand as their
    own envelope), normalize the envelope to a unit peak, and truncate at the
    first step after the global peak where the envelope falls below the
    cutoff.  The envelope value at the cutoff step becomes the bootstrap
    discount.
    """
    r = np.asarray(response, dtype=float)
    if r.ndim != 1 or len(r) < 2:
        raise FilterBuildError("response must be a 1-d series with at least two samples")
    if not np.all(np.isfinite(r)):
        raise FilterBuildError("response contains non-finite values")
    if np.any(r < 0.0):
        raise FilterBuildError("response must be rectified (non-negative)")
    nonzero = np.nonzero(r > 0.0)[0]
    if len(nonzero) == 0:
        raise FilterBuildError("response is identically zero")
    threshold = _cutoff_threshold(p, rule)

    first_nz = int(nonzero[0])
    n = len(r)
    # anchor at the end of the leading-zero run keeps the zeros exact
    anchor_x = first_nz - 1 if first_nz > 0 else 0
    anchor_y = 0.0 if first_nz > 0 else r[0]
    maxima = [
        i
        for i in range(max(1, anchor_x + 1), n - 1)
        if r[i] > 0.0 and r[i] >= r[i - 1] and r[i] >= r[i + 1]
    ]
    env = np.zeros(n)
    last = maxima[-1] if maxima else anchor_x
    xs = [anchor_x] + maxima
    ys = [anchor_y] + [r[i] for i in maxima]
    env[anchor_x: last + 1] = np.interp(np.arange(anchor_x, last + 1), xs, ys)
    env[last + 1:] = r[last + 1:]   # decaying tail is its own envelope

    env = env / env.max()
    peak_idx = int(np.argmax(env))
    below = np.nonzero(env[peak_idx + 1:] < threshold)[0]
    if len(below) == 0:
        raise FilterBuildError(
            "response never decayed past the cutoff; extend the probe horizon"
        )
    cutoff = peak_idx + 1 + int(below[0])
    return ReflexiveGamma(
        gammas=env[:cutoff],
        bootstrap_gamma=float(env[cutoff]),
        dt=dt,
        probe_force=probe_force,
        cutoff_fraction=p,
        cutoff_rule=rule,
    )


def build_from_probe(model, delay=None, probe_force=1.0, p=15.0, rule="by",
                     horizon=None):
    """Probe the environment and build the filter; returns (filter, response)."""
    response = probe(model, delay=delay, probe_force=probe_force, horizon=horizon,
                     cutoff_fraction=p, cutoff_rule=rule)
    filt = build(response, dt=model.dt, p=p, rule=rule, probe_force=probe_force)
    return filt, response


def enhanced_target(filt: ReflexiveGamma, rewards, max_next_q):
    """Weighted multi-step target: sum_j gammas[j]*r_j + bootstrap * max Q(s')."""
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or len(r) != len(filt.gammas):
        raise InvalidParameterError(
            f"expected {len(filt.gammas)} rewards for this filter, got {r.shape}"
        )
    return float(np.dot(filt.gammas, r)) + filt.bootstrap_gamma * float(max_next_q)


def save_filter_csv(filt: ReflexiveGamma, path):
    """Write the filter as (step_index, gamma) rows, final row tagged bootstrap."""
    with open(path, "w") as fh:
        fh.write("# reward response filter\n")
        fh.write(f"# dt = {filt.dt!r}\n")
        fh.write(f"# probe_force = {filt.probe_force!r}\n")
        fh.write(f"# cutoff_fraction = {filt.cutoff_fraction!r}\n")
        fh.write(f"# cutoff_rule = {filt.cutoff_rule}\n")
        fh.write("# columns: step_index, gamma\n")
        for i, g in enumerate(filt.gammas):
            fh.write(f"{i},{float(g)!r}\n")
        fh.write(f"bootstrap,{filt.bootstrap_gamma!r}\n")


def load_filter_csv(path) -> ReflexiveGamma:
    meta = {}
    gammas = []
    bootstrap = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, _, value = line.lstrip("# ").partition("=")
                    meta[key.strip()] = value.strip()
                continue
            tag, _, value = line.partition(",")
            if tag == "bootstrap":
                bootstrap = float(value)
            else:
                if int(tag) != len(gammas):
                    raise FilterBuildError(f"{path}: step indices out of order at {line!r}")
                gammas.append(float(value))
    if bootstrap is None or not gammas:
        raise FilterBuildError(f"{path}: missing weights or bootstrap row")
    if "dt" not in meta:
        raise FilterBuildError(f"{path}: missing '# dt = ...' header")
    probe_force = meta.get("probe_force")
    return ReflexiveGamma(
        gammas=np.array(gammas),
        bootstrap_gamma=bootstrap,
        dt=float(meta["dt"]),
        probe_force=None if probe_force in (None, "None") else float(probe_force),
        cutoff_fraction=float(meta.get("cutoff_fraction", 15.0)),
        cutoff_rule=meta.get("cutoff_rule", "by"),
    )
