"""Discrete-time simulation of a single-story shear frame under ground excitation.

The structure is the classic damped single-degree-of-freedom oscillator

    m*u'' + c*u' + k*u = -m*ag + f

driven by ground acceleration ``ag`` and an actuator force ``f``.  The
continuous system is discretized exactly (zero-order hold), so stepping with
piecewise-constant inputs reproduces the analytic solution up to floating
point roundoff.  The actuator force optionally passes through a constant
dead-time delay line before it reaches the structure.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, SimulationDivergedError
from .validation import check_non_negative, check_positive

__all__ = [
    "SdofParams",
    "DiscreteModel",
    "DelayLine",
    "ResponseSample",
    "ResponseSeries",
    "discretize",
    "step",
    "simulate",
    "null_controller",
]


@dataclass(frozen=True)
class SdofParams:
    """Lumped parameters of the single-story frame."""

    mass: float = 2000.0        # kg
    stiffness: float = 7.9e6    # N/m
    damping: float = 2.5e5      # N*s/m

    def __post_init__(self):
        object.__setattr__(self, "mass", check_positive("mass", self.mass))
        object.__setattr__(self, "stiffness", check_positive("stiffness", self.stiffness))
        object.__setattr__(self, "damping", check_non_negative("damping", self.damping))

    @property
    def natural_frequency(self):
        """Undamped circular frequency, rad/s."""
        return math.sqrt(self.stiffness / self.mass)

    @property
    def period(self):
        """Undamped natural period, s."""
        return 2.0 * math.pi / self.natural_frequency

    @property
    def damping_ratio(self):
        return self.damping / (2.0 * math.sqrt(self.stiffness * self.mass))


@dataclass(frozen=True)
class DiscreteModel:
    """Exact zero-order-hold discretization of the frame.

    State is ``x = [u, u']``; the held input vector is ``v = [ag, f]``.
    One step advances ``x' = a_d @ x + b_d @ v``.
    """

    params: SdofParams
    dt: float                       # s
    a: np.ndarray = field(repr=False)       # continuous transition, 2x2
    b: np.ndarray = field(repr=False)       # continuous input map, 2x2
    c_m: np.ndarray = field(repr=False)     # measurement matrix, 2x2 identity
    a_d: np.ndarray = field(repr=False)     # discrete transition, 2x2
    b_d: np.ndarray = field(repr=False)     # discrete input map, 2x2


def _expm_2x2_companion(a_mat, dt):
    """Closed-form matrix exponential of dt*[[0, 1], [p, q]].

    Uses the eigenstructure of the companion matrix directly instead of a
    generic scaling-and-squaring routine; exact for all damping regimes.
    """
    p = a_mat[1, 0]
    q = a_mat[1, 1]
    half = 0.5 * q
    disc = q * q + 4.0 * p
    eye = np.eye(2)
    scale = math.exp(half * dt)
    if disc < 0.0:
        # complex pair: exp = e^(half*t) * (cos(w t) I + sin(w t)/w (A - half I))
        w = 0.5 * math.sqrt(-disc)
        return scale * (math.cos(w * dt) * eye + (math.sin(w * dt) / w) * (a_mat - half * eye))
    if disc > 0.0:
        # distinct real eigenvalues
        w = 0.5 * math.sqrt(disc)
        lam1 = half + w
        lam2 = half - w
        e1 = math.exp(lam1 * dt)
        e2 = math.exp(lam2 * dt)
        return (e1 * (a_mat - lam2 * eye) - e2 * (a_mat - lam1 * eye)) / (lam1 - lam2)
    # repeated eigenvalue (critical damping)
    return scale * (eye + dt * (a_mat - half * eye))


def discretize(params: SdofParams, dt: float) -> DiscreteModel:
    """Build the exact discrete-time model for a control/sensor interval dt."""
    dt = check_positive("dt", dt)
    m = params.mass
    a = np.array([[0.0, 1.0],
                  [-params.stiffness / m, -params.damping / m]])
    b = np.array([[0.0, 0.0],
                  [-1.0, 1.0 / m]])
    c_m = np.eye(2)
    if params.stiffness <= 0.0:
        raise InvalidParameterError("stiffness must be positive; A would be singular")
    a_d = _expm_2x2_companion(a, dt)
    # b_d = A^-1 (A_d - I) B; A = [[0,1],[p,q]] inverts in closed form
    p = a[1, 0]
    q = a[1, 1]
    a_inv = np.array([[-q / p, 1.0 / p],
                      [1.0, 0.0]])
    b_d = a_inv @ (a_d - np.eye(2)) @ b
    return DiscreteModel(params=params, dt=dt, a=a, b=b, c_m=c_m, a_d=a_d, b_d=b_d)


def step(model, state, force, ground_accel, step_index=None):
    """Advance one interval with held inputs.

    Returns ``(next_state, acceleration)`` where the acceleration is the
    algebraic value ``(-m*ag + f - c*u' - k*u) / m`` evaluated at the new
    state with the inputs held over the interval.
    """
    x = np.asarray(state, dtype=float)
    nxt = model.a_d @ x + model.b_d @ np.array([ground_accel, force])
    if not (np.isfinite(nxt[0]) and np.isfinite(nxt[1])):
        raise SimulationDivergedError("state became non-finite", step_index=step_index)
    p = model.params
    accel = (-p.mass * ground_accel + force - p.damping * nxt[1] - p.stiffness * nxt[0]) / p.mass
    return nxt, accel


class DelayLine:
    """Constant dead time on the actuator path, in whole control steps.

    The buffer starts filled with zeros, so the output is zero until the
    first command has aged ``delay_steps`` intervals.
    """

    def __init__(self, delay_steps: int):
        if delay_steps < 0 or int(delay_steps) != delay_steps:
            raise InvalidParameterError(f"delay_steps must be a non-negative integer, got {delay_steps!r}")
        self.delay_steps = int(delay_steps)
        self._buffer = deque([0.0] * self.delay_steps)

    @classmethod
    def from_seconds(cls, delay_seconds: float, dt: float):
        check_non_negative("delay_seconds", delay_seconds)
        check_positive("dt", dt)
        steps = int(round(delay_seconds / dt))
        if abs(delay_seconds - steps * dt) > 1e-9 * max(dt, delay_seconds):
            warnings.warn(
                f"delay of {delay_seconds} s rounded to {steps} steps ({steps * dt} s) at dt={dt} s",
                stacklevel=2,
            )
        return cls(steps)

    def push(self, value: float) -> float:
        """Enqueue the newest command, return the one that is now due."""
        if self.delay_steps == 0:
            return value
        self._buffer.append(value)
        return self._buffer.popleft()

    def reset(self):
        self._buffer = deque([0.0] * self.delay_steps)

    def __len__(self):
        return self.delay_steps


@dataclass(frozen=True)
class ResponseSample:
    time: float             # s
    displacement: float     # m
    velocity: float         # m/s
    acceleration: float     # m/s^2
    applied_force: float    # N, after the delay line
    ground_accel: float     # m/s^2, as applied to the frame


@dataclass
class ResponseSeries:
    """Column-wise trace of a simulation; row i is the state after input i."""

    time: np.ndarray
    displacement: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    applied_force: np.ndarray
    ground_accel: np.ndarray

    def __len__(self):
        return len(self.time)

    def __getitem__(self, i) -> ResponseSample:
        return ResponseSample(
            time=float(self.time[i]),
            displacement=float(self.displacement[i]),
            velocity=float(self.velocity[i]),
            acceleration=float(self.acceleration[i]),
            applied_force=float(self.applied_force[i]),
            ground_accel=float(self.ground_accel[i]),
        )

    def peaks(self):
        """Max absolute displacement, velocity, acceleration over the trace."""
        return (
            float(np.max(np.abs(self.displacement))),
            float(np.max(np.abs(self.velocity))),
            float(np.max(np.abs(self.acceleration))),
        )


def null_controller(step_index, state, accel, ground_accel):
    return 0.0


def simulate(model, motion, controller=null_controller, delay=None,
             delay_applies_to="force") -> ResponseSeries:
    """Run the closed loop over a ground-motion record.

    The controller is called once per sample with
    ``(step_index, state, accel, ground_accel)`` where ``accel`` is the
    structural acceleration carried over from the previous interval.  Its
    force command passes through the delay line before reaching the frame;
    with ``delay_applies_to="ground"`` the excitation is delayed instead and
    the force acts immediately.  The delay line is reset before use.
    """
    if abs(motion.dt - model.dt) > 1e-12 * max(model.dt, motion.dt):
        raise InvalidParameterError(
            f"motion dt {motion.dt} does not match model dt {model.dt}; resample first"
        )
    if delay_applies_to not in ("force", "ground"):
        raise InvalidParameterError(f"delay_applies_to must be 'force' or 'ground', got {delay_applies_to!r}")
    if delay is None:
        delay = DelayLine(0)
    delay.reset()

    samples = motion.samples
    n = len(samples)
    time = np.empty(n)
    disp = np.empty(n)
    vel = np.empty(n)
    acc = np.empty(n)
    frc = np.empty(n)
    gnd = np.empty(n)

    x = np.zeros(2)
    accel = 0.0
    for i in range(n):
        command = controller(i, x, accel, samples[i])
        if delay_applies_to == "force":
            force = delay.push(command)
            ag = samples[i]
        else:
            force = command
            ag = delay.push(samples[i])
        x, accel = step(model, x, force, ag, step_index=i)
        time[i] = (i + 1) * model.dt
        disp[i] = x[0]
        vel[i] = x[1]
        acc[i] = accel
        frc[i] = force
        gnd[i] = ag
    return ResponseSeries(time=time, displacement=disp, velocity=vel,
                          acceleration=acc, applied_force=frc, ground_accel=gnd)
