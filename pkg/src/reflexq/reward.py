"""Multi-objective step reward for the vibration-control task.

The reward sums three response terms, each normalized by the corresponding
peak of the *uncontrolled* response, and an actuator-force penalty:

    R = (1 - |u|/u_max) + (1 - |v|/v_max) + (1 - |a|/a_max) - penalty * |f| / force_unit

With the frame at rest and no force the reward is 3; at the uncontrolled
peaks each response term reaches 0.  Responses beyond the uncontrolled peaks
go negative (no clamping).
"""

from __future__ import annotations

from dataclasses import dataclass

from .dynamics import simulate
from .errors import DegeneratePeaksError
from .validation import check_non_negative, check_positive

__all__ = ["RewardConfig", "reward", "reward_terms", "uncontrolled_peaks"]


@dataclass(frozen=True)
class RewardConfig:
    u_max: float                  # m, peak uncontrolled displacement
    v_max: float                  # m/s
    a_max: float                  # m/s^2
    force_penalty: float = 0.005  # per force_unit of actuator force
    force_unit: float = 1000.0    # N
    signed_force_term: bool = False  # use the raw signed force instead of |f|

    def __post_init__(self):
        check_positive("u_max", self.u_max)
        check_positive("v_max", self.v_max)
        check_positive("a_max", self.a_max)
        check_non_negative("force_penalty", self.force_penalty)
        check_positive("force_unit", self.force_unit)


def reward_terms(displacement, velocity, acceleration, force, cfg: RewardConfig):
    """Scalar reward from raw response values; hot-path variant of reward()."""
    r = (
        (1.0 - abs(displacement) / cfg.u_max)
        + (1.0 - abs(velocity) / cfg.v_max)
        + (1.0 - abs(acceleration) / cfg.a_max)
    )
    if cfg.signed_force_term:
        return r + cfg.force_penalty * (force / cfg.force_unit)
    return r - cfg.force_penalty * (abs(force) / cfg.force_unit)


def reward(sample, cfg: RewardConfig):
    """Reward of one ResponseSample."""
    return reward_terms(sample.displacement, sample.velocity, sample.acceleration,
                        sample.applied_force, cfg)


def uncontrolled_peaks(model, motion, delay=None, delay_applies_to="force"):
    """Peak |u|, |v|, |a| of the null-controller response.

    Raises DegeneratePeaksError if every peak is zero (e.g. a zero record),
    because the response terms would divide by zero.
    """
    series = simulate(model, motion, delay=delay, delay_applies_to=delay_applies_to)
    u_max, v_max, a_max = series.peaks()
    if u_max == 0.0 and v_max == 0.0 and a_max == 0.0:
        raise DegeneratePeaksError("uncontrolled response is identically zero")
    return u_max, v_max, a_max
