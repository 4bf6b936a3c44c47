"""Action selection, experience replay, and Q-target computation.

Both learning methods share the same rollout machinery.  An experience
window spans the n+1 steps covered by the reward response filter (n = 0 for
the plain one-step method); windows cut short by the episode end carry a
shortened reward list and a terminal flag, and bootstrap nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .gamma_filter import ReflexiveGamma, enhanced_target
from .qnet import QNetwork, clone, forward, train_on_target

__all__ = [
    "ActionSpace",
    "ExperienceWindow",
    "ReplayBuffer",
    "select_action",
    "epsilon_schedule",
    "standard_target",
    "enhanced_target_for_window",
    "train_minibatch",
    "sync_target",
]


@dataclass(frozen=True)
class ActionSpace:
    """Symmetric uniform force grid including zero."""

    n_actions: int = 11
    max_force: float = 10000.0   # N
    forces: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_actions < 1 or self.n_actions % 2 == 0:
            raise InvalidParameterError(
                f"n_actions must be odd so the grid includes zero, got {self.n_actions}"
            )
        if self.max_force <= 0:
            raise InvalidParameterError("max_force must be positive")
        half = self.n_actions // 2
        if half == 0:
            grid = np.array([0.0])
        else:
            # integer offsets keep the grid exactly symmetric about zero
            grid = (np.arange(self.n_actions) - half) * (self.max_force / half)
        object.__setattr__(self, "forces", grid)


@dataclass
class ExperienceWindow:
    state: np.ndarray        # normalized observation at t0
    action_index: int
    rewards: np.ndarray      # r_0 .. r_k; k == n unless terminal
    next_state: np.ndarray   # normalized observation at t0 + n + 1 steps
    terminal: bool = False


class ReplayBuffer:
    """Ring buffer with uniform minibatch sampling (without replacement)."""

    def __init__(self, capacity=60000):
        if capacity < 1:
            raise InvalidParameterError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._storage = []
        self._next = 0

    def push(self, window: ExperienceWindow):
        if len(self._storage) < self.capacity:
            self._storage.append(window)
        else:
            self._storage[self._next] = window
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size, rng):
        if batch_size > len(self._storage):
            raise InvalidParameterError(
                f"cannot sample {batch_size} from buffer of size {len(self._storage)}"
            )
        idx = rng.choice(len(self._storage), size=batch_size, replace=False)
        return [self._storage[i] for i in idx]

    def __len__(self):
        return len(self._storage)

    def __iter__(self):
        return iter(self._storage)


def select_action(net, state, epsilon, rng):
    """Epsilon-greedy action; greedy ties break to the lowest index.

    With epsilon == 0 no random numbers are drawn, so greedy evaluation does
    not disturb a training RNG stream.
    """
    if not (0.0 <= epsilon <= 1.0):
        raise InvalidParameterError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(net.n_outputs))
    return int(np.argmax(forward(net, state)))


def epsilon_schedule(episode, total_episodes, start=1.0, minimum=0.1, decay_fraction=0.8):
    """Linear decay from `start` to `minimum` over the first `decay_fraction`
    of training, constant afterwards."""
    if total_episodes < 1:
        return minimum
    if episode < 0:
        raise InvalidParameterError("episode must be non-negative")
    span = decay_fraction * total_episodes
    if span <= 0 or episode >= span:
        return minimum
    return start + (minimum - start) * (episode / span)


def standard_target(target_net, window: ExperienceWindow, discount):
    """One-step Q target: r + discount * max_a Q(s', a); no bootstrap when terminal."""
    if len(window.rewards) != 1:
        raise InvalidParameterError(
            f"one-step target needs exactly one reward, window has {len(window.rewards)}"
        )
    r = float(window.rewards[0])
    if window.terminal:
        return r
    return r + discount * float(np.max(forward(target_net, window.next_state)))


def enhanced_target_for_window(target_net, window: ExperienceWindow, filt: ReflexiveGamma):
    """Filter-weighted target; truncated terminal windows drop the bootstrap."""
    k = len(window.rewards)
    if window.terminal:
        if k > len(filt.gammas):
            raise InvalidParameterError("terminal window longer than the filter")
        return float(np.dot(filt.gammas[:k], window.rewards))
    max_q = float(np.max(forward(target_net, window.next_state)))
    return enhanced_target(filt, window.rewards, max_q)


def train_minibatch(net, target_net, buffer, batch_size, method, rng, step_size,
                    filt=None, discount=None):
    """Sample a uniform minibatch and take one SGD step per example, in order.

    Returns the mean squared temporal-difference error measured before each
    example's update.
    """
    if method == "original":
        if discount is None:
            raise InvalidParameterError("original method needs a discount")
    elif method == "enhanced":
        if filt is None:
            raise InvalidParameterError("enhanced method needs a filter")
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    batch = buffer.sample(batch_size, rng)
    total = 0.0
    for window in batch:
        if method == "original":
            target = standard_target(target_net, window, discount)
        else:
            target = enhanced_target_for_window(target_net, window, filt)
        td = train_on_target(net, window.state, window.action_index, target, step_size)
        total += td * td
    return total / len(batch)


def sync_target(net) -> QNetwork:
    """Fresh frozen copy of the live network."""
    return clone(net)
