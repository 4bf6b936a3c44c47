"""Scikit-learn style front end for the controller.

``fit`` trains on a ground-motion record; ``predict`` maps raw-SI
observation vectors to actuator forces with the greedy policy.  Parameters
follow the sklearn convention (stored verbatim in ``__init__``, introspected
by ``get_params``/``set_params``), so the controller composes with the wider
ecosystem, e.g. ``sklearn.base.clone`` or joblib-driven sweeps.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .agent import ActionSpace
from .config import config_from_attrs
from .errors import InvalidParameterError
from .excitation import GroundMotion
from .qnet import forward
from .trainer import run
from .validation import check_state_matrix

__all__ = ["SeismicQController"]

N_STATE = 6   # [u_t, u_{t-1}, u_{t-2}, v_t, a_t, ag_t]


class SeismicQController(BaseEstimator):
    """Q-learning force controller for a delayed single-story structure.

    Parameters mirror the experiment configuration; see the package README
    for provenance of the defaults.  After ``fit``:

    Attributes
    ----------
    net_ : trained Q-network (best greedy-evaluation snapshot)
    filter_ : the frozen reward response filter (enhanced method only)
    result_ : the full RunResult with training log and artifacts
    """

    def __init__(self, method="enhanced", delay_seconds=0.0, episodes=50,
                 steps_per_episode=2000, sample_rate_hz=100.0,
                 mass=2000.0, stiffness=7.9e6, damping=2.5e5,
                 n_actions=11, max_force=10000.0, hidden_sizes=(40, 40),
                 step_size=1e-3, batch_size=50, buffer_capacity=60000,
                 train_every=1, eval_every=10, target_sync_episodes=50,
                 discount=0.99, filter_cutoff_percent=15.0, filter_cutoff_rule="by",
                 delay_applies_to="force", seed=0):
        self.method = method
        self.delay_seconds = delay_seconds
        self.episodes = episodes
        self.steps_per_episode = steps_per_episode
        self.sample_rate_hz = sample_rate_hz
        self.mass = mass
        self.stiffness = stiffness
        self.damping = damping
        self.n_actions = n_actions
        self.max_force = max_force
        self.hidden_sizes = hidden_sizes
        self.step_size = step_size
        self.batch_size = batch_size
        self.buffer_capacity = buffer_capacity
        self.train_every = train_every
        self.eval_every = eval_every
        self.target_sync_episodes = target_sync_episodes
        self.discount = discount
        self.filter_cutoff_percent = filter_cutoff_percent
        self.filter_cutoff_rule = filter_cutoff_rule
        self.delay_applies_to = delay_applies_to
        self.seed = seed

    def _config(self, motion):
        cfg = config_from_attrs(
            method=self.method,
            delay_seconds=self.delay_seconds,
            episodes=self.episodes,
            steps_per_episode=self.steps_per_episode,
            sample_rate_hz=self.sample_rate_hz,
            mass=self.mass,
            stiffness=self.stiffness,
            damping=self.damping,
            n_actions=self.n_actions,
            max_force=self.max_force,
            hidden_sizes=list(self.hidden_sizes),
            step_size=self.step_size,
            batch_size=self.batch_size,
            buffer_capacity=self.buffer_capacity,
            train_every=self.train_every,
            eval_every=self.eval_every,
            target_sync_episodes=self.target_sync_episodes,
            discount=self.discount,
            filter_cutoff_percent=self.filter_cutoff_percent,
            filter_cutoff_rule=self.filter_cutoff_rule,
            delay_applies_to=self.delay_applies_to,
            seed=self.seed,
        )
        return cfg

    def fit(self, X, y=None):
        """Train on a ground-motion record.

        X may be a GroundMotion or a 1-d acceleration array sampled at
        ``sample_rate_hz`` (m/s^2).  y is ignored (present for API
        compatibility).
        """
        if isinstance(X, GroundMotion):
            motion = X
        else:
            arr = np.asarray(X, dtype=float).ravel()
            motion = GroundMotion(dt=1.0 / self.sample_rate_hz, samples=arr,
                                  name="fit-array", source="synthetic")
        cfg = self._config(motion)
        result = run(cfg, motion=motion)
        self.result_ = result
        self.net_ = result.best_net if result.best_net is not None else result.net
        self.filter_ = result.filt
        self.action_space_ = ActionSpace(n_actions=self.n_actions, max_force=self.max_force)
        self.uncontrolled_peaks_ = result.uncontrolled_peaks
        if result.log.best_eval_index is not None:
            best = result.log.evaluations[result.log.best_eval_index]
            self.improvements_ = dict(zip(("displacement", "velocity", "acceleration"),
                                          best.improvements))
        else:
            self.improvements_ = {}
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise InvalidParameterError("controller is not fitted; call fit() first")

    def q_values(self, X):
        """Q-values for raw-SI observations, shape (n_samples, n_actions)."""
        self._check_fitted()
        X = check_state_matrix(X, N_STATE)
        return np.array([forward(self.net_, self.net_.normalize(row)) for row in X])

    def predict(self, X):
        """Greedy actuator force (N) for raw-SI observations

        ``[u_t, u_{t-1}, u_{t-2}, v_t, a_t, ag_t]``; ties break to the most
        negative force.
        """
        q = self.q_values(X)
        return self.action_space_.forces[np.argmax(q, axis=1)]

    def score(self, X=None, y=None):
        """Best greedy peak-displacement improvement achieved during fit, %."""
        self._check_fitted()
        return self.improvements_.get("displacement", float("nan"))
