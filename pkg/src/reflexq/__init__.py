"""reflexq: Q-learning vibration control with impulse-derived reward filters.

The package trains a discrete-force controller for a single-story structure
under ground excitation where actuator commands take effect only after a
constant dead time.  Instead of discounting future rewards exponentially, the
enhanced method probes the plant once with a single force pulse and turns the
normalized response envelope into a finite sequence of per-step reward
weights plus a bootstrap discount, which the Q-learning target then uses.
"""

__version__ = "0.1.0"

from .agent import ActionSpace, ExperienceWindow, ReplayBuffer
from .config import ExperimentConfig, resolve_config
from .dynamics import (DelayLine, DiscreteModel, ResponseSample, ResponseSeries,
                       SdofParams, discretize, simulate, step)
from .excitation import GroundMotion, load_at2, load_csv, resample, synth, write_csv
from .gamma_filter import ReflexiveGamma, build, build_from_probe, enhanced_target, probe
from .qnet import QNetwork, clone, forward, init_network, load_checkpoint, save_checkpoint
from .reward import RewardConfig, reward, uncontrolled_peaks
from .trainer import RunResult, TrainingLog, evaluate, run
from .estimator import SeismicQController

__all__ = [
    "__version__",
    "ActionSpace", "ExperienceWindow", "ReplayBuffer",
    "ExperimentConfig", "resolve_config",
    "DelayLine", "DiscreteModel", "ResponseSample", "ResponseSeries", "SdofParams",
    "discretize", "simulate", "step",
    "GroundMotion", "load_at2", "load_csv", "resample", "synth", "write_csv",
    "ReflexiveGamma", "build", "build_from_probe", "enhanced_target", "probe",
    "QNetwork", "clone", "forward", "init_network", "load_checkpoint", "save_checkpoint",
    "RewardConfig", "reward", "uncontrolled_peaks",
    "RunResult", "TrainingLog", "evaluate", "run",
    "SeismicQController",
]
