"""Experiment configuration: flat dotted-key schema, file parsing, provenance.

A config file is plain text, one ``dotted.key = value`` per line, '#'
comments allowed.  Resolution precedence is CLI flag > file > default; the
run manifest records, for every key, which of those supplied the value and
whether the default is a benchmark-protocol value ("paper") or an engineering
choice of this implementation ("assumed").
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .errors import InvalidParameterError

__all__ = ["ExperimentConfig", "CONFIG_SCHEMA", "load_config_file", "resolve_config"]


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(part) for part in str(text).replace(",", " ").split()]


@dataclass(frozen=True)
class _Key:
    attr: str
    parse: object
    default: object
    source: str        # "paper" | "assumed"
    help: str


# key -> how to parse it, its default, and where that default comes from
CONFIG_SCHEMA = {
    "structure.mass": _Key("mass", float, 2000.0, "paper", "frame mass, kg"),
    "structure.stiffness": _Key("stiffness", float, 7.9e6, "paper", "frame stiffness, N/m"),
    "structure.damping": _Key("damping", float, 2.5e5, "paper", "frame damping, N*s/m"),
    "sim.sample_rate_hz": _Key("sample_rate_hz", float, 100.0, "paper", "sensor/control rate, Hz"),
    "sim.steps_per_episode": _Key("steps_per_episode", int, 6000, "paper", "states per episode"),
    "record.path": _Key("record_path", str, "", "assumed", "CSV or AT2 record path; empty uses the synthetic record"),
    "record.synth.kind": _Key("synth_kind", str, "white_noise", "assumed", "sine | sweep | white_noise"),
    "record.synth.duration_s": _Key("synth_duration_s", float, 60.0, "assumed", "synthetic record length, s"),
    "record.synth.amplitude": _Key("synth_amplitude", float, 2.0, "assumed", "synthetic amplitude scale, m/s^2"),
    "record.synth.seed": _Key("synth_seed", int, 0, "assumed", "synthetic record seed"),
    "record.synth.f0": _Key("synth_f0", float, 0.5, "assumed", "sine frequency / sweep start, Hz"),
    "record.synth.f1": _Key("synth_f1", float, 20.0, "assumed", "sweep end frequency, Hz"),
    "delay.seconds": _Key("delay_seconds", float, 0.0, "paper", "action-effect delay, s (scenarios 0/5/10)"),
    "delay.applies_to": _Key("delay_applies_to", str, "force", "assumed", "force | ground"),
    "train.method": _Key("method", str, "enhanced", "assumed", "original | enhanced"),
    "train.episodes": _Key("episodes", int, 1000, "paper", "training episodes"),
    "train.buffer_capacity": _Key("buffer_capacity", int, 60000, "paper", "experience buffer size"),
    "train.batch_size": _Key("batch_size", int, 50, "paper", "minibatch size"),
    "train.target_sync_episodes": _Key("target_sync_episodes", int, 50, "paper", "episodes between target-net syncs"),
    "train.train_every": _Key("train_every", int, 1, "assumed", "environment steps between minibatch updates"),
    "train.eval_every": _Key("eval_every", int, 10, "assumed", "episodes between greedy evaluations"),
    "train.step_size": _Key("step_size", float, 1e-3, "assumed", "SGD step size (reported training-rate constant 0.99 is not usable as one)"),
    "train.discount": _Key("discount", float, 0.99, "assumed", "bootstrap discount for the one-step method"),
    "train.epsilon_start": _Key("epsilon_start", float, 1.0, "paper", "initial exploration rate"),
    "train.epsilon_min": _Key("epsilon_min", float, 0.1, "paper", "final exploration rate"),
    "train.epsilon_decay_fraction": _Key("epsilon_decay_fraction", float, 0.8, "assumed", "fraction of episodes spent decaying epsilon"),
    "train.seed": _Key("seed", int, 0, "assumed", "master RNG seed"),
    "filter.cutoff_percent": _Key("filter_cutoff_percent", float, 15.0, "paper", "envelope cutoff percentage"),
    "filter.cutoff_rule": _Key("filter_cutoff_rule", str, "by", "assumed", "'by': cut when reduced BY p%% of peak; 'to': cut at p%% OF peak"),
    "filter.probe_force": _Key("probe_force", float, 0.0, "assumed", "probe pulse amplitude, N; 0 uses action.max_force"),
    "reward.force_penalty": _Key("force_penalty", float, 0.005, "paper", "penalty per force unit"),
    "reward.force_unit": _Key("force_unit", float, 1000.0, "assumed", "force normalization for the penalty term, N"),
    "reward.signed_force_term": _Key("signed_force_term", _parse_bool, False, "assumed", "use the literal signed force term"),
    "action.count": _Key("n_actions", int, 11, "assumed", "number of discrete force levels (odd)"),
    "action.max_force": _Key("max_force", float, 10000.0, "assumed", "actuator force limit, N"),
    "net.hidden_sizes": _Key("hidden_sizes", _parse_int_list, [40, 40], "paper", "hidden layer sizes"),
}

_ATTR_TO_KEY = {spec.attr: key for key, spec in CONFIG_SCHEMA.items()}


@dataclass
class ExperimentConfig:
    mass: float = 2000.0
    stiffness: float = 7.9e6
    damping: float = 2.5e5
    sample_rate_hz: float = 100.0
    steps_per_episode: int = 6000
    record_path: str = ""
    synth_kind: str = "white_noise"
    synth_duration_s: float = 60.0
    synth_amplitude: float = 2.0
    synth_seed: int = 0
    synth_f0: float = 0.5
    synth_f1: float = 20.0
    delay_seconds: float = 0.0
    delay_applies_to: str = "force"
    method: str = "enhanced"
    episodes: int = 1000
    buffer_capacity: int = 60000
    batch_size: int = 50
    target_sync_episodes: int = 50
    train_every: int = 1
    eval_every: int = 10
    step_size: float = 1e-3
    discount: float = 0.99
    epsilon_start: float = 1.0
    epsilon_min: float = 0.1
    epsilon_decay_fraction: float = 0.8
    seed: int = 0
    filter_cutoff_percent: float = 15.0
    filter_cutoff_rule: str = "by"
    probe_force: float = 0.0
    force_penalty: float = 0.005
    force_unit: float = 1000.0
    signed_force_term: bool = False
    n_actions: int = 11
    max_force: float = 10000.0
    hidden_sizes: list = field(default_factory=lambda: [40, 40])
    # not part of the file schema: lets tests and callers freeze a filter
    filter_override: object = None

    @property
    def dt(self):
        return 1.0 / self.sample_rate_hz

    def validate(self):
        if self.method not in ("original", "enhanced"):
            raise InvalidParameterError(f"train.method must be original or enhanced, got {self.method!r}")
        if self.delay_applies_to not in ("force", "ground"):
            raise InvalidParameterError("delay.applies_to must be 'force' or 'ground'")
        if self.filter_cutoff_rule not in ("by", "to"):
            raise InvalidParameterError("filter.cutoff_rule must be 'by' or 'to'")
        if self.sample_rate_hz <= 0:
            raise InvalidParameterError("sim.sample_rate_hz must be positive")
        for name in ("episodes", "steps_per_episode", "buffer_capacity", "batch_size",
                     "target_sync_episodes", "train_every", "eval_every"):
            if getattr(self, name) < (0 if name == "episodes" else 1):
                raise InvalidParameterError(f"{name} out of range: {getattr(self, name)}")
        if self.delay_seconds < 0:
            raise InvalidParameterError("delay.seconds must be non-negative")
        return self

    def effective_probe_force(self):
        return self.probe_force if self.probe_force > 0 else self.max_force

    def as_key_values(self):
        """Resolved configuration as dotted keys (stable order, schema keys only)."""
        out = {}
        for key, spec in CONFIG_SCHEMA.items():
            value = getattr(self, spec.attr)
            out[key] = list(value) if isinstance(value, list) else value
        return out


def load_config_file(path):
    """Parse ``dotted.key = value`` lines; returns a raw string mapping."""
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise InvalidParameterError(f"{path}: line {lineno}: expected 'key = value', got {line!r}")
            key, _, value = text.partition("=")
            key = key.strip()
            if key not in CONFIG_SCHEMA:
                raise InvalidParameterError(f"{path}: line {lineno}: unknown configuration key {key!r}")
            raw[key] = value.strip()
    return raw


def resolve_config(file_values=None, flag_values=None):
    """Merge defaults, file values, and flag overrides.

    Returns ``(config, provenance)`` where provenance maps each dotted key to
    'flag', 'file', 'default (paper)' or 'default (assumed)'.
    """
    file_values = file_values or {}
    flag_values = flag_values or {}
    for mapping, origin in ((file_values, "file"), (flag_values, "flag")):
        for key in mapping:
            if key not in CONFIG_SCHEMA:
                raise InvalidParameterError(f"unknown configuration key {key!r} (from {origin})")

    kwargs = {}
    provenance = {}
    for key, spec in CONFIG_SCHEMA.items():
        if key in flag_values:
            source, raw = "flag", flag_values[key]
        elif key in file_values:
            source, raw = "file", file_values[key]
        else:
            source, raw = f"default ({spec.source})", spec.default
        try:
            value = spec.parse(raw)
        except (TypeError, ValueError) as exc:
            raise InvalidParameterError(f"bad value for {key}: {raw!r} ({exc})") from None
        kwargs[spec.attr] = value
        provenance[key] = source
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg, provenance


def config_from_attrs(**attrs):
    """Build a validated config from attribute names (helper for library use)."""
    cfg = ExperimentConfig(**attrs)
    cfg.validate()
    return cfg
