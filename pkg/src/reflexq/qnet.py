"""From-scratch multilayer perceptron for Q-value estimation.

tanh hidden layers, identity output (Q-values are unbounded signed sums of
rewards).  Training is plain per-example gradient descent on the squared
error of the selected action's output; the other outputs receive zero error.
No autodiff framework -- the backward pass is written out and checked against
finite differences in the test suite.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, TrainingDivergedError

__all__ = [
    "QNetwork",
    "init_network",
    "forward",
    "train_on_target",
    "clone",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "reflexq-qnet"
CHECKPOINT_VERSION = 1


@dataclass
class QNetwork:
    """Weights (out x in), biases, and optional per-input normalization divisors."""

    weights: list
    biases: list
    normalization: np.ndarray | None = None

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_inputs(self):
        return self.weights[0].shape[1]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[0]

    def parameter_count(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def normalize(self, x):
        """Apply the stored input scaling (identity when unset)."""
        if self.normalization is None:
            return np.asarray(x, dtype=float)
        return np.asarray(x, dtype=float) / self.normalization


def init_network(layer_sizes, seed=0) -> QNetwork:
    """Random network: weights ~ N(0, 1/fan_in), biases zero, per-seed deterministic."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 3:
        raise InvalidParameterError("need at least one hidden layer: [input, hidden..., output]")
    if any(s < 1 for s in sizes):
        raise InvalidParameterError(f"all layer sizes must be >= 1, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return QNetwork(weights=weights, biases=biases)


def forward(net: QNetwork, x):
    """Q-values for one input vector."""
    h = np.asarray(x, dtype=float)
    if h.ndim != 1 or len(h) != net.n_inputs:
        raise InvalidParameterError(f"expected input of length {net.n_inputs}, got shape {h.shape}")
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + b
        if i != last:
            h = np.tanh(h)
    return h


def _forward_cached(net, x):
    activations = [np.asarray(x, dtype=float)]
    last = len(net.weights) - 1
    h = activations[0]
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + b
        if i != last:
            h = np.tanh(h)
        activations.append(h)
    return activations


def train_on_target(net: QNetwork, state, action_index, target_q, step_size):
    """One gradient-descent step on 0.5*(target - Q(s, a))^2, in place.

    Returns the pre-update temporal-difference error ``target - Q(s, a)``.
    """
    if not np.isfinite(target_q):
        raise TrainingDivergedError(f"non-finite training target {target_q!r}")
    if step_size <= 0:
        raise InvalidParameterError("step_size must be positive")
    action_index = int(action_index)
    if not (0 <= action_index < net.n_outputs):
        raise InvalidParameterError(f"action index {action_index} out of range")

    acts = _forward_cached(net, state)
    q = acts[-1][action_index]
    err = q - target_q           # d(0.5*err^2)/dq
    td_error = -err

    n_layers = len(net.weights)
    # output layer: only the selected action's row carries error
    w_out = net.weights[-1]
    h_prev = acts[-2]
    delta_prev = w_out[action_index] * err         # gradient flowing into last hidden
    grad_w_row = err * h_prev
    # hidden layers, walking backwards
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers
    for layer in range(n_layers - 2, -1, -1):
        h = acts[layer + 1]                        # tanh output of this layer
        delta = delta_prev * (1.0 - h * h)
        grads_w[layer] = np.outer(delta, acts[layer])
        grads_b[layer] = delta
        if layer > 0:
            delta_prev = net.weights[layer].T @ delta

    for layer in range(n_layers - 1):
        g = grads_w[layer]
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(
                f"non-finite gradient in layer {layer} (|error|={abs(err)})"
            )
        net.weights[layer] -= step_size * g
        net.biases[layer] -= step_size * grads_b[layer]
    if not np.all(np.isfinite(grad_w_row)):
        raise TrainingDivergedError(f"non-finite gradient in output layer (|error|={abs(err)})")
    net.weights[-1][action_index] -= step_size * grad_w_row
    net.biases[-1][action_index] -= step_size * err
    return td_error


def clone(net: QNetwork) -> QNetwork:
    return QNetwork(
        weights=[w.copy() for w in net.weights],
        biases=[b.copy() for b in net.biases],
        normalization=None if net.normalization is None else net.normalization.copy(),
    )


def save_checkpoint(net: QNetwork, path):
    """Versioned, self-describing JSON checkpoint; round-trips bit-exact."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layer_sizes": net.layer_sizes,
        "activations": {"hidden": "tanh", "output": "identity"},
        "normalization": None if net.normalization is None else net.normalization.tolist(),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> QNetwork:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise InvalidParameterError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise InvalidParameterError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    norm = payload.get("normalization")
    net = QNetwork(
        weights=[np.array(w) for w in payload["weights"]],
        biases=[np.array(b) for b in payload["biases"]],
        normalization=None if norm is None else np.array(norm),
    )
    if net.layer_sizes != payload["layer_sizes"]:
        raise InvalidParameterError(f"{path}: layer_sizes inconsistent with stored parameters")
    return net
