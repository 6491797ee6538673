"""Fully-connected Q-network with explicit float64 parameters.

Rectifier hidden layers, identity output, hand-written backprop for the
mean squared TD error.  Kept dependency-free so gradients can be checked
against central finite differences.
"""
from __future__ import annotations


import numpy as np

CHECKPOINT_VERSION = 1


class QNetwork:
    """Affine-ReLU stack; the last layer is affine only."""

    def __init__(self, weights, biases) -> None:
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix")
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"inconsistent layer shapes {w.shape} / {b.shape}")

    @classmethod
    def init(cls, layer_sizes, rng: np.random.Generator) -> "QNetwork":
        """Glorot-uniform weights, zero biases."""
        sizes = list(layer_sizes)
        if len(sizes) < 2:
            raise ValueError("need at least an input and an output size")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_size(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_size(self) -> int:
        return self.weights[-1].shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values for a single state (1-D) or a batch (2-D)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.input_size:
            raise ValueError(
                f"input size {h.shape[1]} does not match network input {self.input_size}")
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        out = h @ self.weights[-1] + self.biases[-1]
        return out[0] if single else out

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])

    def load_from(self, other: "QNetwork") -> None:
        if self.layer_sizes != other.layer_sizes:
            raise ValueError("cannot copy between networks of different shape")
        for w, ow in zip(self.weights, other.weights):
            np.copyto(w, ow)
        for b, ob in zip(self.biases, other.biases):
            np.copyto(b, ob)

    def apply_gradients(self, grads, lr: float) -> None:
        dws, dbs = grads
        for w, dw in zip(self.weights, dws):
            w -= lr * dw
        for b, db in zip(self.biases, dbs):
            b -= lr * db

    def save(self, path) -> None:
        payload = {"version": np.int64(CHECKPOINT_VERSION),
                   "sizes": np.array(self.layer_sizes, dtype=np.int64)}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            payload[f"w{i}"] = w
            payload[f"b{i}"] = b
        np.savez(path, **payload)

    @classmethod
    def load(cls, path) -> "QNetwork":
        with np.load(path) as data:
            version = int(data["version"])
            if version != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {version}")
            sizes = data["sizes"]
            n_layers = len(sizes) - 1
            weights = [data[f"w{i}"] for i in range(n_layers)]
            biases = [data[f"b{i}"] for i in range(n_layers)]
        return cls(weights, biases)


def sync_target(net: QNetwork, target_net: QNetwork) -> None:
    """Hard-copy parameters into the target network."""
    target_net.load_from(net)


def td_loss(net: QNetwork, states: np.ndarray, actions: np.ndarray,
            targets: np.ndarray) -> float:
    """Mean squared TD error of the selected actions' Q-values."""
    q = net.forward(np.atleast_2d(states))
    chosen = q[np.arange(q.shape[0]), np.asarray(actions)]
    diff = chosen - np.asarray(targets, dtype=np.float64)
    return float(np.mean(diff * diff))


def gradient(net: QNetwork, states: np.ndarray, actions: np.ndarray,
             targets: np.ndarray):
    """Analytic gradient of the mean squared TD error.

    Only the chosen action's Q-value receives error signal.  Returns
    (weight grads, bias grads) shaped like the network parameters.
    """
    x = np.atleast_2d(np.asarray(states, dtype=np.float64))
    actions = np.asarray(actions)
    targets = np.asarray(targets, dtype=np.float64)
    batch = x.shape[0]
    if batch == 0:
        raise ValueError("empty batch")

    pre = []          # pre-activation per layer
    post = [x]        # post-activation per layer (input first)
    h = x
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        post.append(h)
    q = h @ net.weights[-1] + net.biases[-1]

    rows = np.arange(batch)
    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * (q[rows, actions] - targets) / batch

    dws = [None] * len(net.weights)
    dbs = [None] * len(net.biases)
    delta = dq
    for layer in range(len(net.weights) - 1, -1, -1):
        dws[layer] = post[layer].T @ delta
        dbs[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (pre[layer - 1] > 0)
    return dws, dbs


def td_targets(rewards: np.ndarray, next_states: np.ndarray,
               terminals: np.ndarray, target_net: QNetwork,
               gamma: float) -> np.ndarray:
    """Bootstrap targets: r + gamma * max_a' Q_target(s', a'), r when terminal."""
    rewards = np.asarray(rewards, dtype=np.float64)
    terminals = np.asarray(terminals, dtype=np.float64)
    next_q = target_net.forward(np.atleast_2d(next_states))
    return rewards + gamma * next_q.max(axis=1) * (1.0 - terminals)


def act_epsilon_greedy(qvalues: np.ndarray, epsilon: float,
                       rng: np.random.Generator) -> int:
    """Uniform action with probability epsilon, else lowest-index argmax."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    qvalues = np.asarray(qvalues)
    if rng.random() < epsilon:
        return int(rng.integers(0, qvalues.shape[-1]))
    return int(np.argmax(qvalues))


def batch_epsilon_greedy(qvalues: np.ndarray, epsilon: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Row-wise epsilon-greedy.

    Always draws one uniform and one action index per row, so the rng stream
    stays aligned across configurations regardless of epsilon or Q-values.
    """
    n, n_actions = qvalues.shape
    explore = rng.random(n) < epsilon
    random_actions = rng.integers(0, n_actions, size=n)
    return np.where(explore, random_actions, np.argmax(qvalues, axis=1))
