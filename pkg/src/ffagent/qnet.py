"""MLP Q-value approximator with hand-written backprop, Bellman targets and a
binary weight format."""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"FFQN"
FORMAT_VERSION = 1
ACTIVATIONS = ("relu", "tanh")


class WeightsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class QNetworkConfig:
    input_dim: int
    output_dim: int = 25
    hidden_dims: tuple[int, ...] = (64, 32)
    activation: str = "relu"
    init_scale: float | None = None  # None: 1/sqrt(fan_in) per layer
    seed: int = 0
    learning_rate: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ValueError("layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)


class QNetwork:
    """Fully connected net; hidden layers use ``config.activation``, the output
    layer is linear. ``weights[k]`` has shape ``(fan_in, fan_out)``."""

    def __init__(self, config: QNetworkConfig, weights=None, biases=None):
        self.config = config
        self.updates = 0  # gradient steps applied; lets callers detect stale cached outputs
        dims = config.layer_dims
        if weights is None:
            rng = np.random.default_rng(config.seed)
            weights, biases = [], []
            for fan_in, fan_out in zip(dims[:-1], dims[1:]):
                scale = config.init_scale if config.init_scale is not None else 1.0 / np.sqrt(fan_in)
                weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
                biases.append(rng.uniform(-scale, scale, size=fan_out))
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            if self.weights[k].shape != (fan_in, fan_out) or self.biases[k].shape != (fan_out,):
                raise ValueError(f"layer {k}: parameter shapes do not chain as {dims}")

    @property
    def params(self) -> list[np.ndarray]:
        return [p for wb in zip(self.weights, self.biases) for p in wb]

    def copy(self) -> "QNetwork":
        return QNetwork(self.config, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def _act(self, z):
        return np.maximum(z, 0.0) if self.config.activation == "relu" else np.tanh(z)

    def _act_grad(self, z, a):
        return (z > 0).astype(np.float64) if self.config.activation == "relu" else 1.0 - a * a

    def _forward_cache(self, x: np.ndarray):
        pre, post = [], [x]
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = z if k == last else self._act(z)
            post.append(h)
        return pre, post

    def forward(self, state) -> np.ndarray:
        """Q-values for one state ``(D,)`` or a batch ``(B, D)``."""
        x = np.asarray(state, dtype=np.float64)
        if x.shape[-1] != self.config.input_dim or x.ndim not in (1, 2):
            raise ValueError(f"dimension mismatch: expected input of size {self.config.input_dim}, got shape {x.shape}")
        _, post = self._forward_cache(x)
        return post[-1]

    __call__ = forward

    def loss_and_grads(self, states, targets):
        """MSE averaged over batch and outputs, with gradients w.r.t. ``params``."""
        x = np.atleast_2d(np.asarray(states, dtype=np.float64))
        y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        pre, post = self._forward_cache(x)
        diff = post[-1] - y
        loss = float(np.mean(diff * diff))
        delta = 2.0 * diff / diff.size
        grads = []
        for k in range(len(self.weights) - 1, -1, -1):
            grads.append(delta.sum(axis=0))
            grads.append(post[k].T @ delta)
            if k > 0:
                delta = (delta @ self.weights[k].T) * self._act_grad(pre[k - 1], post[k])
        grads.reverse()  # (dW0, db0, dW1, db1, ...) like ``params``
        return loss, grads


def bellman_target(reward: float, max_next_q: float, gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    return reward + gamma * max_next_q


def build_target(current_q, chosen: int, target_value: float) -> np.ndarray:
    target = np.array(current_q, dtype=np.float64)
    if not 0 <= chosen < len(target):
        raise IndexError(f"action {chosen} outside [0, {len(target)})")
    target[chosen] = target_value
    return target


def greedy_action(q_values) -> int:
    q = np.asarray(q_values)
    if q.size == 0:
        raise ValueError("empty q-value vector")
    return int(np.argmax(q))  # first maximum wins ties


def train_batch(net: QNetwork, batch: Sequence[tuple[np.ndarray, np.ndarray]], learning_rate: float | None = None) -> float:
    """One full-batch gradient-descent step; returns the loss before the step."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    states = np.stack([np.asarray(s, dtype=np.float64) for s, _ in batch])
    targets = np.stack([np.asarray(t, dtype=np.float64) for _, t in batch])
    return train_arrays(net, states, targets, learning_rate)


def train_arrays(net: QNetwork, states: np.ndarray, targets: np.ndarray, learning_rate: float | None = None) -> float:
    if len(states) == 0:
        raise ValueError("empty batch")
    if states.shape[1] != net.config.input_dim or targets.shape[1] != net.config.output_dim:
        raise ValueError("dimension mismatch between batch and network")
    lr = net.config.learning_rate if learning_rate is None else learning_rate
    loss, grads = net.loss_and_grads(states, targets)
    for p, g in zip(net.params, grads):
        p -= lr * g
    net.updates += 1
    return loss


# ---------------------------------------------------------------------------
# Weights file: little-endian header "FFQN", version, input_dim, layer count,
# (rows, cols) per layer; then per layer the row-major float64 weight matrix
# followed by its bias vector; then the CRC32 of that payload.


def save_weights(net: QNetwork, path) -> None:
    header = struct.pack("<4sIII", MAGIC, FORMAT_VERSION, net.config.input_dim, len(net.weights))
    for w in net.weights:
        header += struct.pack("<II", *w.shape)
    payload = b"".join(
        np.ascontiguousarray(w, dtype="<f8").tobytes() + np.ascontiguousarray(b, dtype="<f8").tobytes()
        for w, b in zip(net.weights, net.biases)
    )
    Path(path).write_bytes(header + payload + struct.pack("<I", zlib.crc32(payload)))


def load_weights(path, activation: str = "relu", expected_input_dim: int | None = None, **config_kw) -> QNetwork:
    """Read a weights file; ``activation`` and extra config fields are not
    stored in the file and must be supplied by the caller."""
    data = Path(path).read_bytes()

    def take(offset, fmt):
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise WeightsFormatError("unexpected end of weights file")
        return struct.unpack_from(fmt, data, offset), offset + size

    (magic, version, input_dim, n_layers), off = take(0, "<4sIII")
    if magic != MAGIC:
        raise WeightsFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise WeightsFormatError(f"unsupported version {version}")
    if n_layers < 1:
        raise WeightsFormatError("layer count must be >= 1")
    shapes = []
    for _ in range(n_layers):
        shape, off = take(off, "<II")
        shapes.append(shape)
    if shapes[0][0] != input_dim:
        raise WeightsFormatError(f"dimension mismatch: input_dim {input_dim} but first layer has {shapes[0][0]} rows")
    if expected_input_dim is not None and input_dim != expected_input_dim:
        raise WeightsFormatError(f"dimension mismatch: file input_dim {input_dim}, expected {expected_input_dim}")
    for (_, cols), (rows, _) in zip(shapes[:-1], shapes[1:]):
        if cols != rows:
            raise WeightsFormatError("dimension mismatch: layer shapes do not chain")
    start = off
    weights, biases = [], []
    for rows, cols in shapes:
        n = rows * cols + cols
        if off + 8 * n > len(data):
            raise WeightsFormatError("unexpected end of weights file")
        flat = np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(np.float64)
        weights.append(flat[: rows * cols].reshape(rows, cols))
        biases.append(flat[rows * cols:].copy())
        off += 8 * n
    (crc,), end = take(off, "<I")
    if crc != zlib.crc32(data[start:off]):
        raise WeightsFormatError("checksum mismatch")
    if end != len(data):
        raise WeightsFormatError("trailing bytes after checksum")
    config = QNetworkConfig(
        input_dim=input_dim,
        output_dim=shapes[-1][1],
        hidden_dims=tuple(c for _, c in shapes[:-1]),
        activation=activation,
        **config_kw,
    )
    return QNetwork(config, weights, biases)
