"""Reference selectors: fixed stride, random jumps, online k-means and a
supervised jump regressor."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .qnet import QNetwork, QNetworkConfig, train_arrays
from .reward import ActionSpace
from .runtime import FeatureStream, RuntimeConfig, SelectionResult, match_budget, presented_set
from .stream import LabeledVideo
from .trainer import NumericError, TrainingConfig


def uniform_skip(length: int, stride: int, halfwidth: int) -> SelectionResult:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    processed = list(range(0, length, stride))
    return SelectionResult.build(processed, presented_set(processed, halfwidth, length), [], length)


def random_policy(length: int, actions: ActionSpace, halfwidth: int, seed: int) -> SelectionResult:
    """Same rollout as the runtime, with uniformly random actions. Never looks
    at frame content."""
    rng = np.random.default_rng(seed)
    cursor, processed, chosen = 0, [0], []
    while cursor < length - 1:
        a = int(rng.integers(actions.size))
        chosen.append(a)
        cursor = min(cursor + actions.advance(a), length - 1)
        processed.append(cursor)
    return SelectionResult.build(processed, presented_set(processed, halfwidth, length), chosen, length)


def online_kmeans(features, k: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Single-pass sequential k-means.

    The first ``k`` frames seed the centroids; every later frame moves its
    nearest centroid by ``1/count`` of the gap. Distance ties go to a seeded
    random choice. Returns ``(centroids, counts)``.
    """
    x = np.asarray(features, dtype=np.float64)
    if not 1 <= k <= len(x):
        raise ValueError(f"need 1 <= k <= number of frames (k={k}, frames={len(x)})")
    rng = np.random.default_rng(seed)
    centroids = x[:k].copy()
    counts = np.ones(k)
    for frame in x[k:]:
        d = np.sum((centroids - frame) ** 2, axis=1)
        nearest = np.flatnonzero(d == d.min())
        c = int(nearest[0]) if len(nearest) == 1 else int(rng.choice(nearest))
        counts[c] += 1
        centroids[c] += (frame - centroids[c]) / counts[c]
    return centroids, counts


def online_kmeans_select(features, k: int, halfwidth: int, budget: int | None, seed: int) -> SelectionResult:
    """Keyframes nearest each online k-means centroid.

    Every frame is read, so the processing percentage is reported as 100.
    """
    stream = features if isinstance(features, FeatureStream) else FeatureStream(features)
    n = len(stream)
    x = np.stack([stream[i] for i in range(n)])
    centroids, _ = online_kmeans(x, k, seed)
    d = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    processed = sorted({int(i) for i in np.argmin(d, axis=0)})
    presented = presented_set(processed, halfwidth, n)
    if budget is not None:
        presented = match_budget(presented, processed, max(budget, len(processed)))
    return SelectionResult.build(processed, presented, [], n, percentage=100.0)


# ---------------------------------------------------------------------------
# Supervised jump regression


def jump_targets(labels, max_jump: int) -> np.ndarray:
    """Distance from each frame to the next important frame after it, clamped
    to ``[1, max_jump]``.

    The end of the video acts as a sentinel: frames with no later important
    frame target the distance to the last frame (at least 1).
    """
    labels = np.asarray(labels)
    n = len(labels)
    nxt = np.full(n, n - 1, dtype=np.int64)
    upcoming = n - 1
    for i in range(n - 1, -1, -1):
        nxt[i] = upcoming
        if labels[i] == 1:
            upcoming = i
    return np.clip(nxt - np.arange(n), 1, max_jump)


@dataclass
class JumpRegressor:
    """MLP with a single output predicting the jump, scaled by ``max_jump``."""

    net: QNetwork
    max_jump: int

    def predict(self, features) -> np.ndarray:
        return self.net.forward(features)[..., 0] * self.max_jump

    def predict_jump(self, state) -> int:
        return int(np.clip(np.rint(self.predict(state)), 1, self.max_jump))


def supervised_jump_baseline(dataset: Sequence[LabeledVideo], qcfg: QNetworkConfig, tcfg: TrainingConfig,
                             epochs: int = 300, batch_size: int = 256, learning_rate: float = 0.05) -> JumpRegressor:
    if not dataset:
        raise ValueError("empty dataset")
    if not any(v.labels.any() for v in dataset):
        raise ValueError("no supervision signal")
    max_jump = tcfg.actions.max_advance
    x = np.concatenate([v.features for v in dataset])
    y = np.concatenate([jump_targets(v.labels, max_jump) for v in dataset]).astype(np.float64)
    net = QNetwork(replace(qcfg, output_dim=1))
    rng = np.random.default_rng(tcfg.seed)
    y = (y / max_jump)[:, None]
    for _ in range(epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), batch_size):
            idx = order[start:start + batch_size]
            loss = train_arrays(net, x[idx], y[idx], learning_rate)
            if not np.isfinite(loss):
                raise NumericError("non-finite loss in supervised baseline")
    return JumpRegressor(net, max_jump)


def run_supervised(features, model: JumpRegressor, actions: ActionSpace,
                   rtcfg: RuntimeConfig = RuntimeConfig()) -> SelectionResult:
    """Rollout driven by the regressor; the action taken is the one whose
    advance is closest to the predicted jump."""
    stream = features if isinstance(features, FeatureStream) else FeatureStream(features)
    n = len(stream)
    advances = np.array([actions.advance(a) for a in range(actions.size)])
    cursor = rtcfg.start_index
    processed, chosen = [cursor], []
    while True:
        jump = model.predict_jump(stream[cursor])
        if cursor >= n - 1:
            break
        a = int(np.argmin(np.abs(advances - jump)))
        chosen.append(a)
        cursor = min(cursor + int(advances[a]), n - 1)
        processed.append(cursor)
    presented = presented_set(processed, rtcfg.present_halfwidth, n)
    if rtcfg.budget is not None:
        presented = match_budget(presented, processed, rtcfg.budget)
    return SelectionResult.build(processed, presented, chosen, n)
