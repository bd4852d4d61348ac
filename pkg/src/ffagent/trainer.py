"""Episodic Q-learning over labeled videos with a flushed batch memory."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .qnet import QNetwork, QNetworkConfig, bellman_target, build_target, greedy_action, train_arrays
from .reward import ActionSpace, RewardConfig, Transition, immediate_reward
from .stream import LabeledVideo


class NumericError(RuntimeError):
    """Raised when training produces a non-finite loss or parameter."""


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 1000
    memory_size: int = 128
    epsilon_init: float = 1.0
    epsilon_min: float = 0.1
    epsilon_decay: float = 1e-5
    gamma: float = 0.8
    reward: RewardConfig = field(default_factory=RewardConfig)
    actions: ActionSpace = field(default_factory=ActionSpace)
    seed: int = 0
    start_index: int = 0
    retain_memory: bool = False

    def __post_init__(self):
        if not 0.0 <= self.epsilon_min <= self.epsilon_init <= 1.0:
            raise ValueError("need 0 <= epsilon_min <= epsilon_init <= 1")
        if self.epsilon_decay < 0:
            raise ValueError("epsilon_decay must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.memory_size < 1:
            raise ValueError("memory_size must be >= 1")
        if self.epochs < 0 or self.start_index < 0:
            raise ValueError("epochs and start_index must be >= 0")
        self.reward.check_actions(self.actions)

    def epsilon_at(self, updates: int) -> float:
        """Exploration rate after ``updates`` batch updates."""
        return max(self.epsilon_init - updates * self.epsilon_decay, self.epsilon_min)


@dataclass
class LogRecord:
    epoch: int
    steps: int
    epsilon: float
    loss: float
    mean_reward: float


@dataclass
class TrainingLog:
    records: list[LogRecord] = field(default_factory=list)
    # mean immediate reward of every episode, one entry per epoch
    episode_rewards: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "steps", "epsilon", "loss", "mean_reward"])
            for r in self.records:
                writer.writerow([r.epoch, r.steps, repr(r.epsilon), repr(r.loss), repr(r.mean_reward)])

    @classmethod
    def read_csv(cls, path) -> "TrainingLog":
        log = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                log.records.append(
                    LogRecord(int(row["epoch"]), int(row["steps"]), float(row["epsilon"]),
                              float(row["loss"]), float(row["mean_reward"]))
                )
        return log


def select_action(q_values, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice. Always consumes one uniform draw so the random
    stream does not depend on epsilon."""
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values)))
    return greedy_action(q_values)


@dataclass
class Step:
    cursor: int
    action: int
    landing: int
    reward: float
    q_curr: np.ndarray
    q_next: np.ndarray


def _rollout(video: LabeledVideo, net: QNetwork, epsilon, config: TrainingConfig,
             rng: np.random.Generator) -> Iterator[Step]:
    """Yields one step at a time so the caller may update ``net`` between
    steps; ``epsilon`` may be a float or a zero-argument callable."""
    last = len(video) - 1
    cursor = config.start_index
    if cursor > last:
        raise ValueError(f"start_index {cursor} beyond video of length {len(video)}")
    feats, labels = video.features, video.labels
    q_curr, seen_version = None, None
    while cursor < last:
        if q_curr is None or seen_version != net.updates:
            q_curr = net.forward(feats[cursor])
        eps = epsilon() if callable(epsilon) else epsilon
        action = select_action(q_curr, eps, rng)
        landing = min(cursor + config.actions.advance(action), last)
        reward = immediate_reward(labels, cursor, landing - cursor, config.reward)
        q_next = net.forward(feats[landing])
        seen_version = net.updates
        yield Step(cursor, action, landing, reward, q_curr, q_next)
        cursor, q_curr = landing, q_next


def run_episode(video: LabeledVideo, net: QNetwork, epsilon: float, config: TrainingConfig,
                rng: np.random.Generator) -> list[Transition]:
    """Roll out one episode from ``config.start_index`` to the last frame.

    An overshooting jump is clamped to land on the last frame.
    """
    feats = video.features
    return [
        Transition(feats[s.cursor], s.action, feats[s.landing], s.reward)
        for s in _rollout(video, net, epsilon, config, rng)
    ]


def _check_dims(dataset: Sequence[LabeledVideo], qcfg: QNetworkConfig, tcfg: TrainingConfig) -> None:
    if not dataset:
        raise ValueError("empty dataset")
    for v in dataset:
        if v.feature_dim != qcfg.input_dim:
            raise ValueError(f"dimension mismatch: video {v.id!r} has D={v.feature_dim}, network expects {qcfg.input_dim}")
    if qcfg.output_dim != tcfg.actions.size:
        raise ValueError(f"network output_dim {qcfg.output_dim} != action space size {tcfg.actions.size}")


def _update(net: QNetwork, states, targets) -> float:
    loss = train_arrays(net, np.asarray(states), np.asarray(targets))
    if not math.isfinite(loss) or not all(np.isfinite(p).all() for p in net.params):
        raise NumericError(f"non-finite loss or parameters (loss={loss})")
    return loss


def train(dataset: Sequence[LabeledVideo], qcfg: QNetworkConfig, tcfg: TrainingConfig,
          net: QNetwork | None = None) -> tuple[QNetwork, TrainingLog]:
    _check_dims(dataset, qcfg, tcfg)
    net = QNetwork(qcfg) if net is None else net
    rng = np.random.default_rng(tcfg.seed)
    log = TrainingLog()
    updates = 0
    epsilon = lambda: tcfg.epsilon_at(updates)  # noqa: E731

    if tcfg.retain_memory:
        replay: deque = deque(maxlen=tcfg.memory_size)
        fresh = 0
    states: list[np.ndarray] = []
    targets: list[np.ndarray] = []

    for epoch in range(tcfg.epochs):
        video = dataset[int(rng.integers(len(dataset)))]
        if len(video) <= tcfg.start_index + 1:
            log.episode_rewards.append(0.0)
            continue
        rewards: list[float] = []
        for step_no, s in enumerate(_rollout(video, net, epsilon, tcfg, rng), start=1):
            rewards.append(s.reward)
            if tcfg.retain_memory:
                replay.append((video.features[s.cursor], s.action, s.reward, video.features[s.landing]))
                fresh += 1
                if len(replay) < tcfg.memory_size or fresh < tcfg.memory_size:
                    continue
                st = np.stack([t[0] for t in replay])
                nx = np.stack([t[3] for t in replay])
                q_now = net.forward(st)
                q_nx = net.forward(nx).max(axis=1)
                tg = q_now.copy()
                for row, (_, a, r, _) in enumerate(replay):
                    tg[row, a] = bellman_target(r, q_nx[row], tcfg.gamma)
                batch_eps = epsilon()
                loss = _update(net, st, tg)
                fresh = 0
            else:
                value = bellman_target(s.reward, float(np.max(s.q_next)), tcfg.gamma)
                states.append(video.features[s.cursor])
                targets.append(build_target(s.q_curr, s.action, value))
                if len(states) <= tcfg.memory_size:
                    continue
                batch_eps = epsilon()
                loss = _update(net, states, targets)
                states, targets = [], []
            updates += 1
            log.records.append(LogRecord(epoch, step_no, batch_eps, loss, float(np.mean(rewards))))
        log.episode_rewards.append(float(np.mean(rewards)))
    return net, log
