"""Action space and immediate reward for the fast-forwarding MDP.

Action indices are 0-based throughout the package: action ``j`` advances the
cursor by ``jumps[j]`` frames (``j + 1`` with the default space).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

JUMP_MODES = ("advance", "skip")


@dataclass(frozen=True)
class ActionSpace:
    """Discrete jump sizes.

    ``mode="advance"`` lands ``jumps[j]`` frames ahead, so ``jumps[j] - 1``
    frames are skipped. ``mode="skip"`` skips ``jumps[j]`` frames and lands on
    the one after them.
    """

    jumps: tuple[int, ...] = tuple(range(1, 26))
    mode: str = "advance"

    def __post_init__(self):
        jumps = tuple(int(j) for j in self.jumps)
        if not jumps:
            raise ValueError("action space must contain at least one action")
        if jumps[0] < 1 or any(b <= a for a, b in zip(jumps, jumps[1:])):
            raise ValueError("jumps must be strictly increasing and start at >= 1")
        if self.mode not in JUMP_MODES:
            raise ValueError(f"mode must be one of {JUMP_MODES}")
        object.__setattr__(self, "jumps", jumps)

    @classmethod
    def uniform(cls, size: int = 25, mode: str = "advance") -> "ActionSpace":
        return cls(tuple(range(1, size + 1)), mode)

    @property
    def size(self) -> int:
        return len(self.jumps)

    def advance(self, action: int) -> int:
        """Number of frames the cursor moves for ``action``."""
        if not 0 <= action < len(self.jumps):
            raise IndexError(f"action {action} outside [0, {len(self.jumps)})")
        return self.jumps[action] + (1 if self.mode == "skip" else 0)

    @property
    def min_advance(self) -> int:
        return self.advance(0)

    @property
    def max_advance(self) -> int:
        return self.advance(len(self.jumps) - 1)


@dataclass(frozen=True)
class RewardConfig:
    T: float = 25
    beta: float = 0.8
    sigma: float = 1.0
    w: int = 4

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.sigma <= 0:
            raise ValueError("invalid sigma")
        if self.w < 0:
            raise ValueError("w must be >= 0")

    def check_actions(self, actions: ActionSpace) -> None:
        if self.T < max(actions.jumps):
            raise ValueError(f"T={self.T} is below the largest jump {max(actions.jumps)}")


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    next_state: np.ndarray
    reward: float


def gaussian_kernel(t, i, sigma: float):
    if sigma <= 0:
        raise ValueError("invalid sigma")
    d = np.asarray(t, dtype=np.float64) - np.asarray(i, dtype=np.float64)
    out = np.exp(-(d * d) / (2.0 * sigma * sigma)) / math.sqrt(2.0 * math.pi * sigma * sigma)
    return float(out) if np.ndim(out) == 0 else out


def skip_penalty(skipped_labels, config: RewardConfig) -> float:
    skipped = np.asarray(skipped_labels)
    n_imp = int(np.count_nonzero(skipped == 1))
    n_unimp = skipped.size - n_imp
    return n_imp / config.T - config.beta * n_unimp / config.T


def hit_reward(video_labels, z: int, config: RewardConfig) -> float:
    labels = np.asarray(video_labels)
    n = len(labels)
    if not 0 <= z < n:
        raise IndexError("landing index out of range")
    lo, hi = max(0, z - config.w), min(n - 1, z + config.w)
    idx = np.arange(lo, hi + 1)
    hits = idx[labels[lo:hi + 1] == 1]
    if hits.size == 0:
        return 0.0
    return float(np.sum(gaussian_kernel(z, hits, config.sigma)))


def immediate_reward(video_labels, from_index: int, jump: int, config: RewardConfig) -> float:
    """Reward for moving the cursor ``jump`` frames ahead of ``from_index``.

    The skipped interval is the open range strictly between the two frames.
    """
    labels = np.asarray(video_labels)
    if jump < 1:
        raise ValueError("jump must be >= 1")
    landing = from_index + jump
    if from_index < 0 or landing >= len(labels):
        raise IndexError("jump exceeds video")
    skipped = labels[from_index + 1:landing]
    return -skip_penalty(skipped, config) + hit_reward(labels, landing, config)


def accumulated_reward(rewards: Sequence[float], gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    total, discount = 0.0, 1.0
    for r in rewards:
        total += discount * r
        discount *= gamma
    return total
