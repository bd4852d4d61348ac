"""Greedy online inference over an unlabeled feature stream."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qnet import QNetwork, greedy_action
from .reward import ActionSpace


class FeatureStream:
    """Read-counting view over a ``(n_frames, D)`` feature array.

    Every frame handed out is recorded, so callers can prove which frames a
    selector actually looked at.
    """

    def __init__(self, features):
        self._features = np.asarray(features, dtype=np.float64)
        if self._features.ndim != 2 or len(self._features) == 0:
            raise ValueError("feature stream must be a nonempty (n_frames, D) array")
        self.reads: list[int] = []

    def __len__(self) -> int:
        return len(self._features)

    @property
    def feature_dim(self) -> int:
        return self._features.shape[1]

    def __getitem__(self, index: int) -> np.ndarray:
        index = int(index)
        if not 0 <= index < len(self._features):
            raise IndexError(index)
        self.reads.append(index)
        return self._features[index]

    @property
    def frames_read(self) -> set[int]:
        return set(self.reads)


@dataclass
class SelectionResult:
    processed: list[int]
    presented: list[int]
    actions: list[int]
    processing_percentage: float
    length: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.processed = [int(i) for i in self.processed]
        self.presented = [int(i) for i in self.presented]
        self.actions = [int(a) for a in self.actions]
        if self.processed != sorted(set(self.processed)) or self.presented != sorted(set(self.presented)):
            raise ValueError("processed and presented must be sorted and unique")
        if not set(self.processed) <= set(self.presented):
            raise ValueError("processed frames must be presented")
        if self.length is not None:
            if self.presented and not (0 <= self.presented[0] and self.presented[-1] < self.length):
                raise ValueError("presented index outside the stream")

    @classmethod
    def build(cls, processed, presented, actions, length: int, percentage: float | None = None):
        pct = 100.0 * len(processed) / length if percentage is None else percentage
        return cls(list(processed), list(presented), list(actions), pct, length)

    def to_dict(self) -> dict:
        return {
            "processed": self.processed,
            "presented": self.presented,
            "actions": self.actions,
            "processing_percentage": self.processing_percentage,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SelectionResult":
        d = json.loads(text)
        return cls(d["processed"], d["presented"], d["actions"], float(d["processing_percentage"]))


@dataclass(frozen=True)
class RuntimeConfig:
    present_halfwidth: int = 4
    start_index: int = 0
    budget: int | None = None

    def __post_init__(self):
        if self.present_halfwidth < 0 or self.start_index < 0:
            raise ValueError("present_halfwidth and start_index must be >= 0")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be >= 0")


def presented_set(processed: Sequence[int], halfwidth: int, length: int) -> list[int]:
    keep = np.zeros(length, dtype=bool)
    for p in processed:
        keep[max(0, p - halfwidth):min(length, p + halfwidth + 1)] = True
    return np.flatnonzero(keep).tolist()


def match_budget(presented: Sequence[int], processed: Sequence[int], budget: int) -> list[int]:
    """Shrink the windows around processed frames until at most ``budget``
    frames remain.

    Windows lose one frame per side per round; in the final round frames with
    the highest indices go first. Processed frames are never dropped.
    """
    if budget < len(processed):
        raise ValueError("budget below processed count")
    presented = np.asarray(sorted(presented), dtype=np.int64)
    if len(presented) <= budget:
        return presented.tolist()
    anchors = np.asarray(sorted(processed), dtype=np.int64)
    # distance of every presented frame to its nearest processed frame
    pos = np.searchsorted(anchors, presented)
    left = np.abs(presented - anchors[np.clip(pos - 1, 0, len(anchors) - 1)])
    right = np.abs(anchors[np.clip(pos, 0, len(anchors) - 1)] - presented)
    dist = np.minimum(left, right)
    # largest radius whose full windows still fit, then top up at radius + 1
    radius = 0
    while np.count_nonzero(dist <= radius + 1) <= budget:
        radius += 1
    kept = dist <= radius
    spare = budget - int(np.count_nonzero(kept))
    ring = np.flatnonzero(dist == radius + 1)
    kept[ring[:spare]] = True  # ring is index-ordered: low indices survive
    return presented[kept].tolist()


def run_policy(features, net: QNetwork, actions: ActionSpace, rtcfg: RuntimeConfig = RuntimeConfig()) -> SelectionResult:
    """Greedy fast-forward pass. Only landed-on frames are read from ``features``;
    pass a :class:`FeatureStream` to inspect the reads afterwards."""
    stream = features if isinstance(features, FeatureStream) else FeatureStream(features)
    n = len(stream)
    if stream.feature_dim != net.config.input_dim:
        raise ValueError(f"dimension mismatch: stream D={stream.feature_dim}, network expects {net.config.input_dim}")
    if net.config.output_dim != actions.size:
        raise ValueError("network output size does not match the action space")
    if rtcfg.start_index >= n:
        raise ValueError(f"start_index {rtcfg.start_index} beyond stream of length {n}")
    cursor = rtcfg.start_index
    processed, chosen = [cursor], []
    while True:
        # the final frame is evaluated too: processing a frame means reading
        # its features and scoring it, whether or not a jump follows
        q = net.forward(stream[cursor])
        if cursor >= n - 1:
            break
        a = greedy_action(q)
        chosen.append(a)
        cursor = min(cursor + actions.advance(a), n - 1)
        processed.append(cursor)
    presented = presented_set(processed, rtcfg.present_halfwidth, n)
    if rtcfg.budget is not None:
        presented = match_budget(presented, processed, rtcfg.budget)
    return SelectionResult.build(processed, presented, chosen, n)
