"""Labeled feature streams: containers, ground-truth segments, disk I/O and a
synthetic two-cluster generator."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    """Base class for malformed dataset files."""


class MissingFileError(DatasetError):
    pass


class RowLengthError(DatasetError):
    pass


class LabelError(DatasetError):
    pass


class DimensionMismatchError(DatasetError):
    pass


class SegmentError(DatasetError):
    pass


@dataclass(frozen=True)
class Segment:
    """Inclusive frame range ``[start, end]``."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid segment ({self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start + 1


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabeledVideo:
    id: str
    features: np.ndarray  # (n_frames, D) float64
    labels: np.ndarray  # (n_frames,) int8 in {0, 1}
    segments: tuple[Segment, ...] | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if feats.ndim != 2 or feats.shape[1] < 1:
            raise ValueError(f"video {self.id!r}: features must be (n_frames, D) with D >= 1")
        if labels.ndim != 1 or len(labels) != len(feats) or len(labels) < 1:
            raise ValueError(f"video {self.id!r}: need len(frames) == len(labels) >= 1")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError(f"video {self.id!r}: non-binary label")
        if not np.isfinite(feats).all():
            raise ValueError(f"video {self.id!r}: non-finite feature value")
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int8)))
        if self.segments is not None:
            segs = tuple(self.segments)
            _check_segments(segs, len(labels), self.id)
            object.__setattr__(self, "segments", segs)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def ground_truth(self) -> list[Segment]:
        """Explicit segments if the video carries them, else maximal label runs."""
        if self.segments is not None:
            return list(self.segments)
        return derive_segments(self.labels)

    def __eq__(self, other):
        if not isinstance(other, LabeledVideo):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.segments == other.segments
        )


def _check_segments(segs: Sequence[Segment], length: int, where: str) -> None:
    prev_end = -1
    for s in segs:
        if s.end >= length:
            raise SegmentError(f"{where}: segment ({s.start}, {s.end}) beyond video length {length}")
        if s.start <= prev_end:
            raise SegmentError(f"{where}: segments must be sorted and disjoint")
        prev_end = s.end


def derive_segments(labels) -> list[Segment]:
    """Maximal runs of consecutive 1-labels."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty label sequence")
    padded = np.concatenate(([0], (labels == 1).astype(np.int8), [0]))
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return [Segment(int(s), int(e)) for s, e in zip(starts, ends)]


@dataclass(frozen=True)
class SyntheticConfig:
    num_videos: int = 25
    frames_per_video: int = 500
    feature_dim: int = 16
    num_important_segments: int = 5
    segment_length_range: tuple[int, int] = (15, 30)
    feature_separation: float = 2.0
    noise_std: float = 0.3
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.segment_length_range
        if self.num_videos < 0 or self.feature_dim < 1 or self.frames_per_video < 1:
            raise ValueError("num_videos >= 0, feature_dim >= 1 and frames_per_video >= 1 required")
        if not 1 <= lo <= hi:
            raise ValueError("segment_length_range must satisfy 1 <= min <= max")
        if self.noise_std < 0 or self.feature_separation <= 0:
            raise ValueError("need noise_std >= 0 and feature_separation > 0")


def cluster_centers(feature_dim: int, separation: float, rng: np.random.Generator):
    """Unimportant and important cluster centers exactly ``separation`` apart."""
    u_unimp = rng.normal(size=feature_dim)
    direction = rng.normal(size=feature_dim)
    direction /= np.linalg.norm(direction)
    return u_unimp, u_unimp + separation * direction


def _place_segments(n_frames: int, lengths: np.ndarray, rng: np.random.Generator) -> list[Segment]:
    # Runs need a gap of at least one frame between them or they merge.
    n = len(lengths)
    slack = n_frames - int(lengths.sum()) - max(n - 1, 0)
    if slack < 0:
        raise ValueError("segments do not fit")
    # Uniform composition of the slack into n + 1 gaps (stars and bars).
    cuts = np.sort(rng.choice(slack + n, size=n, replace=False))
    gaps = np.diff(np.concatenate(([-1], cuts))) - 1
    segs, pos = [], 0
    for j in range(n):
        pos += int(gaps[j]) + (1 if j > 0 else 0)
        segs.append(Segment(pos, pos + int(lengths[j]) - 1))
        pos += int(lengths[j])
    return segs


def generate_synthetic(config: SyntheticConfig) -> list[LabeledVideo]:
    lo, hi = config.segment_length_range
    n_seg = config.num_important_segments
    if n_seg * hi > config.frames_per_video or n_seg * lo + n_seg - 1 > config.frames_per_video:
        raise ValueError("segments do not fit")
    rng = np.random.default_rng(config.seed)
    u_unimp, u_imp = cluster_centers(config.feature_dim, config.feature_separation, rng)
    videos = []
    for v in range(config.num_videos):
        lengths = rng.integers(lo, hi + 1, size=n_seg)
        labels = np.zeros(config.frames_per_video, dtype=np.int8)
        for s in _place_segments(config.frames_per_video, lengths, rng):
            labels[s.start:s.end + 1] = 1
        centers = np.where(labels[:, None] == 1, u_imp, u_unimp)
        noise = rng.normal(scale=config.noise_std, size=centers.shape) if config.noise_std > 0 else 0.0
        videos.append(LabeledVideo(f"synthetic_{v:03d}", centers + noise, labels))
    return videos


# ---------------------------------------------------------------------------
# Disk format: JSON manifest, CSV features, one-label-per-line text, optional
# "start,end" segment CSV.


def save_dataset(videos: Sequence[LabeledVideo], out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not videos:
        raise ValueError("cannot save an empty dataset")
    dim = videos[0].feature_dim
    entries = []
    for v in videos:
        if v.feature_dim != dim:
            raise DimensionMismatchError(f"video {v.id!r} has dimension {v.feature_dim}, expected {dim}")
        feat_name, label_name = f"{v.id}.features.csv", f"{v.id}.labels.txt"
        # %.17g round-trips float64 exactly.
        np.savetxt(out_dir / feat_name, v.features, fmt="%.17g", delimiter=",")
        (out_dir / label_name).write_text("".join(f"{int(x)}\n" for x in v.labels))
        entry = {"id": v.id, "features": feat_name, "labels": label_name}
        if v.segments is not None:
            seg_name = f"{v.id}.segments.csv"
            (out_dir / seg_name).write_text("".join(f"{s.start},{s.end}\n" for s in v.segments))
            entry["segments"] = seg_name
        entries.append(entry)
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"feature_dim": dim, "videos": entries}, indent=2) + "\n")
    return manifest


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise MissingFileError(f"{path}: file not found")
    return path.read_text().splitlines()


def read_features(path, feature_dim: int | None = None) -> np.ndarray:
    path = Path(path)
    rows = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if feature_dim is None:
            feature_dim = len(parts)
        if len(parts) != feature_dim:
            raise RowLengthError(f"{path}:{lineno}: expected {feature_dim} values, got {len(parts)}")
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: non-numeric feature value") from None
        if not all(np.isfinite(row)):
            raise DatasetError(f"{path}:{lineno}: non-finite feature value")
        rows.append(row)
    if not rows:
        raise DatasetError(f"{path}: no feature rows")
    return np.array(rows, dtype=np.float64)


def read_labels(path) -> np.ndarray:
    path = Path(path)
    labels = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        tok = line.strip()
        if tok not in ("0", "1"):
            raise LabelError(f"{path}:{lineno}: non-binary label {tok!r}")
        labels.append(int(tok))
    return np.array(labels, dtype=np.int8)


def read_segments(path) -> list[Segment]:
    path = Path(path)
    segs = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            start, end = (int(x) for x in line.split(","))
            segs.append(Segment(start, end))
        except ValueError:
            raise SegmentError(f"{path}:{lineno}: malformed segment row {line!r}") from None
    return segs


def load_dataset(manifest_path) -> list[LabeledVideo]:
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    if not manifest_path.is_file():
        raise MissingFileError(f"{manifest_path}: file not found")
    try:
        manifest = json.loads(manifest_path.read_text())
        dim = int(manifest["feature_dim"])
        entries = manifest["videos"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{manifest_path}: malformed manifest ({exc})") from None
    base = manifest_path.parent
    videos = []
    for entry in entries:
        feat_path = base / entry["features"]
        label_path = base / entry["labels"]
        feats = read_features(feat_path)
        if feats.shape[1] != dim:
            raise DimensionMismatchError(
                f"{feat_path}:1: dimension mismatch, manifest declares {dim}, file has {feats.shape[1]}"
            )
        labels = read_labels(label_path)
        if len(labels) != len(feats):
            raise RowLengthError(
                f"{label_path}:{len(labels)}: {len(labels)} labels but {len(feats)} feature rows in {feat_path}"
            )
        segs = None
        if entry.get("segments"):
            seg_path = base / entry["segments"]
            segs = read_segments(seg_path)
            _check_segments(segs, len(labels), str(seg_path))
        videos.append(LabeledVideo(str(entry["id"]), feats, labels, segs))
    return videos
