"""Segment-level coverage, hit-number sweeps and method comparison tables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .runtime import SelectionResult
from .stream import LabeledVideo, Segment, derive_segments

DEFAULT_HITS = tuple(range(1, 21))
REFERENCES = ("ground_truth", "selection")


def segment_coverage(segments: Sequence[Segment], selected, hit_number: int,
                     exclude_short: bool = False) -> float:
    """Fraction of ground-truth segments holding at least ``hit_number``
    selected frames.

    Segments shorter than ``hit_number`` can never be covered; they stay in the
    denominator unless ``exclude_short`` is set. With no (eligible) segments
    the coverage is vacuously 1.0.
    """
    if hit_number < 1:
        raise ValueError("hit_number must be >= 1")
    if exclude_short:
        segments = [s for s in segments if len(s) >= hit_number]
    if not segments:
        return 1.0
    sel = np.unique(np.asarray(list(selected), dtype=np.int64))
    covered = 0
    for s in segments:
        inside = np.searchsorted(sel, s.end, side="right") - np.searchsorted(sel, s.start, side="left")
        covered += inside >= hit_number
    return covered / len(segments)


def selection_precision(labels, selected, hit_number: int) -> float:
    """Alternative reading: fraction of the method's own segments (maximal runs
    of selected frames) that contain at least ``hit_number`` important frames."""
    labels = np.asarray(labels)
    mask = np.zeros(len(labels), dtype=np.int8)
    mask[np.asarray(list(selected), dtype=np.int64)] = 1
    if not mask.any():
        return 0.0
    runs = derive_segments(mask)
    hits = sum(int(labels[r.start:r.end + 1].sum()) >= hit_number for r in runs)
    return hits / len(runs)


@dataclass
class CoverageCurve:
    method: str
    points: list[tuple[int, float]]
    # dropping short segments changes the denominator per hit number, so the
    # curve is only guaranteed non-increasing under the default reading
    exclude_short: bool = False

    def __post_init__(self):
        values = [c for _, c in self.points]
        if not self.exclude_short and any(b > a for a, b in zip(values, values[1:])):
            raise ValueError("coverage must be non-increasing in hit number")

    def at(self, hit_number: int) -> float:
        return dict(self.points)[hit_number]


def coverage_curve(segments: Sequence[Segment], selected, hit_range: Sequence[int] = DEFAULT_HITS,
                   method: str = "", exclude_short: bool = False) -> CoverageCurve:
    hits = sorted(hit_range)
    points = [(h, segment_coverage(segments, selected, h, exclude_short)) for h in hits]
    return CoverageCurve(method, points, exclude_short)


@dataclass
class ComparisonRow:
    method: str
    hit_number: int
    mean_coverage: float
    mean_processing_pct: float


def compare_methods(dataset: Sequence[LabeledVideo], results: Mapping[str, Sequence[SelectionResult]],
                    hit_range: Sequence[int] = DEFAULT_HITS, exclude_short: bool = False,
                    reference: str = "ground_truth") -> list[ComparisonRow]:
    """Unweighted per-video means of coverage and of processing percentage.

    Videos without ground-truth segments are skipped, as are videos whose
    segments are all shorter than the hit number when ``exclude_short`` is set.

    ``reference="selection"`` scores with :func:`selection_precision` instead.
    """
    if reference not in REFERENCES:
        raise ValueError(f"reference must be one of {REFERENCES}")
    rows = []
    for method, per_video in results.items():
        if len(per_video) != len(dataset):
            missing = dataset[len(per_video)].id if len(per_video) < len(dataset) else "<extra>"
            raise KeyError(f"method {method!r} has no result for video {missing!r}")
        scored = [(v, r) for v, r in zip(dataset, per_video) if v.ground_truth()]
        pct = float(np.mean([r.processing_percentage for r in per_video]))
        for h in sorted(hit_range):
            if reference == "ground_truth":
                eligible = [(v, r) for v, r in scored
                            if not exclude_short or any(len(s) >= h for s in v.ground_truth())]
                cov = [segment_coverage(v.ground_truth(), r.presented, h, exclude_short) for v, r in eligible]
            else:
                cov = [selection_precision(v.labels, r.presented, h) for v, r in scored]
            rows.append(ComparisonRow(method, h, float(np.mean(cov)) if cov else float("nan"), pct))
    return rows


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "hit_number", "mean_coverage", "mean_processing_pct"])
    for r in rows:
        writer.writerow([r.method, r.hit_number, repr(r.mean_coverage), repr(r.mean_processing_pct)])
    return buf.getvalue()


def write_comparison_csv(rows: Sequence[ComparisonRow], path) -> None:
    Path(path).write_text(comparison_csv(rows))


def read_comparison_csv(path) -> list[ComparisonRow]:
    with open(path, newline="") as fh:
        return [
            ComparisonRow(row["method"], int(row["hit_number"]), float(row["mean_coverage"]),
                          float(row["mean_processing_pct"]))
            for row in csv.DictReader(fh)
        ]
