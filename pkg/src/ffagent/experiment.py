"""Train/test split, budget-matched method runs and seeded experiment
orchestration shared by the CLI and the scripts."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .baselines import online_kmeans_select, random_policy, uniform_skip
from .evaluation import DEFAULT_HITS, REFERENCES, compare_methods
from .qnet import QNetwork, QNetworkConfig
from .runtime import FeatureStream, RuntimeConfig, SelectionResult, match_budget, run_policy
from .stream import LabeledVideo, SyntheticConfig, generate_synthetic
from .trainer import TrainingConfig, TrainingLog, train


@dataclass(frozen=True)
class EvaluationConfig:
    hit_numbers: tuple[int, ...] = DEFAULT_HITS
    kmeans_clusters: int = 20
    test_fraction: float = 0.2
    exclude_short: bool = False
    reference: str = "ground_truth"
    seed: int = 0  # train/test split and baseline randomness

    def __post_init__(self):
        object.__setattr__(self, "hit_numbers", tuple(int(h) for h in self.hit_numbers))
        if not self.hit_numbers or min(self.hit_numbers) < 1:
            raise ValueError("hit_numbers must be a nonempty list of integers >= 1")
        if not 0.0 <= self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in [0, 1)")
        if self.reference not in REFERENCES:
            raise ValueError(f"reference must be one of {REFERENCES}")
        if self.kmeans_clusters < 1:
            raise ValueError("kmeans_clusters must be >= 1")


def split_dataset(videos: Sequence[LabeledVideo], test_fraction: float, seed: int):
    """Seeded shuffle into (train, test); test gets ``round(n * fraction)``
    videos, at least one when there are two or more."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(videos))
    n_test = int(round(len(videos) * test_fraction))
    if len(videos) > 1 and test_fraction > 0:
        n_test = min(max(n_test, 1), len(videos) - 1)
    test = [videos[i] for i in sorted(order[:n_test])]
    train_ = [videos[i] for i in sorted(order[n_test:])]
    return train_, test


def derive_seed(root: int, *keys: int) -> int:
    """Deterministic child seed for a task identified by ``keys``."""
    return int(np.random.SeedSequence([root, *keys]).generate_state(1)[0])


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("FFAGENT_THREADS", "1")))
    except ValueError:
        return 1


def _shrink(result: SelectionResult, budget: int, length: int) -> SelectionResult:
    presented = match_budget(result.presented, result.processed, max(budget, len(result.processed)))
    return SelectionResult(result.processed, presented, result.actions, result.processing_percentage, length)


def uniform_at_budget(length: int, budget: int, halfwidth: int) -> SelectionResult:
    """Largest stride whose presented set still reaches ``budget`` frames,
    trimmed to the budget."""
    best = None
    for stride in range(length, 0, -1):
        res = uniform_skip(length, stride, halfwidth)
        if len(res.presented) >= budget:
            best = res
            break
    return _shrink(best, budget, length)


@dataclass
class VideoRuns:
    video: LabeledVideo
    budget: int
    results: dict[str, SelectionResult]
    frames_read: dict[str, set[int]] = field(default_factory=dict)


def run_methods(video: LabeledVideo, net: QNetwork, tcfg: TrainingConfig, rtcfg: RuntimeConfig,
                ecfg: EvaluationConfig, seed: int, methods: Sequence[str] = ("ffnet", "uniform", "random", "online_kmeans")) -> VideoRuns:
    """Run every method on one video at a shared presented-frame budget.

    The budget is the agent's presented count after trimming it to the number
    of ground-truth important frames (never below its processed count).
    """
    n = len(video)
    stream = FeatureStream(video.features)
    agent = run_policy(stream, net, tcfg.actions, replace(rtcfg, budget=None))
    gt_frames = int(video.labels.sum())
    target = rtcfg.budget if rtcfg.budget is not None else gt_frames
    agent = _shrink(agent, target, n)
    budget = len(agent.presented)
    runs = VideoRuns(video, budget, {}, {"ffnet": stream.frames_read})
    hw = rtcfg.present_halfwidth
    for m in methods:
        if m == "ffnet":
            runs.results[m] = agent
        elif m == "uniform":
            runs.results[m] = uniform_at_budget(n, budget, hw)
        elif m == "random":
            runs.results[m] = _shrink(random_policy(n, tcfg.actions, hw, seed), budget, n)
        elif m == "online_kmeans":
            k = min(ecfg.kmeans_clusters, n)
            runs.results[m] = online_kmeans_select(video.features, k, hw, budget, seed)
        else:
            raise ValueError(f"unknown method {m!r}")
    return runs


def evaluate(test: Sequence[LabeledVideo], net: QNetwork, tcfg: TrainingConfig, rtcfg: RuntimeConfig,
             ecfg: EvaluationConfig, seed: int, methods=("ffnet", "uniform", "random", "online_kmeans")):
    """Returns ``(comparison rows, per-video runs)``."""
    tasks = [(v, derive_seed(seed, i)) for i, v in enumerate(test)]
    work = lambda t: run_methods(t[0], net, tcfg, rtcfg, ecfg, t[1], methods)  # noqa: E731
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        runs = list(pool.map(work, tasks))
    results = {m: [r.results[m] for r in runs] for m in methods}
    rows = compare_methods(test, results, ecfg.hit_numbers, ecfg.exclude_short, ecfg.reference)
    return rows, runs


@dataclass
class ExperimentResult:
    net: QNetwork
    log: TrainingLog
    rows: list
    runs: list[VideoRuns]

    def coverage(self, method: str, hit: int) -> float:
        return next(r.mean_coverage for r in self.rows if r.method == method and r.hit_number == hit)

    def processing(self, method: str) -> float:
        return next(r.mean_processing_pct for r in self.rows if r.method == method)


def run_experiment(scfg: SyntheticConfig, qcfg: QNetworkConfig, tcfg: TrainingConfig, rtcfg: RuntimeConfig,
                   ecfg: EvaluationConfig, progress: Callable[[str], None] | None = None) -> ExperimentResult:
    videos = generate_synthetic(scfg)
    train_set, test_set = split_dataset(videos, ecfg.test_fraction, ecfg.seed)
    if progress:
        progress(f"training on {len(train_set)} videos, testing on {len(test_set)}")
    net, log = train(train_set, qcfg, tcfg)
    rows, runs = evaluate(test_set, net, tcfg, rtcfg, ecfg, ecfg.seed)
    return ExperimentResult(net, log, rows, runs)
