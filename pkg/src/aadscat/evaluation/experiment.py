"""Running a split plan: window every run, train a probe, score the test side."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .features import FeatureTrial
from .probe import ProbeConfig, evaluate, train_probe
from .splits import Run, SplitPlan
from .windows import WindowBatch, window_stats

WORKERS_ENV = "AADSCAT_WORKERS"


@dataclass(frozen=True)
class ResultRow:
    subject: str
    strategy: str
    repetition: int
    fold: int
    L_x: float
    frontend: str
    accuracy: float

    def as_dict(self) -> dict:
        return {"subject": self.subject, "strategy": self.strategy, "repetition": self.repetition,
                "fold": self.fold, "L_x": self.L_x, "frontend": self.frontend, "accuracy": self.accuracy}


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


class WindowCache:
    """Window statistics per (trial, L_x, stride), computed once."""

    def __init__(self, features: Dict[str, FeatureTrial]):
        self.features = features
        self._cache: Dict[tuple, WindowBatch] = {}

    def get(self, trial_id: str, L_x: float, stride: float) -> WindowBatch:
        key = (trial_id, L_x, stride)
        if key not in self._cache:
            self._cache[key] = window_stats(self.features[trial_id], L_x, stride)
        return self._cache[key]

    def batch(self, trial_ids, L_x: float, stride: float) -> WindowBatch:
        return WindowBatch.concat([self.get(t, L_x, stride) for t in trial_ids])


def _run_one(cache: WindowCache, plan: SplitPlan, run: Run, L_x: float, train_stride: float,
             cfg: ProbeConfig, shuffle_labels: bool) -> float:
    if run.window_level:
        windows = cache.batch(run.train, L_x, L_x)
        rng = np.random.default_rng(np.random.SeedSequence(plan.seed, spawn_key=(run.repetition,)))
        perm = rng.permutation(len(windows))
        half = len(windows) // 2
        idx = [perm[:half], perm[half:]]
        train, test = windows.subset(idx[run.fold]), windows.subset(idx[1 - run.fold])
    else:
        train = cache.batch(run.train, L_x, train_stride)
        test = cache.batch(run.test, L_x, L_x)
    probe = train_probe(train, cfg, shuffle_labels=shuffle_labels)
    return evaluate(probe, test).accuracy


def run_plan(features: Dict[str, FeatureTrial], plan: SplitPlan, L_x: float, frontend: str,
             cfg: ProbeConfig = ProbeConfig(), train_stride: Optional[float] = None,
             shuffle_labels: bool = False, workers: Optional[int] = None,
             cache: Optional[WindowCache] = None) -> List[ResultRow]:
    """Accuracy of every run of ``plan``. Rows come back in plan order.

    Pass a shared ``cache`` to reuse window statistics across calls; by
    default each subject's windows are computed once and released after its
    runs.

    Training windows overlap (stride ``L_x / 4`` by default); test windows do
    not (stride ``L_x``).
    """
    train_stride = L_x / 4 if train_stride is None else train_stride
    workers = workers or default_workers()
    # Runs that touch the same trials (one subject's runs, or all runs of a
    # cross-subject plan) share one window cache, filled up front so worker
    # threads only read it and dropped before the next group.
    groups: Dict[Optional[str], List[int]] = {}
    for i, run in enumerate(plan.runs):
        groups.setdefault(run.subject, []).append(i)
    accs: Dict[int, float] = {}
    for idx in groups.values():
        group_cache = cache or WindowCache(features)
        for i in idx:
            run = plan.runs[i]
            for t in set(run.train) | set(run.test):
                group_cache.get(t, L_x, L_x)
                if not run.window_level:
                    group_cache.get(t, L_x, train_stride)

        def job(i, group_cache=group_cache):
            seed_cfg = ProbeConfig(**{**cfg.__dict__, "seed": cfg.seed + i}) if shuffle_labels else cfg
            return _run_one(group_cache, plan, plan.runs[i], L_x, train_stride, seed_cfg, shuffle_labels)

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                accs.update(zip(idx, pool.map(job, idx)))
        else:
            accs.update((i, job(i)) for i in idx)
    return [ResultRow(run.subject or "all", plan.strategy, run.repetition, run.fold, L_x, frontend, accs[i])
            for i, run in enumerate(plan.runs)]
