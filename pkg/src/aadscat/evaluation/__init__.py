"""Splits, decision windows, frontend features and the linear probe."""
from .features import (FRONTENDS, BaselineFrontend, FeatureTrial, ScatterFrontend, SsqFrontend,
                       compute_features)
from .probe import Evaluation, Probe, ProbeConfig, ProbeError, evaluate, train_probe
from .splits import STRATEGIES, Run, SplitError, SplitPlan, TrialRef, check_plan, make_splits
from .windows import DecisionWindow, WindowBatch, WindowError, window_features, window_stats

__all__ = [
    "FRONTENDS", "BaselineFrontend", "FeatureTrial", "ScatterFrontend", "SsqFrontend", "compute_features",
    "Evaluation", "Probe", "ProbeConfig", "ProbeError", "evaluate", "train_probe", "STRATEGIES", "Run",
    "SplitError", "SplitPlan", "TrialRef", "check_plan", "make_splits", "DecisionWindow", "WindowBatch",
    "WindowError", "window_features", "window_stats",
]
