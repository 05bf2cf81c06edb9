"""Paired t-tests for comparing two classifiers over cross-validation runs.

Difference scores are "classifier A minus classifier B". Both tests are
two-sided at level ``alpha`` (default 0.01).
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Sequence

import numpy as np
from scipy import stats as sps

ALPHA = 0.01


class DegenerateVarianceError(ValueError):
    """The variance estimate is zero, so the t statistic is undefined."""


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    alpha: float
    critical: float
    significant: bool
    p_value: float

    def as_dict(self) -> dict:
        return asdict(self)


def critical_value(df: float, alpha: float = ALPHA) -> float:
    """Two-sided Student-t threshold: ``P(|T_df| > c) = alpha``."""
    if not df >= 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(sps.t.ppf(1.0 - alpha / 2.0, df))


def _result(t: float, df: int, alpha: float) -> TTestResult:
    c = critical_value(df, alpha)
    p = float(2.0 * sps.t.sf(abs(t), df))
    return TTestResult(float(t), int(df), float(alpha), c, bool(abs(t) > c), p)


def as_paired_diffs(diffs) -> np.ndarray:
    d = np.asarray(diffs, dtype=np.float64)
    if d.shape != (5, 2):
        raise ValueError(f"expected a 5 x 2 matrix of difference scores, got shape {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(np.abs(d) > 1):
        raise ValueError("difference scores must be finite and lie in [-1, 1]")
    return d


def dietterich_t(diffs, alpha: float = ALPHA) -> TTestResult:
    """5x2 cv paired t-test.

    ``diffs[i, j]`` is the difference on repetition ``i``, fold ``j``. The
    numerator is ``diffs[0, 0]`` only, so the result depends on the order of
    the repetitions; callers must keep the order in which they were run.
    """
    d = as_paired_diffs(diffs)
    mean = d.mean(axis=1, keepdims=True)
    var = np.sum((d - mean) ** 2) / 5.0
    if var <= 0.0:
        raise DegenerateVarianceError("degenerate variance: every repetition has two identical fold scores")
    return _result(d[0, 0] / math.sqrt(var), 5, alpha)


def kfold_t(scores: Sequence[float], alpha: float = ALPHA, as_printed: bool = False) -> TTestResult:
    """k-fold cv paired t-test with ``df = n - 1``.

    The default uses the unbiased sample variance over all ``n`` folds. With
    ``as_printed=True`` the squared deviations of the first ``n - 1`` folds only
    are summed (the mean still uses all folds).
    """
    p = np.asarray(scores, dtype=np.float64).ravel()
    n = p.size
    if n < 2:
        raise ValueError("need at least two fold scores")
    mean = p.mean()
    dev = (p - mean) ** 2
    ss = dev[:-1].sum() if as_printed else dev.sum()
    var = ss / (n - 1)
    if var <= 0.0:
        raise DegenerateVarianceError("degenerate variance: all fold scores are equal")
    return _result(mean * math.sqrt(n) / math.sqrt(var), n - 1, alpha)


# ------------------------------------------------------------ result tables

RESULT_FIELDS = ("subject", "strategy", "repetition", "fold", "L_x", "frontend", "accuracy")


def read_results(path) -> List[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["repetition"] = int(r["repetition"])
        r["fold"] = int(r["fold"])
        r["L_x"] = float(r["L_x"])
        r["accuracy"] = float(r["accuracy"])
    return rows


def paired_matrix(rows_a: Iterable[dict], rows_b: Iterable[dict], subject=None) -> np.ndarray:
    """5 x 2 difference matrix A - B, matched on (subject, repetition, fold).

    With ``subject=None`` every subject's differences are averaged per cell
    (pooled mode); otherwise only that subject's rows are used.
    """
    def cells(rows):
        acc = defaultdict(list)
        for r in rows:
            if subject is None or r["subject"] == subject:
                acc[(r["repetition"], r["fold"])].append((r["subject"], r["accuracy"]))
        return acc

    a, b = cells(rows_a), cells(rows_b)
    d = np.full((5, 2), np.nan)
    for i in range(5):
        for j in range(2):
            ra, rb = dict(a.get((i, j), [])), dict(b.get((i, j), []))
            common = sorted(set(ra) & set(rb))
            if not common:
                raise ValueError(f"no matching results for repetition {i}, fold {j}")
            d[i, j] = np.mean([ra[s] - rb[s] for s in common])
    return d


def compare(rows_a: List[dict], rows_b: List[dict], alpha: float = ALPHA, per_subject: bool = False) -> Dict:
    """5x2 test of A against B, pooled over subjects or one test per subject."""
    if not per_subject:
        return {"mode": "pooled", "result": dietterich_t(paired_matrix(rows_a, rows_b), alpha).as_dict()}
    out = {}
    for s in sorted({r["subject"] for r in rows_a} & {r["subject"] for r in rows_b}):
        try:
            out[s] = dietterich_t(paired_matrix(rows_a, rows_b, s), alpha).as_dict()
        except DegenerateVarianceError as exc:
            out[s] = {"error": str(exc)}
    return {"mode": "per_subject", "results": out}


FIVE_BY_TWO = ("full_shuffle", "trial_wise_5x2", "cross_subject_5x2")


def paired_runs(rows_a: Iterable[dict], rows_b: Iterable[dict], subject=None) -> np.ndarray:
    """Differences A - B per (repetition, fold), in run order, averaged over matched subjects."""
    def cells(rows):
        acc = defaultdict(dict)
        for r in rows:
            if subject is None or r["subject"] == subject:
                acc[(r["repetition"], r["fold"])][r["subject"]] = r["accuracy"]
        return acc

    a, b = cells(rows_a), cells(rows_b)
    out = []
    for key in sorted(set(a) & set(b)):
        common = sorted(set(a[key]) & set(b[key]))
        if common:
            out.append(np.mean([a[key][s] - b[key][s] for s in common]))
    if not out:
        raise ValueError("no matching results")
    return np.asarray(out)


def compare_strategy(rows_a: List[dict], rows_b: List[dict], strategy: str, alpha: float = ALPHA,
                     per_subject: bool = False) -> Dict:
    """The 5x2 test for strategies with a 5x2 layout, the k-fold test otherwise."""
    if strategy in FIVE_BY_TWO:
        out = compare(rows_a, rows_b, alpha, per_subject)
        out["test"] = "5x2"
        return out
    if not per_subject:
        return {"mode": "pooled", "test": "kfold", "result": kfold_t(paired_runs(rows_a, rows_b), alpha).as_dict()}
    res = {}
    for s in sorted({r["subject"] for r in rows_a} & {r["subject"] for r in rows_b}):
        try:
            res[s] = kfold_t(paired_runs(rows_a, rows_b, s), alpha).as_dict()
        except ValueError as exc:
            res[s] = {"error": str(exc)}
    return {"mode": "per_subject", "test": "kfold", "results": res}
