"""Train/test partitions of a corpus for the five evaluation strategies.

Every strategy works on lightweight :class:`TrialRef` records, so plans can
be built from a manifest without loading any signal.

* ``full_shuffle``: windows of all trials are shuffled and halved (5x2). Leaky
  by design, because neighbouring windows of one trial land on both sides.
* ``trial_wise_5x2``: per subject, trials are halved (stratified by attended
  index), 5 repetitions x 2 folds.
* ``speaker_wise``: per subject, trials are grouped by their speaker set; the
  groups are split into two sides, giving exactly two runs.
* ``cross_subject_5x2``: subjects are halved, 5 repetitions x 2 folds.
* ``cross_subject_speaker``: subjects are halved and speaker groups are split
  into two sides; each repetition trains on one subject half with one
  speaker side and tests on the other subject half with the other side,
  giving 4 runs per repetition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

STRATEGIES = ("full_shuffle", "trial_wise_5x2", "speaker_wise", "cross_subject_5x2", "cross_subject_speaker")
REPETITIONS = 5


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class TrialRef:
    subject_id: str
    trial_id: str
    speaker_ids: Tuple[str, ...]
    attended: int = 0

    @classmethod
    def of(cls, record) -> "TrialRef":
        return cls(record.subject_id, record.trial_id, tuple(record.speaker_ids), int(record.attended))


@dataclass(frozen=True)
class Run:
    repetition: int
    fold: int
    train: Tuple[str, ...]
    test: Tuple[str, ...]
    subject: Optional[str] = None
    window_level: bool = False  # full_shuffle: split windows, not trials


@dataclass
class SplitPlan:
    strategy: str
    runs: List[Run]
    seed: int
    leaky: bool = False
    notes: Dict[str, str] = field(default_factory=dict)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _halve(items: Sequence, rng: np.random.Generator, strata: Optional[Sequence[int]] = None):
    """Random halves of ``items``; with ``strata`` each stratum is halved separately."""
    items = list(items)
    strata = [0] * len(items) if strata is None else list(strata)
    a, b = [], []
    extra_to_a = True
    for s in sorted(set(strata)):
        group = [it for it, st in zip(items, strata) if st == s]
        perm = [group[i] for i in rng.permutation(len(group))]
        k = len(perm) // 2
        if len(perm) % 2:
            k += 1 if extra_to_a else 0
            extra_to_a = not extra_to_a
        a += perm[:k]
        b += perm[k:]
    return sorted(a), sorted(b)


def _by_subject(trials: Sequence[TrialRef]) -> Dict[str, List[TrialRef]]:
    out: Dict[str, List[TrialRef]] = {}
    for t in sorted(trials, key=lambda t: (t.subject_id, t.trial_id)):
        out.setdefault(t.subject_id, []).append(t)
    return out


def speaker_groups(trials: Sequence[TrialRef]) -> List[frozenset]:
    """Distinct speaker sets, checked to be pairwise disjoint."""
    groups = sorted({frozenset(t.speaker_ids) for t in trials}, key=lambda g: sorted(g))
    for i, g in enumerate(groups):
        for h in groups[i + 1:]:
            if g & h:
                raise SplitError(f"speaker sets {sorted(g)} and {sorted(h)} overlap; "
                                 "speaker-wise splits need disjoint speaker groups")
    return groups


def _speaker_sides(trials: Sequence[TrialRef]) -> Tuple[set, set]:
    groups = speaker_groups(trials)
    if len(groups) < 2:
        raise SplitError("speaker-wise splits need at least two disjoint speaker groups; "
                         f"the corpus has {len(groups)}")
    side_a = set().union(*groups[0::2])
    side_b = set().union(*groups[1::2])
    return side_a, side_b


def make_splits(trials: Sequence[TrialRef], strategy: str, seed: int = 0) -> SplitPlan:
    """Deterministic split plan for ``strategy``."""
    if strategy not in STRATEGIES:
        raise SplitError(f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}")
    trials = list(trials)
    if not trials:
        raise SplitError("corpus is empty")
    ids = [t.trial_id for t in trials]
    if len(set(ids)) != len(ids):
        raise SplitError("duplicate trial ids")
    subjects = _by_subject(trials)
    runs: List[Run] = []

    if strategy == "full_shuffle":
        for si, (s, ts) in enumerate(subjects.items()):
            all_ids = tuple(t.trial_id for t in ts)
            for rep in range(REPETITIONS):
                for fold in range(2):
                    runs.append(Run(rep, fold, all_ids, all_ids, s, window_level=True))
        return SplitPlan(strategy, runs, seed, leaky=True,
                         notes={"leakage": "windows of one trial appear in both train and test"})

    if strategy == "trial_wise_5x2":
        for si, (s, ts) in enumerate(subjects.items()):
            if len(ts) < 2:
                raise SplitError(f"subject {s} has fewer than two trials")
            for rep in range(REPETITIONS):
                a, b = _halve([t.trial_id for t in ts], _rng(seed, si, rep), [t.attended for t in ts])
                runs.append(Run(rep, 0, tuple(a), tuple(b), s))
                runs.append(Run(rep, 1, tuple(b), tuple(a), s))
        return SplitPlan(strategy, runs, seed)

    if strategy == "speaker_wise":
        for s, ts in subjects.items():
            side_a, side_b = _speaker_sides(ts)
            a = tuple(t.trial_id for t in ts if set(t.speaker_ids) <= side_a)
            b = tuple(t.trial_id for t in ts if set(t.speaker_ids) <= side_b)
            runs.append(Run(0, 0, a, b, s))
            runs.append(Run(0, 1, b, a, s))
        return SplitPlan(strategy, runs, seed)

    names = list(subjects)
    if len(names) < 2:
        raise SplitError("cross-subject splits need at least two subjects")

    if strategy == "cross_subject_5x2":
        for rep in range(REPETITIONS):
            a, b = _halve(names, _rng(seed, rep))
            ta = tuple(t.trial_id for s in a for t in subjects[s])
            tb = tuple(t.trial_id for s in b for t in subjects[s])
            runs.append(Run(rep, 0, ta, tb))
            runs.append(Run(rep, 1, tb, ta))
        return SplitPlan(strategy, runs, seed)

    # cross_subject_speaker
    side = _speaker_sides(trials)
    for rep in range(REPETITIONS):
        halves = _halve(names, _rng(seed, rep))
        fold = 0
        for h in (0, 1):
            for sp in (0, 1):
                train = tuple(t.trial_id for s in halves[h] for t in subjects[s] if set(t.speaker_ids) <= side[sp])
                test = tuple(t.trial_id for s in halves[1 - h] for t in subjects[s]
                             if set(t.speaker_ids) <= side[1 - sp])
                runs.append(Run(rep, fold, train, test))
                fold += 1
    return SplitPlan(strategy, runs, seed,
                     notes={"enumeration": "2 subject halves x 2 speaker sides per repetition"})


def check_plan(plan: SplitPlan, trials: Sequence[TrialRef]) -> None:
    """Structural leakage checks; raises :class:`SplitError` on any violation."""
    by_id = {t.trial_id: t for t in trials}
    for r in plan.runs:
        if not r.train or not r.test:
            raise SplitError(f"run {r.repetition}/{r.fold}: empty train or test set")
        if r.window_level:
            continue
        if set(r.train) & set(r.test):
            raise SplitError(f"run {r.repetition}/{r.fold}: trials in both train and test")
        tr = [by_id[i] for i in r.train]
        te = [by_id[i] for i in r.test]
        if plan.strategy in ("speaker_wise", "cross_subject_speaker"):
            spk_tr = {s for t in tr for s in t.speaker_ids}
            spk_te = {s for t in te for s in t.speaker_ids}
            if spk_tr & spk_te:
                raise SplitError(f"run {r.repetition}/{r.fold}: speakers {sorted(spk_tr & spk_te)} on both sides")
        if plan.strategy in ("cross_subject_5x2", "cross_subject_speaker"):
            sub_tr = {t.subject_id for t in tr}
            sub_te = {t.subject_id for t in te}
            if sub_tr & sub_te:
                raise SplitError(f"run {r.repetition}/{r.fold}: subjects on both sides")
        if plan.strategy in ("trial_wise_5x2", "speaker_wise"):
            if {t.subject_id for t in tr + te} != {r.subject}:
                raise SplitError(f"run {r.repetition}/{r.fold}: trials from another subject")
