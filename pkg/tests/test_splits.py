import pytest

from aadscat.evaluation import STRATEGIES, SplitError, TrialRef, check_plan, make_splits
from aadscat.evaluation.splits import Run, SplitPlan


def corpus(n_subjects=2, n_trials=14, pairs=1):
    out = []
    for s in range(n_subjects):
        for t in range(n_trials):
            p = t % pairs
            out.append(TrialRef(f"S{s}", f"S{s}_T{t:02d}", (f"p{p}a", f"p{p}b"), (t + s) % 2))
    return out


def test_trial_wise_halves_fourteen_trials():
    trials = corpus()
    plan = make_splits(trials, "trial_wise_5x2", seed=1)
    assert len(plan.runs) == 2 * 10
    for r in plan.runs:
        assert len(r.train) == 7 and len(r.test) == 7
        assert not set(r.train) & set(r.test)
        assert all(t.startswith(r.subject) for t in r.train + r.test)
    check_plan(plan, trials)


def test_trial_wise_folds_swap_halves():
    plan = make_splits(corpus(), "trial_wise_5x2", seed=0)
    for a, b in zip(plan.runs[0::2], plan.runs[1::2]):
        assert a.train == b.test and a.test == b.train


def test_trial_wise_stratifies_on_attended():
    trials = corpus(1, 14)
    lab = {t.trial_id: t.attended for t in trials}
    for r in make_splits(trials, "trial_wise_5x2", 3).runs:
        ones = sum(lab[t] for t in r.train)
        assert ones in (3, 4)


def test_same_seed_same_plan_and_seed_matters():
    trials = corpus()
    assert make_splits(trials, "trial_wise_5x2", 5) == make_splits(trials, "trial_wise_5x2", 5)
    assert make_splits(trials, "trial_wise_5x2", 5).runs != make_splits(trials, "trial_wise_5x2", 6).runs


def test_speaker_wise_trains_on_one_pair_and_tests_on_the_other():
    trials = corpus(1, 8, pairs=2)
    plan = make_splits(trials, "speaker_wise")
    assert len(plan.runs) == 2
    spk = {t.trial_id: set(t.speaker_ids) for t in trials}
    r0, r1 = plan.runs
    assert set().union(*(spk[t] for t in r0.train)) == {"p0a", "p0b"}
    assert set().union(*(spk[t] for t in r0.test)) == {"p1a", "p1b"}
    assert r1.train == r0.test and r1.test == r0.train
    check_plan(plan, trials)


def test_speaker_wise_needs_two_pairs():
    with pytest.raises(SplitError, match="two disjoint speaker groups"):
        make_splits(corpus(1, 8, pairs=1), "speaker_wise")


def test_cross_subject_splits():
    trials = corpus(4, 4, pairs=2)
    plan = make_splits(trials, "cross_subject_5x2")
    assert len(plan.runs) == 10
    subj = {t.trial_id: t.subject_id for t in trials}
    for r in plan.runs:
        assert not {subj[t] for t in r.train} & {subj[t] for t in r.test}
    check_plan(plan, trials)
    plan = make_splits(trials, "cross_subject_speaker")
    assert len(plan.runs) == 5 * 2 * 2
    check_plan(plan, trials)
    with pytest.raises(SplitError):
        make_splits(corpus(1, 4), "cross_subject_5x2")


def test_full_shuffle_is_flagged_leaky():
    plan = make_splits(corpus(), "full_shuffle")
    assert plan.leaky and len(plan.runs) == 20
    assert all(r.window_level for r in plan.runs)


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_every_strategy_passes_its_own_check(strategy):
    trials = corpus(4, 8, pairs=2)
    check_plan(make_splits(trials, strategy, 2), trials)


def test_check_plan_catches_leakage():
    trials = corpus(2, 4, pairs=2)
    leak = SplitPlan("trial_wise_5x2", [Run(0, 0, ("S0_T00", "S0_T01"), ("S0_T01",), "S0")], 0)
    with pytest.raises(SplitError, match="both train and test"):
        check_plan(leak, trials)
    spk = SplitPlan("speaker_wise", [Run(0, 0, ("S0_T00",), ("S0_T02",), "S0")], 0)
    with pytest.raises(SplitError, match="speakers"):
        check_plan(spk, trials)
    subj = SplitPlan("cross_subject_5x2", [Run(0, 0, ("S0_T00",), ("S0_T01",))], 0)
    with pytest.raises(SplitError, match="subjects"):
        check_plan(subj, trials)


def test_bad_inputs():
    with pytest.raises(SplitError, match="unknown strategy"):
        make_splits(corpus(), "random")
    with pytest.raises(SplitError, match="empty"):
        make_splits([], "trial_wise_5x2")
    with pytest.raises(SplitError, match="duplicate"):
        make_splits(corpus(1, 2) * 2, "trial_wise_5x2")
    with pytest.raises(SplitError, match="fewer than two"):
        make_splits(corpus(1, 1), "trial_wise_5x2")
