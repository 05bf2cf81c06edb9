import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from aadscat.stats import (DegenerateVarianceError, compare, compare_strategy, critical_value, dietterich_t,
                           kfold_t, paired_matrix, paired_runs, read_results)
from nullmodel import null_diffs

PAIRS = [(0.1, 0.3), (0.2, 0.0), (0.1, 0.1), (0.3, 0.1), (0.0, 0.2)]


def oracle_5x2(d):
    # per repetition the two squared deviations from the pair mean add up to (a - b)^2 / 2
    s2 = sum((a - b) ** 2 / 2.0 for a, b in d)
    return d[0][0] / math.sqrt(s2 / 5.0)


def test_hand_computed_example():
    r = dietterich_t(PAIRS)
    assert math.isclose(r.t, 0.1 / math.sqrt(0.016), rel_tol=1e-12)
    assert abs(r.t - 0.7906) < 1e-4
    assert r.df == 5 and not r.significant


def test_zero_numerator():
    d = [list(p) for p in PAIRS]
    d[0][0] = 0.0
    r = dietterich_t(d)
    assert r.t == 0.0 and not r.significant


def test_degenerate_variance():
    with pytest.raises(DegenerateVarianceError, match="degenerate variance"):
        dietterich_t([(0.2, 0.2)] * 5)
    with pytest.raises(DegenerateVarianceError):
        kfold_t([0.3] * 4)


def test_shape_and_range_checked():
    with pytest.raises(ValueError):
        dietterich_t(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        dietterich_t(np.full((5, 2), 1.5))


def test_5x2_against_oracle_on_1000_inputs():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        d = rng.uniform(-1, 1, (5, 2))
        assert abs(dietterich_t(d).t - oracle_5x2(d.tolist())) <= 1e-9 * max(1.0, abs(oracle_5x2(d.tolist())))


def test_kfold_against_scipy_on_1000_inputs():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(2, 12))
        p = rng.uniform(-1, 1, n)
        want = sps.ttest_1samp(p, 0.0)
        got = kfold_t(p)
        assert abs(got.t - want.statistic) <= 1e-9 * max(1.0, abs(want.statistic))
        assert abs(got.p_value - want.pvalue) <= 1e-9
        assert got.df == n - 1


def test_kfold_examples():
    r = kfold_t([0.6, 0.7, 0.8, 0.7, 0.7])
    assert math.isclose(statistics.stdev([0.6, 0.7, 0.8, 0.7, 0.7]), 0.07071, rel_tol=1e-4)
    assert abs(r.t - 22.14) < 0.01 and r.significant
    assert kfold_t([0.1, -0.1]).t == 0.0


def test_kfold_as_printed_drops_last_fold_from_variance():
    p = np.array([0.6, 0.7, 0.8, 0.7, 0.9])
    m = p.mean()
    ss = sum((x - m) ** 2 for x in p[:-1])
    want = m * math.sqrt(5) / math.sqrt(ss / 4)
    assert math.isclose(kfold_t(p, as_printed=True).t, want, rel_tol=1e-12)


def test_critical_values():
    assert abs(critical_value(5, 0.01) - 4.0321) < 1e-4
    assert abs(critical_value(9, 0.01) - 3.2498) < 1e-4
    assert abs(critical_value(1, 0.5) - 1.0) < 1e-4
    with pytest.raises(ValueError):
        critical_value(0, 0.01)
    with pytest.raises(ValueError):
        critical_value(5, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=10, max_size=10))
def test_sign_antisymmetry(vals):
    d = np.array(vals).reshape(5, 2)
    try:
        r = dietterich_t(d)
    except DegenerateVarianceError:
        return
    s = dietterich_t(-d)
    assert s.t == -r.t and s.significant == r.significant


def test_significance_matches_critical_value():
    d = np.array(PAIRS)
    d[0, 0] = 0.9
    r = dietterich_t(d)
    assert r.significant == (abs(r.t) > critical_value(5, 0.01))


def test_repetition_order_matters():
    d = np.array(PAIRS)
    assert dietterich_t(d).t != dietterich_t(d[::-1]).t


def test_null_rejection_rate():
    diffs = null_diffs(np.random.default_rng(2024))
    rejected = n = 0
    for d in diffs:
        try:
            rejected += dietterich_t(d).significant
            n += 1
        except DegenerateVarianceError:
            pass
    assert n >= 9_900
    assert 0.005 <= rejected / n <= 0.02


def _rows(acc, subjects=("S0", "S1"), strategy="trial_wise_5x2", frontend="x"):
    return [{"subject": s, "strategy": strategy, "repetition": i, "fold": j, "L_x": 2.0, "frontend": frontend,
             "accuracy": acc(k, i, j)} for k, s in enumerate(subjects) for i in range(5) for j in range(2)]


def test_paired_matrix_pools_subjects():
    a = _rows(lambda k, i, j: 0.8 + 0.01 * k + 0.001 * i + 0.002 * j)
    b = _rows(lambda k, i, j: 0.7)
    d = paired_matrix(a, b)
    assert np.allclose(d[2, 1], 0.1 + 0.005 + 0.002 + 0.002)
    assert np.allclose(paired_matrix(a, b, "S1")[0, 0], 0.11)
    pooled = compare(a, b)
    assert pooled["mode"] == "pooled" and pooled["result"]["df"] == 5
    per = compare(a, b, per_subject=True)
    assert set(per["results"]) == {"S0", "S1"}


def test_missing_cell_is_an_error():
    a = _rows(lambda k, i, j: 0.8)
    b = [r for r in _rows(lambda k, i, j: 0.7) if (r["repetition"], r["fold"]) != (3, 1)]
    with pytest.raises(ValueError, match="repetition 3, fold 1"):
        paired_matrix(a, b)


def test_strategies_without_5x2_layout_use_kfold():
    rng = np.random.default_rng(3)
    noise = rng.uniform(0, 0.05, 100)
    a = [{"subject": "S0", "strategy": "speaker_wise", "repetition": 0, "fold": j, "L_x": 1.0, "frontend": "x",
          "accuracy": 0.8 + noise[j]} for j in range(2)]
    b = [dict(r, accuracy=0.7) for r in a]
    out = compare_strategy(a, b, "speaker_wise")
    assert out["test"] == "kfold" and out["result"]["df"] == 1
    want = sps.ttest_1samp(paired_runs(a, b), 0.0).statistic
    assert math.isclose(out["result"]["t"], want, rel_tol=1e-12)
    assert compare_strategy(_rows(lambda k, i, j: 0.8 + 0.01 * i * j), _rows(lambda k, i, j: 0.7),
                            "trial_wise_5x2")["test"] == "5x2"


def test_read_results(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("subject,strategy,repetition,fold,L_x,frontend,accuracy\nS0,trial_wise_5x2,1,0,2.0,x,0.75\n")
    (r,) = read_results(p)
    assert r["repetition"] == 1 and r["L_x"] == 2.0 and r["accuracy"] == 0.75
