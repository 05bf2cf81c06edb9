import math

import pytest
from hypothesis import given, settings, strategies as st

from aadscat.scattering import ScatterConfig, enumerate_paths, estimate_cost, lag_seconds
from aadscat.scattering.cost import fft_flops, rfft_flops
from aadscat.scattering.paths import admissible


def counts(Q, F_o, rate):
    return enumerate_paths(ScatterConfig.from_rate(Q, F_o, rate)).counts


def test_single_order_zero_path():
    for Q in (1, 2, 4, 8):
        assert counts(Q, 8.0, 128.0)[0] == 1


def test_paths_are_ordered():
    paths = list(enumerate_paths(ScatterConfig.from_rate(8, 8.0, 128.0)))
    orders = [p.order for p in paths]
    assert orders == sorted(orders)
    l1 = [p.lambda1 for p in paths if p.order == 1]
    assert l1 == sorted(l1, reverse=True)
    second = [(p.lambda1, p.lambda2) for p in paths if p.order == 2]
    assert second == sorted(second, key=lambda t: (-t[0], -t[1]))


def test_second_order_needs_coarser_wavelet():
    assert admissible(1, 2)
    assert not admissible(2, 2)
    assert not admissible(3, 2)


def test_labels_are_unique():
    labels = [p.label() for p in enumerate_paths(ScatterConfig.from_rate(8, 8.0, 16384.0))]
    assert len(labels) == len(set(labels))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([1, 2, 4, 8]), st.sampled_from([8.0, 16.0, 32.0, 64.0]))
def test_first_order_count_grows_with_Q_and_J(Q, F_o):
    # more octaves (lower F_o) never remove first-order paths
    n_here = counts(Q, F_o, 128.0)[1]
    if F_o > 8.0:
        assert counts(Q, F_o / 2, 128.0)[1] >= n_here


def test_lag_is_four_over_Fo():
    assert lag_seconds(8.0) == 0.5
    assert lag_seconds(64.0) == 0.0625
    # 64 EEG samples at 128 Hz
    assert lag_seconds(8.0) * 128 == 64


def test_fft_flop_units():
    assert fft_flops(1) == 0.0
    assert fft_flops(8) == 5 * 8 * 3
    assert rfft_flops(8) == fft_flops(8) / 2


def test_cost_report_fields():
    rep = estimate_cost(ScatterConfig.from_rate(8, 8.0, 128.0))
    assert rep.channels == (1, 22, 27, 50)
    assert rep.total_channels == 50
    assert rep.lag_seconds == 0.5
    assert math.isclose(sum(rep.breakdown.values()), rep.flops_per_second_window)


def test_cost_grows_with_Q():
    costs = [estimate_cost(ScatterConfig.from_rate(Q, 8.0, 16384.0)).flops_per_second_window for Q in (1, 2, 4, 8)]
    assert costs == sorted(costs)


@pytest.mark.parametrize("seconds", [1.0, 2.0])
def test_cost_is_per_second(seconds):
    a = estimate_cost(ScatterConfig.from_rate(8, 8.0, 128.0, segment_seconds=seconds))
    assert a.flops_per_second_window > 0
