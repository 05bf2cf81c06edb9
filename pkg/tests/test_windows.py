import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aadscat.evaluation import FeatureTrial, WindowError, window_features, window_stats


def trial(seconds=52.0, eeg_rate=8.0, audio_rate=8.0, seed=0):
    rng = np.random.default_rng(seed)
    ne, na = int(seconds * eeg_rate), int(seconds * audio_rate)
    return FeatureTrial("S0", "S0_T0", rng.standard_normal((3, ne)), eeg_rate,
                        [rng.standard_normal((2, na)), rng.standard_normal((2, na))], audio_rate, 1, ("a", "b"))


def test_counts():
    assert len(window_features(trial(), 2.0, 2.0)) == 26
    assert len(window_features(trial(), 1.0, 0.5)) == 103


def test_window_longer_than_trial():
    with pytest.raises(WindowError, match="longer"):
        window_features(trial(), 60.0, 60.0)


def test_sub_frame_window_rejected():
    with pytest.raises(WindowError):
        window_features(trial(), 0.1, 0.1)
    with pytest.raises(WindowError):
        window_features(trial(), 2.0, 0.0)


def test_incompatible_frame_rates():
    with pytest.raises(WindowError, match="integer multiples"):
        window_features(trial(eeg_rate=8.0, audio_rate=12.0), 1.0, 1.0)


def test_window_contents_and_labels():
    ft = trial(eeg_rate=8.0, audio_rate=32.0)
    ws = window_features(ft, 2.0, 0.5)
    for w in ws:
        assert w.eeg.shape == (3, 16) and all(a.shape == (2, 64) for a in w.audios)
        assert w.label == 1
    k = 5
    off = ws[k].origin[1]
    assert off == 2.5
    assert np.array_equal(ws[k].eeg, ft.eeg[:, 20:36])
    assert np.array_equal(ws[k].audios[1], ft.audios[1][:, 80:144])


def test_stats_match_per_window_mean_and_std():
    ft = trial(eeg_rate=8.0, audio_rate=32.0, seed=1)
    batch = window_stats(ft, 1.0, 0.25)
    ws = window_features(ft, 1.0, 0.25)
    assert len(batch) == len(ws)
    for i, w in enumerate(ws):
        assert np.allclose(batch.eeg[i], np.r_[w.eeg.mean(1), w.eeg.std(1)])
        for s in range(2):
            a = w.audios[s]
            assert np.allclose(batch.audio[i, s], np.r_[a.mean(1), a.std(1)])
    assert np.all(batch.labels == 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(8, 200), st.sampled_from([0.25, 0.5, 1.0, 2.0]))
def test_non_overlapping_windows_tile_the_trial(n_frames, L_x):
    seconds = n_frames / 8.0
    if L_x > seconds:
        return
    ws = window_features(trial(seconds), L_x, L_x)
    ends = [w.origin[1] + L_x for w in ws]
    assert all(abs(ws[i + 1].origin[1] - ends[i]) < 1e-12 for i in range(len(ws) - 1))
    assert 0 <= seconds - ends[-1] < L_x
