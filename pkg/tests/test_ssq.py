import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal as sps

from aadscat.sigkit import Kind, Signal, SignalError
from aadscat.ssq import SsqConfig, hann, retained_energy, ssq_stft, stft

AUDIO_RATE, EEG_RATE = 16384.0, 128.0


def test_frame_rates():
    x = Signal(np.random.default_rng(0).standard_normal(16384), AUDIO_RATE, Kind.AUDIO)
    assert ssq_stft(x, SsqConfig.audio()).frame_rate == 32.0
    e = Signal(np.random.default_rng(0).standard_normal((2, 512)), EEG_RATE, Kind.EEG)
    assert ssq_stft(e, SsqConfig.eeg()).frame_rate == 8.0


def test_stft_matches_scipy():
    # oracle: scipy.signal.stft with the same periodic Hann window, no padding and no scaling
    x = np.random.default_rng(1).standard_normal(1024)
    ours = stft(x[None], 64, 16)[0]
    _, _, ref = sps.stft(x, window=hann(64), nperseg=64, noverlap=48, boundary=None, padded=False,
                         scaling="spectrum")
    ref = ref * hann(64).sum()
    assert ours.shape == ref.shape
    assert np.allclose(ours, ref)


@pytest.mark.parametrize("freq", [100.0, 440.0, 1234.5])
def test_sine_concentrates_within_one_bin(freq):
    t = np.arange(16384) / AUDIO_RATE
    x = Signal(np.sin(2 * np.pi * freq * t), AUDIO_RATE, Kind.AUDIO)
    m = ssq_stft(x, SsqConfig.audio())
    e = m.energy()[0]
    k = int(np.argmin(np.abs(m.bin_freqs - freq)))
    near = e[max(k - 1, 0):k + 2].sum(axis=0)
    assert np.all(near / e.sum(axis=0) >= 0.9)


def test_energy_bookkeeping():
    rng = np.random.default_rng(2)
    for cfg, rate, n in ((SsqConfig.audio(), AUDIO_RATE, 16384), (SsqConfig.eeg(), EEG_RATE, 1024)):
        x = Signal(rng.standard_normal((2, n)), rate)
        m = ssq_stft(x, cfg)
        kept = retained_energy(x, cfg)
        got = m.energy().sum(axis=1)
        assert np.all(np.abs(got - kept) <= 1e-6 * kept)


def test_zero_signal_gives_zero_map():
    m = ssq_stft(Signal(np.zeros(2048), AUDIO_RATE), SsqConfig.audio())
    assert np.all(m.magnitudes == 0.0)


def test_chirp_centroid_tracks_instantaneous_frequency():
    rate, n = AUDIO_RATE, 16384
    t = np.arange(n) / rate
    f0, f1 = 500.0, 1500.0
    x = sps.chirp(t, f0, t[-1], f1, method="linear")
    cfg = SsqConfig.audio()
    m = ssq_stft(Signal(x, rate), cfg)
    e = m.energy()[0]
    centroid = (e * m.bin_freqs[:, None]).sum(axis=0) / e.sum(axis=0)
    centres = (np.arange(e.shape[1]) * cfg.hop + cfg.window_len / 2) / rate
    inst = f0 + (f1 - f0) * centres / t[-1]
    bin_hz = m.bin_freqs[1]
    assert np.all(np.abs(centroid - inst) <= 2 * bin_hz)


def _entropy(p):
    p = p / p.sum()
    p = p[p > 0]
    return -(p * np.log(p)).sum()


@settings(max_examples=20, deadline=None)
@given(st.floats(50.0, 6000.0), st.floats(0.0, 2 * np.pi))
def test_reassignment_sharpens_a_sine(freq, phase):
    t = np.arange(8192) / AUDIO_RATE
    x = Signal(np.sin(2 * np.pi * freq * t + phase), AUDIO_RATE)
    cfg = SsqConfig.audio()
    m = ssq_stft(x, cfg)
    plain = np.abs(stft(x.data, cfg.window_len, cfg.hop))[0] ** 2
    for j in range(plain.shape[1]):
        assert _entropy(m.energy()[0][:, j]) <= _entropy(plain[:, j]) + 1e-9


def test_config_and_input_checks():
    with pytest.raises(ValueError):
        SsqConfig(window_len=100)
    with pytest.raises(ValueError):
        SsqConfig(window_len=64, hop=128)
    with pytest.raises(SignalError):
        ssq_stft(Signal(np.zeros(32), EEG_RATE), SsqConfig.eeg())


def test_magnitudes_nonnegative_and_shaped():
    m = ssq_stft(Signal(np.random.default_rng(3).standard_normal((3, 640)), EEG_RATE), SsqConfig.eeg())
    assert m.magnitudes.shape == (3, 33, (640 - 64) // 16 + 1)
    assert np.all(m.magnitudes >= 0)
