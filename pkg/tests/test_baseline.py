import math

import numpy as np
import pytest
from scipy import signal as sps

from aadscat.baseline import (EnvelopeConfig, GammatoneBank, compressed_envelope, eeg_baseline, erb_number,
                              erb_number_inv, estimate_baseline_cost, gammatone_envelope,
                              gammatone_envelope_reference, rereference)
from aadscat.sigkit import Kind, Signal, SignalError

RATE = 16384.0


def tone(freq, seconds=2.0, rate=RATE, am=None):
    t = np.arange(int(seconds * rate)) / rate
    x = np.sin(2 * np.pi * freq * t)
    if am is not None:
        x = x * (1 + 0.8 * np.sin(2 * np.pi * am * t))
    return Signal(x, rate, Kind.AUDIO)


def test_bank_centres_are_erb_uniform():
    bank = GammatoneBank()
    c = bank.centers
    assert c.size == 28
    assert np.all(np.diff(c) > 0)
    assert math.isclose(c[0], 50.0) and math.isclose(c[-1], 5000.0)
    assert np.allclose(np.diff(erb_number(c)), np.diff(erb_number(c))[0])
    assert np.allclose(erb_number_inv(erb_number(c)), c)


def test_gammatone_response_against_scipy():
    # oracle: scipy's 4th-order gammatone FIR (same 1.019 ERB bandwidth)
    bank = GammatoneBank(centers=[1000.0])
    f = np.array([700.0, 800.0, 900.0, 1000.0, 1100.0, 1200.0, 1300.0])
    b, a = sps.gammatone(1000.0, "fir", fs=RATE)
    _, h = sps.freqz(b, a, worN=f, fs=RATE)
    ref = np.abs(h) / np.abs(h).max()
    assert np.allclose(bank.response(f, 0), ref, atol=2e-3)


def test_silence_gives_zero_envelope():
    out = gammatone_envelope(Signal(np.zeros(16384), RATE, Kind.AUDIO))
    assert out.sample_rate == 64.0 and out.n_samples == 64
    assert np.all(out.data == 0.0)


def test_constant_tone_has_no_in_band_envelope():
    x = tone(1000.0, 4.0)
    raw = compressed_envelope(x).data[0]
    mid = raw[4096:-4096]
    assert np.std(mid) < 0.02 * np.mean(mid)
    env = gammatone_envelope(x).data[0][32:-32]
    assert np.max(np.abs(env)) < 0.02 * np.mean(mid)


def test_am_tone_envelope_peaks_at_modulation_rate():
    env = gammatone_envelope(tone(1000.0, 4.0, am=4.0)).data[0]
    spec = np.abs(np.fft.rfft(env))
    freqs = np.fft.rfftfreq(env.size, 1 / 64.0)
    assert abs(freqs[np.argmax(spec)] - 4.0) <= freqs[1]


def test_fast_path_matches_reference():
    rng = np.random.default_rng(0)
    x = Signal(rng.standard_normal(16384 * 2), RATE, Kind.AUDIO)
    fast = gammatone_envelope(x).data[0]
    ref = gammatone_envelope_reference(x).data[0]
    assert np.max(np.abs(fast - ref)) < 1e-2 * np.max(np.abs(ref))


def test_low_sample_rate_is_rejected():
    with pytest.raises(SignalError):
        gammatone_envelope(Signal(np.zeros(8192), 8192.0, Kind.AUDIO))


def test_envelope_config_validation():
    with pytest.raises(ValueError):
        EnvelopeConfig(compression_exponent=1.5)
    with pytest.raises(ValueError):
        EnvelopeConfig(band_lo=40.0, band_hi=32.0)
    with pytest.raises(ValueError):
        EnvelopeConfig(band_hi=40.0)


def test_rereference_removes_common_mode():
    common = np.random.default_rng(1).standard_normal(512)
    eeg = Signal(np.tile(common, (64, 1)), 128.0, Kind.EEG)
    assert np.allclose(rereference(eeg).data, 0.0)
    assert np.allclose(eeg_baseline(eeg).data, 0.0)


def test_single_channel_sine_is_shared_as_minus_one_over_64():
    t = np.arange(1024) / 128.0
    s = np.sin(2 * np.pi * 10 * t)
    data = np.tile(np.random.default_rng(2).standard_normal(1024), (64, 1))
    data[5] += s
    out = rereference(Signal(data, 128.0, Kind.EEG)).data
    assert np.allclose(out[5], s * (1 - 1 / 64))
    assert np.allclose(out[0], -s / 64)


def test_line_noise_attenuated_40_db():
    rate = 512.0
    t = np.arange(int(8 * rate)) / rate
    data = np.zeros((64, t.size))
    data[3] = np.sin(2 * np.pi * 50 * t) + np.sin(2 * np.pi * 10 * t)
    out = eeg_baseline(Signal(data, rate, Kind.EEG)).data[3]
    tt = np.arange(out.size) / 64.0
    # least-squares sine fit at 10 Hz and at 50 Hz folded to 64 Hz sampling (14 Hz alias)
    def amp(f):
        basis = np.stack([np.sin(2 * np.pi * f * tt), np.cos(2 * np.pi * f * tt)], axis=1)
        coef, *_ = np.linalg.lstsq(basis, out, rcond=None)
        return np.hypot(*coef)
    assert amp(10.0) > 0.9 * (1 - 1 / 64)
    assert 20 * np.log10(amp(14.0) + 1e-300) <= -40.0


def test_channel_count_is_checked():
    with pytest.raises(SignalError):
        eeg_baseline(Signal(np.zeros((8, 256)), 128.0, Kind.EEG))
    assert eeg_baseline(Signal(np.zeros((8, 256)), 128.0, Kind.EEG), n_channels=None).n_channels == 8


def test_baseline_cost():
    rep = estimate_baseline_cost()
    assert 5.5e6 / 2 <= rep.flops_per_second_window <= 5.5e6 * 2
    empty = estimate_baseline_cost(GammatoneBank(n_bands=0))
    assert empty.breakdown["bands"] == 0
    bank = GammatoneBank()
    doubled = estimate_baseline_cost(GammatoneBank(centers=np.r_[bank.centers, bank.centers]))
    assert math.isclose(doubled.breakdown["bands"], 2 * rep.breakdown["bands"])
