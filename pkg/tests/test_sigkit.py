import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import signal as sps

from aadscat.sigkit import (Kind, Signal, SignalError, Spectrum, bandpass_response, fft, filter_decimate, fold,
                            ifft, is_pow2, next_pow2, reflect_pad, resample_pow2, zero_phase_bandpass)


def test_pow2_helpers():
    assert [is_pow2(n) for n in (0, 1, 2, 3, 4, 96, 128)] == [False, True, True, False, True, False, True]
    assert [next_pow2(n) for n in (0, 1, 3, 4, 5, 1000)] == [1, 1, 4, 4, 8, 1024]


def test_signal_validation():
    with pytest.raises(SignalError):
        Signal(np.zeros((2, 2, 2)), 1.0)
    with pytest.raises(SignalError):
        Signal(np.zeros(4), 0.0)
    with pytest.raises(SignalError):
        Signal(np.array([0.0, np.nan]), 1.0)
    s = Signal(np.arange(4.0), 2.0, "eeg")
    assert s.kind is Kind.EEG and s.n_channels == 1 and s.duration == 2.0


def test_spectrum_requires_pow2():
    with pytest.raises(SignalError):
        Spectrum(np.zeros(6))
    with pytest.raises(SignalError):
        fft(np.zeros(6))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.sampled_from([8, 16, 64]), elements=st.floats(-1e3, 1e3)))
def test_fft_roundtrip(x):
    assert np.allclose(ifft(fft(x)), x, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)), st.sampled_from([1, 2, 4, 8, 16]))
def test_fold_equals_time_subsampling(x, factor):
    m = 64 // factor
    y = np.fft.ifft(fold(np.fft.fft(x), m)).real * m / 64
    assert np.allclose(y, x[::factor], atol=1e-9)


def test_fold_rejects_non_divisor():
    with pytest.raises(SignalError):
        fold(np.zeros(8), 3)


def test_filter_decimate_matches_direct_circular_convolution():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(64)
    h = rng.standard_normal(64)
    out = filter_decimate(Signal(x, 64.0), Spectrum(np.fft.fft(h), 64.0), 4)
    direct = np.array([sum(x[(n - k) % 64] * h[k] for k in range(64)) for n in range(64)])
    assert np.allclose(out.data[0], direct[::4])
    assert out.sample_rate == 16.0


def test_bandpass_response_is_squared_butterworth():
    # oracle: scipy's analog Butterworth high-pass and low-pass sections
    lo, hi, order = 1.0, 32.0, 4
    f = np.array([0.25, 0.5, 1.0, 5.0, 20.0, 32.0, 50.0, 200.0])
    bh, ah = sps.butter(order, 2 * np.pi * lo, btype="highpass", analog=True)
    bl, al = sps.butter(order, 2 * np.pi * hi, btype="lowpass", analog=True)
    _, hh = sps.freqs(bh, ah, worN=2 * np.pi * f)
    _, hl = sps.freqs(bl, al, worN=2 * np.pi * f)
    assert np.allclose(bandpass_response(f, lo, hi, order), np.abs(hh * hl) ** 2, rtol=1e-9, atol=1e-15)


def test_zero_phase_bandpass_keeps_in_band_sine_and_phase():
    t = np.arange(1024) / 128.0
    x = np.sin(2 * np.pi * 8 * t)
    y = zero_phase_bandpass(Signal(x, 128.0), 1.0, 32.0).data[0]
    assert np.allclose(y, x, atol=1e-3)
    with pytest.raises(SignalError):
        zero_phase_bandpass(Signal(x, 128.0), 1.0, 70.0)


def test_resample_pow2_removes_aliases_and_keeps_band():
    rate = 512.0
    t = np.arange(2048) / rate
    x = np.sin(2 * np.pi * 10 * t) + np.sin(2 * np.pi * 100 * t)
    y = resample_pow2(Signal(x, rate), 64.0)
    assert y.n_samples == 256 and y.sample_rate == 64.0
    assert np.allclose(y.data[0], np.sin(2 * np.pi * 10 * np.arange(256) / 64.0), atol=1e-6)


def test_resample_refuses_large_upsampling():
    with pytest.raises(SignalError):
        resample_pow2(Signal(np.zeros(16), 8.0), 64.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 20), st.integers(0, 50), st.integers(0, 50))
def test_reflect_pad_matches_numpy(n, left, right):
    x = np.arange(float(n))
    got = reflect_pad(x, left, right)
    # numpy's "reflect" mode is the same rule, but only for pads shorter than the signal
    if left < n and right < n:
        assert np.array_equal(got, np.pad(x, (left, right), mode="reflect"))
    assert got.shape[0] == n + left + right
    assert np.array_equal(got[left:left + n], x)
