"""Deterministic DSP primitives shared by the frontends.

Everything here works in double precision and is a pure function of its
arguments. Spectra follow the numpy/scipy layout: bin ``k`` of an ``N``-point
transform sits at ``k * rate / N`` Hz for ``k < N/2`` and at negative
frequencies above that.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft


class SignalError(ValueError):
    """Raised when a signal or spectrum violates its preconditions."""


class Kind(str, enum.Enum):
    AUDIO = "audio"
    EEG = "eeg"


def is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def next_pow2(n: float) -> int:
    """Smallest power of two that is >= n (and >= 1)."""
    n = int(np.ceil(n))
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class Signal:
    """Multichannel sampled waveform, stored as ``[channels, samples]``."""

    data: np.ndarray
    sample_rate: float
    kind: Kind = Kind.AUDIO

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[None, :]
        if data.ndim != 2:
            raise SignalError(f"signal data must be 1-D or 2-D, got shape {data.shape}")
        if data.shape[0] < 1:
            raise SignalError("signal needs at least one channel")
        if not self.sample_rate > 0:
            raise SignalError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(data)):
            raise SignalError("signal contains non-finite samples")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def replace(self, data, sample_rate=None) -> "Signal":
        return Signal(data, self.sample_rate if sample_rate is None else sample_rate, self.kind)


@dataclass(frozen=True)
class Spectrum:
    """Frequency-domain carrier: ``bins`` of an FFT of power-of-two size."""

    bins: np.ndarray
    sample_rate: float = 1.0
    length: int = field(default=-1)

    def __post_init__(self):
        bins = np.asarray(self.bins)
        if bins.ndim != 1:
            raise SignalError("spectrum bins must be a vector")
        if not is_pow2(bins.shape[0]):
            raise SignalError(f"FFT size must be a power of two, got {bins.shape[0]}")
        object.__setattr__(self, "bins", bins)
        if self.length < 0:
            object.__setattr__(self, "length", bins.shape[0])

    @property
    def size(self) -> int:
        return self.bins.shape[0]

    def freqs(self) -> np.ndarray:
        return sfft.fftfreq(self.size, 1.0 / self.sample_rate)


def fft(segment, sample_rate: float = 1.0) -> Spectrum:
    """FFT of a real vector whose length is a power of two."""
    x = np.asarray(segment, dtype=np.float64)
    if x.ndim != 1:
        raise SignalError("fft expects a single vector")
    if not is_pow2(x.shape[0]):
        raise SignalError(f"fft length must be a power of two, got {x.shape[0]}")
    return Spectrum(sfft.fft(x), sample_rate, x.shape[0])


def ifft(spectrum: Spectrum, real: bool = True) -> np.ndarray:
    y = sfft.ifft(spectrum.bins)
    return y.real.copy() if real else y


def fold(x_hat: np.ndarray, m: int) -> np.ndarray:
    """Alias an N-point spectrum (last axis) onto m points, N a multiple of m.

    ``ifft(fold(X, m)) * m / N`` equals ``ifft(X)[::N // m]``: folding the
    spectrum is the frequency-domain form of keeping every (N/m)-th sample.
    """
    n = x_hat.shape[-1]
    if n % m:
        raise SignalError(f"cannot fold {n} bins onto {m}")
    return x_hat.reshape(x_hat.shape[:-1] + (n // m, m)).sum(axis=-2)


def filter_decimate(signal: Signal, kernel_hat: Spectrum, factor: int) -> Signal:
    """Circular convolution with ``kernel_hat`` followed by keeping every ``factor``-th sample.

    The kernel must be given on the signal's own FFT grid (pad the signal
    first if needed). For kernels whose impulse response is not real the
    imaginary part of the result is discarded.
    """
    n = signal.n_samples
    if kernel_hat.size != n:
        raise SignalError(f"kernel size {kernel_hat.size} does not match signal length {n}")
    if factor < 1 or n % factor:
        raise SignalError(f"factor {factor} does not divide segment length {n}")
    m = n // factor
    y_hat = fold(sfft.fft(signal.data, axis=-1) * kernel_hat.bins, m)
    y = sfft.ifft(y_hat, axis=-1).real / factor
    return signal.replace(y, signal.sample_rate / factor)


def butterworth_bandpass_response(freqs, lo: float, hi: float, order: int = 4) -> np.ndarray:
    """Magnitude of an analog Butterworth high-pass(lo) times low-pass(hi)."""
    f = np.abs(np.asarray(freqs, dtype=np.float64))
    with np.errstate(divide="ignore"):
        hp = 1.0 / np.sqrt(1.0 + (lo / f) ** (2 * order))
    lp = 1.0 / np.sqrt(1.0 + (f / hi) ** (2 * order))
    return hp * lp


def bandpass_response(freqs, lo: float, hi: float, order: int = 4) -> np.ndarray:
    """Response applied by :func:`zero_phase_bandpass`.

    It is the squared Butterworth magnitude, i.e. what a forward plus backward
    pass of the order-``order`` IIR filter would do, with no phase.
    """
    return butterworth_bandpass_response(freqs, lo, hi, order) ** 2


def zero_phase_bandpass(signal: Signal, lo: float, hi: float, order: int = 4) -> Signal:
    """Butterworth band-pass applied as a real, zero-phase gain on the FFT grid."""
    nyq = signal.sample_rate / 2
    if not (0 < lo < hi < nyq):
        raise SignalError(f"invalid band edges ({lo}, {hi}) for rate {signal.sample_rate}")
    n = signal.n_samples
    gain = bandpass_response(sfft.rfftfreq(n, 1.0 / signal.sample_rate), lo, hi, order)
    y = sfft.irfft(sfft.rfft(signal.data, axis=-1) * gain, n=n, axis=-1)
    return signal.replace(y)


def raised_cosine_lowpass(freqs, cutoff: float, width: float) -> np.ndarray:
    """1 below ``cutoff - width``, 0 above ``cutoff``, half-cosine in between."""
    f = np.abs(np.asarray(freqs, dtype=np.float64))
    t = np.clip((f - (cutoff - width)) / width, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * t))


def resample_pow2(signal: Signal, target_rate: float) -> Signal:
    """FFT resampling with a raised-cosine anti-alias filter.

    The transition band is 5% of the lower of the two Nyquist frequencies and
    ends exactly at it, so nothing above the new Nyquist survives a rate
    reduction. Upsampling by more than 4x is refused as a likely mistake.
    """
    if not target_rate > 0:
        raise SignalError(f"target_rate must be positive, got {target_rate}")
    rate = signal.sample_rate
    if target_rate == rate:
        return signal.replace(signal.data.copy())
    if target_rate > 4 * rate:
        raise SignalError(f"refusing to upsample {rate} -> {target_rate} Hz (> 4x in one step)")
    n = signal.n_samples
    m = int(round(n * target_rate / rate))
    if m < 1:
        raise SignalError("signal too short for the requested rate")
    nyq = min(rate, target_rate) / 2
    X = sfft.rfft(signal.data, axis=-1)
    X = X * raised_cosine_lowpass(sfft.rfftfreq(n, 1.0 / rate), nyq, 0.05 * nyq)
    keep = m // 2 + 1
    Y = np.zeros(signal.data.shape[:-1] + (keep,), dtype=complex)
    k = min(keep, X.shape[-1])
    Y[..., :k] = X[..., :k]
    y = sfft.irfft(Y, n=m, axis=-1) * (m / n)
    return Signal(y, target_rate, signal.kind)


def reflect_pad(x: np.ndarray, left: int, right: int) -> np.ndarray:
    """Symmetric (reflect, edge not repeated) padding along the last axis.

    Pads longer than the signal are built by repeated reflection.
    """
    if left == 0 and right == 0:
        return np.array(x, dtype=np.float64)
    n = x.shape[-1]
    if n == 1:
        return np.repeat(x, left + 1 + right, axis=-1)
    period = 2 * (n - 1)
    idx = np.arange(-left, n + right)
    idx = np.abs(np.mod(idx, period))
    idx = np.where(idx >= n, period - idx, idx)
    return x[..., idx]
