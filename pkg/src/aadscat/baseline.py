"""Conventional preprocessing: EEG re-reference/band-pass/downsample and the
gammatone speech envelope.

The envelope is the sum over 28 ERB-spaced gammatone bands of the band
signal's analytic magnitude raised to 0.6, band-passed to 1-32 Hz and
resampled to 64 Hz. :func:`compressed_envelope` computes the un-filtered sum at
the input rate; :func:`gammatone_envelope` computes the final output directly,
evaluating each band only on the bins where its filter is non-negligible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .scattering.cost import CMAC, CostReport, fft_flops, rfft_flops
from .sigkit import (Kind, Signal, SignalError, bandpass_response, raised_cosine_lowpass,
                     resample_pow2, zero_phase_bandpass)

GT_ORDER = 4
BAND_EPS = 3e-3
# modulus (4) plus the power law, counted as one exp and one log
POWER_LAW_FLOPS = 6


def erb_number(f):
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(f, dtype=np.float64))


def erb_number_inv(e):
    return (10.0 ** (np.asarray(e, dtype=np.float64) / 21.4) - 1.0) / 0.00437


def erb_bandwidth(f):
    """Equivalent rectangular bandwidth in Hz (Glasberg and Moore)."""
    return 24.7 * (4.37e-3 * np.asarray(f, dtype=np.float64) + 1.0)


@dataclass(frozen=True)
class GammatoneBank:
    """Gammatone bands with centers uniform on the ERB-number scale."""

    n_bands: int = 28
    f_lo: float = 50.0
    f_hi: float = 5000.0
    order: int = GT_ORDER
    centers: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        if self.centers is None:
            if self.n_bands == 0:
                c = np.zeros(0)
            elif self.n_bands == 1:
                c = np.array([self.f_lo])
            else:
                c = erb_number_inv(np.linspace(erb_number(self.f_lo), erb_number(self.f_hi), self.n_bands))
            object.__setattr__(self, "centers", c)
        else:
            c = np.asarray(self.centers, dtype=np.float64)
            object.__setattr__(self, "centers", c)
            object.__setattr__(self, "n_bands", c.size)

    @property
    def bandwidths(self) -> np.ndarray:
        return 1.019 * erb_bandwidth(self.centers)

    def response(self, freqs, band: int) -> np.ndarray:
        """Magnitude of band ``band`` (peak 1) at the given positive frequencies."""
        x = (np.asarray(freqs, dtype=np.float64) - self.centers[band]) / self.bandwidths[band]
        return (1.0 + x * x) ** (-self.order / 2)

    def support(self, band: int, eps: float = BAND_EPS):
        """Frequency interval (Hz) where the response is at least ``eps``."""
        half = self.bandwidths[band] * math.sqrt(eps ** (-2.0 / self.order) - 1.0)
        return max(self.centers[band] - half, 0.0), self.centers[band] + half


@dataclass(frozen=True)
class EnvelopeConfig:
    compression_exponent: float = 0.6
    band_lo: float = 1.0
    band_hi: float = 32.0
    out_rate: float = 64.0
    bandpass_order: int = 4

    def __post_init__(self):
        if not (0 < self.compression_exponent <= 1):
            raise ValueError("compression exponent must lie in (0, 1]")
        # the upper edge may sit on the output Nyquist frequency: the default
        # 1-32 Hz band at 64 Hz does exactly that
        if not (0 < self.band_lo < self.band_hi <= self.out_rate / 2):
            raise ValueError(f"need 0 < band_lo < band_hi <= out_rate/2, got "
                             f"{self.band_lo}, {self.band_hi}, {self.out_rate}")


def _check_audio(audio: Signal, bank: GammatoneBank):
    if audio.n_channels != 1:
        raise SignalError("gammatone envelope expects a single audio channel")
    if bank.n_bands and audio.sample_rate < 2 * bank.f_hi:
        raise SignalError(f"sample rate {audio.sample_rate} Hz is too low for a {bank.f_hi} Hz band")


def compressed_envelope(audio: Signal, cfg: EnvelopeConfig = EnvelopeConfig(),
                        bank: Optional[GammatoneBank] = None) -> Signal:
    """``sum_b |analytic band_b|**p`` at the input rate (no final band-pass)."""
    bank = bank or GammatoneBank()
    _check_audio(audio, bank)
    x = audio.data[0]
    n = x.shape[0]
    X = sfft.fft(x)
    f = sfft.fftfreq(n, 1.0 / audio.sample_rate)
    pos = f > 0
    total = np.zeros(n)
    for b in range(bank.n_bands):
        H = np.zeros(n)
        H[pos] = 2.0 * bank.response(f[pos], b)
        total += np.abs(sfft.ifft(X * H)) ** cfg.compression_exponent
    return Signal(total, audio.sample_rate, Kind.AUDIO)


def _decimated_size(n: int, width: int) -> int:
    """Largest ``n / 2**k`` that is still >= width (so folding is exact)."""
    m = n
    while m % 2 == 0 and m // 2 >= width:
        m //= 2
    return m


def gammatone_envelope(audio: Signal, cfg: EnvelopeConfig = EnvelopeConfig(),
                       bank: Optional[GammatoneBank] = None) -> Signal:
    """Band-passed, resampled envelope of a mono audio signal."""
    bank = bank or GammatoneBank()
    _check_audio(audio, bank)
    fs = audio.sample_rate
    x = audio.data[0]
    n = x.shape[0]
    out_len = int(round(n * cfg.out_rate / fs))
    keep = out_len // 2 + 1
    X = sfft.rfft(x)
    acc = np.zeros(keep, dtype=complex)
    p = cfg.compression_exponent
    for b in range(bank.n_bands):
        lo_hz, hi_hz = bank.support(b)
        lo = max(int(math.ceil(lo_hz * n / fs)), 1)
        hi = min(int(math.floor(hi_hz * n / fs)), (n - 1) // 2)
        if hi < lo:
            continue
        idx = np.arange(lo, hi + 1)
        m = _decimated_size(n, idx.size)
        z_hat = np.zeros(m, dtype=complex)
        z_hat[idx % m] = X[idx] * (2.0 * bank.response(idx * fs / n, b))
        env = np.abs(sfft.ifft(z_hat) * (m / n)) ** p
        e_hat = sfft.rfft(env) * (n / m)
        k = min(keep, e_hat.shape[0])
        acc[:k] += e_hat[:k]
    freqs = np.arange(keep) * fs / n
    nyq = min(fs, cfg.out_rate) / 2
    gain = (bandpass_response(freqs, cfg.band_lo, cfg.band_hi, cfg.bandpass_order)
            * raised_cosine_lowpass(freqs, nyq, 0.05 * nyq))
    y = sfft.irfft(acc * gain, n=out_len) * (out_len / n)
    return Signal(y, cfg.out_rate, Kind.AUDIO)


def gammatone_envelope_reference(audio: Signal, cfg: EnvelopeConfig = EnvelopeConfig(),
                                 bank: Optional[GammatoneBank] = None) -> Signal:
    """Same output as :func:`gammatone_envelope`, built from the full-rate pieces."""
    env = compressed_envelope(audio, cfg, bank)
    bp = zero_phase_bandpass(env, cfg.band_lo, cfg.band_hi, cfg.bandpass_order)
    return resample_pow2(bp, cfg.out_rate)


def rereference(eeg: Signal) -> Signal:
    """Subtract the across-channel mean from every sample."""
    return eeg.replace(eeg.data - eeg.data.mean(axis=0, keepdims=True))


def artifact_removal(eeg: Signal) -> Signal:
    """Hook for dataset-specific artifact suppression; the default does nothing."""
    return eeg


def eeg_baseline(eeg: Signal, band=(1.0, 32.0), out_rate: float = 64.0, order: int = 4,
                 n_channels: Optional[int] = 64, artifact_stage=artifact_removal) -> Signal:
    """Re-reference, zero-phase band-pass and resample EEG.

    Pass ``n_channels=None`` to accept any montage.
    """
    if n_channels is not None and eeg.n_channels != n_channels:
        raise SignalError(f"expected {n_channels} EEG channels, got {eeg.n_channels}")
    x = artifact_stage(rereference(eeg))
    x = zero_phase_bandpass(x, band[0], band[1], order)
    return resample_pow2(x, out_rate)


def estimate_baseline_cost(bank: Optional[GammatoneBank] = None, rate: int = 16384,
                           cfg: EnvelopeConfig = EnvelopeConfig()) -> CostReport:
    """FLOPs of :func:`gammatone_envelope` for one second of audio at ``rate``.

    The count mirrors the implementation: one real FFT of the input, then per
    band a product on the band's support, an inverse FFT at the reduced size,
    the power-law modulus, a real FFT of the envelope and the band-limited
    accumulation; finally the output filter and inverse FFT.
    """
    bank = bank if bank is not None else GammatoneBank()
    n = rate
    out_len = int(round(n * cfg.out_rate / rate))
    keep = out_len // 2 + 1
    bands = 0.0
    for b in range(bank.n_bands):
        lo_hz, hi_hz = bank.support(b)
        lo = max(int(math.ceil(lo_hz)), 1)
        hi = min(int(math.floor(hi_hz)), (n - 1) // 2)
        width = max(hi - lo + 1, 0)
        if width == 0:
            continue
        m = _decimated_size(n, width)
        bands += CMAC * width + fft_flops(m) + POWER_LAW_FLOPS * m + rfft_flops(m) + 2 * keep
    parts = {"input_fft": rfft_flops(n), "bands": bands,
             "output": CMAC * keep + rfft_flops(out_len)}
    return CostReport(sum(parts.values()), 0.0, (1, 0, 0, 1), parts)
