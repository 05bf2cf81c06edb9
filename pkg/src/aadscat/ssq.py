"""Synchrosqueezed STFT.

Each STFT coefficient's energy is moved along the frequency axis to the bin
nearest its instantaneous-frequency estimate. With a frame-referenced STFT
``V`` (Hann window ``w``) and ``Vd`` the STFT taken with the window derivative
``w'``, a component at angular frequency ``omega0`` gives
``Vd / V = -i (omega0 - omega_k)``, so ``omega0 = omega_k - Im(Vd / V)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft as sfft
from numpy.lib.stride_tricks import sliding_window_view

from .sigkit import Signal, SignalError, is_pow2


@dataclass(frozen=True)
class SsqConfig:
    window_len: int = 1024
    hop: int = 512
    n_bins: Optional[int] = None  # defaults to window_len // 2 + 1
    magnitude_floor: float = 1e-4

    def __post_init__(self):
        if not is_pow2(self.window_len):
            raise ValueError(f"window_len must be a power of two, got {self.window_len}")
        if not (1 <= self.hop <= self.window_len):
            raise ValueError("hop must lie in [1, window_len]")
        if self.n_bins is not None and self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")

    @property
    def bins(self) -> int:
        return self.n_bins if self.n_bins is not None else self.window_len // 2 + 1

    @classmethod
    def audio(cls, **kw):
        return cls(window_len=1024, hop=512, **kw)

    @classmethod
    def eeg(cls, **kw):
        return cls(window_len=64, hop=16, **kw)


@dataclass
class TimeFreqMap:
    """Magnitudes ``[channels, bins, frames]``."""

    magnitudes: np.ndarray
    frame_rate: float
    bin_freqs: np.ndarray

    def energy(self) -> np.ndarray:
        return self.magnitudes ** 2


def hann(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def hann_derivative(n: int) -> np.ndarray:
    """d/dn of the periodic Hann window, per sample."""
    return (np.pi / n) * np.sin(2 * np.pi * np.arange(n) / n)


def stft(x: np.ndarray, window_len: int, hop: int, window: Optional[np.ndarray] = None) -> np.ndarray:
    """Frame-referenced STFT of the rows of x: ``[rows, window_len//2+1, frames]``."""
    w = hann(window_len) if window is None else window
    frames = sliding_window_view(x, window_len, axis=-1)[..., ::hop, :]
    return np.swapaxes(sfft.rfft(frames * w, axis=-1), -1, -2)


def ssq_stft(signal: Signal, cfg: SsqConfig) -> TimeFreqMap:
    """Synchrosqueezed magnitude map of every channel."""
    L = cfg.window_len
    if signal.n_samples < L:
        raise SignalError(f"signal of {signal.n_samples} samples is shorter than the window ({L})")
    x = signal.data
    V = stft(x, L, cfg.hop)
    Vd = stft(x, L, cfg.hop, hann_derivative(L))
    n_ch, n_k, n_t = V.shape
    mag = np.abs(V)
    peak = mag.max()
    keep = mag > cfg.magnitude_floor * peak if peak > 0 else np.zeros(mag.shape, bool)
    ratio = np.zeros_like(V)
    np.divide(Vd, V, out=ratio, where=keep)
    k = np.arange(n_k)[None, :, None]
    inst_bin = k - ratio.imag * L / (2 * np.pi)  # in STFT bins (rate / L Hz each)

    n_out = cfg.bins
    nyq = signal.sample_rate / 2
    bin_freqs = np.linspace(0.0, nyq, n_out)
    inst_hz = inst_bin * signal.sample_rate / L
    target = np.clip(np.rint(inst_hz / nyq * (n_out - 1)), 0, n_out - 1).astype(np.int64)

    energy = np.where(keep, mag ** 2, 0.0)
    # flat index of (channel, frame, target bin), then one bincount for everything
    ch = np.arange(n_ch)[:, None, None]
    t = np.arange(n_t)[None, None, :]
    flat = (ch * n_t + t) * n_out + target
    out = np.bincount(flat.ravel(), weights=energy.ravel(), minlength=n_ch * n_t * n_out)
    out = out.reshape(n_ch, n_t, n_out).transpose(0, 2, 1)
    return TimeFreqMap(np.sqrt(out), signal.sample_rate / cfg.hop, bin_freqs)


def retained_energy(signal: Signal, cfg: SsqConfig) -> np.ndarray:
    """Per-frame STFT energy of the coefficients above the floor, ``[channels, frames]``."""
    V = stft(signal.data, cfg.window_len, cfg.hop)
    mag = np.abs(V)
    peak = mag.max()
    if peak == 0:
        return np.zeros((V.shape[0], V.shape[2]))
    keep = mag > cfg.magnitude_floor * peak
    return np.where(keep, mag ** 2, 0.0).sum(axis=1)
