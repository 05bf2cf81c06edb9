"""Two-layer scattering of one-second segments.

Each wavelet product is formed only on the bins where the wavelet is
non-negligible. Those bins are folded into an inverse FFT just large enough to
hold them, which gives the complex band signal sampled exactly at a reduced
rate. The modulus is taken on that coarse grid and the result is averaged by
the Gaussian low-pass, again folding onto the output frame grid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from ..sigkit import Signal, SignalError, reflect_pad
from .filterbank import Band, Filterbank, ScatterConfig, build_filterbank
from .paths import PathTable, enumerate_paths

log = logging.getLogger(__name__)

MAX_BATCH_SAMPLES = 1 << 22  # padded samples per vectorized batch


@dataclass
class ScatteringOutput:
    """Coefficients ``[channels, paths, frames]`` at ``frame_rate`` Hz.

    S1 and S2 rows are non-negative; S0 is the low-passed input and keeps its
    sign.
    """

    coeffs: np.ndarray
    frame_rate: float
    path_table: PathTable
    truncated_seconds: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return self.coeffs.shape[-1]

    def flat(self) -> np.ndarray:
        """Channel-major ``[channels * paths, frames]`` matrix."""
        c, p, t = self.coeffs.shape
        return self.coeffs.reshape(c * p, t)

    def sidecar(self) -> dict:
        return {
            "frame_rate": self.frame_rate,
            "paths": self.path_table.as_list(),
            "counts": list(self.path_table.counts),
            "truncated_seconds": self.truncated_seconds,
            **self.meta,
        }


def _gather(r_hat: np.ndarray, src: np.ndarray, flip: np.ndarray) -> np.ndarray:
    """Full-spectrum bins of a real signal, read from its rfft."""
    v = r_hat[..., src]
    return np.where(flip, np.conj(v), v)


def _band(r_hat: np.ndarray, n: int, band: Band) -> np.ndarray:
    """Samples of ``ifft(fft(u) * band.hat)`` on the band's ``m``-point grid.

    ``r_hat`` is the rfft of the real, n-sample signal ``u``.
    """
    z = np.zeros(r_hat.shape[:-1] + (band.m,), dtype=complex)
    z[..., band.target] = _gather(r_hat, band.src, band.flip) * band.coeff
    return sfft.ifft(z, axis=-1) * (band.m / n)


def _average(r_hat: np.ndarray, m: int, fb: Filterbank, first: int, count: int) -> np.ndarray:
    """Low-pass a real m-sample signal (given by its rfft) and sample it at the frame rate."""
    nout = fb.config.padded_len >> fb.config.J
    out_bins, coeff, src, flip = fb.phi_on[m]
    y = np.zeros(r_hat.shape[:-1] + (nout,), dtype=complex)
    # the arc is at most nout bins wide (checked at build time), so no two
    # bins land on the same output bin
    y[..., out_bins] = _gather(r_hat, src, flip) * coeff
    s = sfft.ifft(y, axis=-1).real * (nout / m)
    return s[..., first:first + count]


def _scatter_rows(x: np.ndarray, fb: Filterbank, paths: PathTable) -> np.ndarray:
    """Scatter every row of ``x`` (``[rows, segment_len]``); returns ``[rows, paths, frames]``."""
    cfg = fb.config
    n_seg, n_pad = cfg.segment_len, cfg.padded_len
    first, count = cfg.pad_left >> cfg.J, cfg.frames_per_segment
    xp = reflect_pad(x, cfg.pad_left, n_pad - n_seg - cfg.pad_left)
    x_hat = sfft.rfft(xp, axis=-1)
    out = np.empty((x.shape[0], len(paths), count))
    out[:, 0] = _average(x_hat, n_pad, fb, first, count)

    row = 1
    n1 = len(fb.psi1_bands)
    second = {}
    for p in paths.paths[1 + n1:]:
        second.setdefault(p.k1, []).append(p.k2)
    s2_row = 1 + n1
    for k1, b1 in enumerate(fb.psi1_bands):
        u1 = np.abs(_band(x_hat, n_pad, b1))
        u1_hat = sfft.rfft(u1, axis=-1)
        out[:, row] = np.maximum(_average(u1_hat, b1.m, fb, first, count), 0.0)
        row += 1
        for k2 in second.get(k1, ()):
            b2 = fb.psi2_on[(k2, b1.m)]
            u2 = np.abs(_band(u1_hat, b1.m, b2))
            out[:, s2_row] = np.maximum(_average(sfft.rfft(u2, axis=-1), b2.m, fb, first, count), 0.0)
            s2_row += 1
    return out


def _as_rows(data) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


def scatter_segment(segment, fb: Filterbank) -> ScatteringOutput:
    """Scatter a single-channel segment of exactly ``config.segment_len`` samples."""
    cfg = fb.config
    if isinstance(segment, Signal):
        if segment.n_channels != 1:
            raise SignalError("scatter_segment takes a single channel")
        x = segment.data
    else:
        x = _as_rows(segment)
        if x.shape[0] != 1:
            raise SignalError("scatter_segment takes a single channel")
    if x.shape[-1] != cfg.segment_len:
        raise SignalError(f"segment has {x.shape[-1]} samples, expected {cfg.segment_len}")
    paths = enumerate_paths(cfg)
    return ScatteringOutput(_scatter_rows(x, fb, paths), cfg.F_o, paths)


def scatter_stream(signal: Signal, config: ScatterConfig, fb: Filterbank | None = None,
                   batch_rows: int | None = None) -> ScatteringOutput:
    """Scatter every channel of a signal in consecutive, independent segments.

    A trailing partial segment is dropped (and reported). The result equals
    the frame-wise concatenation of :func:`scatter_segment` calls.
    """
    if signal.sample_rate != config.input_rate:
        raise SignalError(f"signal rate {signal.sample_rate} != config rate {config.input_rate}")
    fb = fb or build_filterbank(config)
    n = config.segment_len
    n_seg = signal.n_samples // n
    if n_seg < 1:
        raise SignalError(f"signal of {signal.n_samples} samples is shorter than one segment ({n})")
    rest = signal.n_samples - n_seg * n
    if rest:
        log.warning("dropping trailing %.4g s that does not fill a segment", rest / signal.sample_rate)
    rows = signal.data[:, :n_seg * n].reshape(signal.n_channels * n_seg, n)
    paths = enumerate_paths(config)
    batch_rows = batch_rows or max(1, MAX_BATCH_SAMPLES // config.padded_len)
    parts = [_scatter_rows(rows[i:i + batch_rows], fb, paths) for i in range(0, rows.shape[0], batch_rows)]
    s = np.concatenate(parts, axis=0)  # [channels * segments, paths, frames]
    c, p, t = signal.n_channels, len(paths), config.frames_per_segment
    coeffs = s.reshape(c, n_seg, p, t).transpose(0, 2, 1, 3).reshape(c, p, n_seg * t)
    return ScatteringOutput(coeffs, config.F_o, paths, rest / signal.sample_rate)
