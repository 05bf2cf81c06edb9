"""Synthetic attention trials with a known linear stimulus-response model.

Each speaker is pink noise at 16384 Hz, amplitude-modulated by a random
narrow-band envelope centred on one of the configured modulation rates. Which
rate the attended speaker carries alternates every two trials, so over a
subject's trials the attended rate is balanced and the audio alone says
nothing about the label. The 128 Hz EEG is

    eeg_c = h_c * env_attended + leak * g_c * env_unattended + noise_c

with per-subject kernels ``h_c``, ``g_c`` and white noise scaled to the
requested SNR (signal power over noise power, across all channels). Half of
the noise power is common to all channels, as volume conduction makes real
EEG noise spatially correlated; averaging channels therefore does not raise
the SNR by the channel count.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence`` with
entropy ``seed`` and spawn key ``(subject, trial, stream)``. Subject kernels use
the reserved trial key ``KERNEL_KEY`` so they do not depend on the trial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.fft as sfft

from ..sigkit import Kind, Signal
from .records import CorpusError, TrialRecord

AUDIO_RATE = 16384
EEG_RATE = 128
KERNEL_KEY = 2 ** 32 - 1
ENV_BANDWIDTH = 0.25  # Hz, std of the Gaussian envelope spectrum
ENV_DEPTH = 0.5
PINK_FLOOR_HZ = 20.0
NOISE_COHERENCE = 0.5  # share of noise power common to all channels

STREAM_CARRIER = 0
STREAM_ENVELOPE = 1
STREAM_NOISE = 2


@dataclass(frozen=True)
class SynthParams:
    seed: int = 0
    n_subjects: int = 8
    trials_per_subject: int = 20
    duration_s: float = 50.0
    mod_rates: Tuple[float, float] = (3.0, 5.0)
    trf_length_s: float = 0.25
    snr_db: float = 10.0
    leak: float = 0.2
    n_channels: int = 64
    speaker_pairs: int = 1

    def __post_init__(self):
        if len(self.mod_rates) != 2 or self.mod_rates[0] == self.mod_rates[1]:
            raise CorpusError(f"mod_rates must be two distinct rates, got {self.mod_rates}")
        if not all(0 < r < EEG_RATE / 2 for r in self.mod_rates):
            raise CorpusError("mod_rates must lie inside the EEG band")
        if not math.isfinite(self.snr_db):
            raise CorpusError("snr_db must be finite")
        if not (0 <= self.leak < 1):
            raise CorpusError(f"leak must lie in [0, 1), got {self.leak}")
        if self.duration_s <= 0 or self.duration_s * EEG_RATE != int(self.duration_s * EEG_RATE):
            raise CorpusError("duration must be a positive multiple of the EEG sample period")
        if min(self.n_subjects, self.trials_per_subject, self.n_channels, self.speaker_pairs) < 1:
            raise CorpusError("counts must be positive")
        if self.trf_length_s <= 0:
            raise CorpusError("trf_length_s must be positive")

    @property
    def n_audio(self) -> int:
        return int(round(self.duration_s * AUDIO_RATE))

    @property
    def n_eeg(self) -> int:
        return int(round(self.duration_s * EEG_RATE))


def rng_for(params: SynthParams, subject: int, trial: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(params.seed, spawn_key=(subject, trial, stream))
    return np.random.Generator(np.random.PCG64(ss))


def subject_kernels(params: SynthParams, subject: int) -> Tuple[np.ndarray, np.ndarray]:
    """Attended and unattended response kernels, ``[channels, taps]`` each.

    Every kernel is a smooth positive bump at a subject-specific latency,
    scaled by a channel gain that is mostly positive, plus a small
    channel-specific ripple.
    """
    taps = max(1, int(round(params.trf_length_s * EEG_RATE)))
    t = np.arange(taps) / EEG_RATE
    out = []
    for which in (0, 1):
        rng = rng_for(params, subject, KERNEL_KEY, which)
        latency = rng.uniform(0.06, 0.14)
        width = rng.uniform(0.02, 0.04)
        bump = np.exp(-0.5 * ((t - latency) / width) ** 2)
        gain = 1.0 + 0.5 * rng.standard_normal(params.n_channels)
        ripple = 0.1 * rng.standard_normal((params.n_channels, taps)) * bump
        k = gain[:, None] * bump[None, :] + ripple
        out.append(k / np.sqrt(np.sum(bump ** 2)))
    return out[0], out[1]


def _narrowband(rng: np.random.Generator, n_audio: int, n_eeg: int, rate_hz: float):
    """A unit-variance random process concentrated around ``rate_hz``, on both grids."""
    n_bins = n_eeg // 2 + 1
    f = np.arange(n_bins) * EEG_RATE / n_eeg
    shape = np.exp(-0.5 * ((f - rate_hz) / ENV_BANDWIDTH) ** 2)
    spec = shape * (rng.standard_normal(n_bins) + 1j * rng.standard_normal(n_bins))
    spec[0] = 0.0
    spec[-1] = spec[-1].real if n_eeg % 2 == 0 else spec[-1]
    slow = sfft.irfft(spec, n=n_eeg)
    scale = slow.std()
    slow /= scale
    # the same band-limited process evaluated on the audio grid
    fast = sfft.irfft(spec / scale, n=n_audio) * (n_audio / n_eeg)
    return fast, slow


def _pink(rng: np.random.Generator, n: int) -> np.ndarray:
    spec = rng.standard_normal(n // 2 + 1) + 1j * rng.standard_normal(n // 2 + 1)
    f = np.arange(n // 2 + 1) * AUDIO_RATE / n
    spec /= np.sqrt(np.maximum(f, PINK_FLOOR_HZ))
    spec[0] = 0.0
    x = sfft.irfft(spec, n=n)
    return x / x.std()


def attended_rate_index(subject: int, trial: int) -> int:
    """Index into ``mod_rates`` of the attended speaker's rate."""
    return (trial // 2 + subject) % 2


def synth_envelopes(params: SynthParams, subject: int, trial: int, attended: int):
    """Speaker envelopes on the audio and EEG grids and the rate of each speaker."""
    k = attended_rate_index(subject, trial)
    rates = [params.mod_rates[1 - k], params.mod_rates[1 - k]]
    rates[attended] = params.mod_rates[k]
    rng = rng_for(params, subject, trial, STREAM_ENVELOPE)
    fast, slow = [], []
    for r in rates:
        a, e = _narrowband(rng, params.n_audio, params.n_eeg, r)
        fast.append(np.maximum(1.0 + ENV_DEPTH * a, 0.05))
        slow.append(np.maximum(1.0 + ENV_DEPTH * e, 0.05))
    return fast, slow, rates


def _causal_filter(kernels: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Row-wise causal convolution of ``x`` with every kernel, trimmed to ``len(x)``."""
    n = x.shape[0]
    m = n + kernels.shape[1] - 1
    nfft = sfft.next_fast_len(m, real=True)
    y = sfft.irfft(sfft.rfft(kernels, nfft, axis=-1) * sfft.rfft(x, nfft)[None, :], nfft, axis=-1)
    return y[:, :n]


def synth_trial(params: SynthParams, subject: int, trial: int, attended: int) -> TrialRecord:
    """Generate one trial. Deterministic in ``(params, subject, trial, attended)``."""
    if attended not in (0, 1):
        raise CorpusError(f"attended must be 0 or 1, got {attended}")
    fast, slow, rates = synth_envelopes(params, subject, trial, attended)
    rng_c = rng_for(params, subject, trial, STREAM_CARRIER)
    audios = [Signal(_pink(rng_c, params.n_audio) * env, AUDIO_RATE, Kind.AUDIO) for env in fast]

    h, g = subject_kernels(params, subject)
    att, unatt = slow[attended], slow[1 - attended]
    clean = _causal_filter(h, att - att.mean()) + params.leak * _causal_filter(g, unatt - unatt.mean())
    rng_n = rng_for(params, subject, trial, STREAM_NOISE)
    common = rng_n.standard_normal(clean.shape[1])
    noise = (math.sqrt(NOISE_COHERENCE) * common[None, :]
             + math.sqrt(1 - NOISE_COHERENCE) * rng_n.standard_normal(clean.shape))
    p_sig = np.mean(clean ** 2)
    noise *= math.sqrt(p_sig / 10 ** (params.snr_db / 10))
    eeg = Signal(clean + noise, EEG_RATE, Kind.EEG)

    pair = trial % params.speaker_pairs
    speakers = [f"pair{pair}_rate{r:g}" for r in rates]
    return TrialRecord(
        subject_id=f"S{subject:02d}", trial_id=f"S{subject:02d}_T{trial:03d}", eeg=eeg, audios=audios,
        attended=attended, speaker_ids=speakers, duration_s=params.duration_s,
        meta={"mod_rates": rates, "seed": params.seed, "subject": subject, "trial": trial},
    )


def attended_for(params: SynthParams, subject: int, trial: int) -> int:
    """Balanced attention labels: alternate by trial, phase set by the subject."""
    return (trial + subject) % 2
