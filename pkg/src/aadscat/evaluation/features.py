"""Frontend features of whole trials.

A :class:`FeatureTrial` holds one matrix ``[channels, frames]`` for the EEG and
one per speaker, each with its own frame rate. Multi-index outputs (EEG
channel x scattering path, or channel x frequency bin) are flattened
channel-major into the first axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..baseline import EnvelopeConfig, eeg_baseline, gammatone_envelope
from ..scattering import ScatterConfig, build_filterbank, scatter_stream
from ..ssq import SsqConfig, ssq_stft

FRONTENDS = ("baseline", "scattering", "ssq")


@dataclass
class FeatureTrial:
    subject_id: str
    trial_id: str
    eeg: np.ndarray
    eeg_rate: float
    audios: List[np.ndarray]
    audio_rate: float
    attended: int
    speaker_ids: Tuple[str, ...]
    frontend: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return min(self.eeg.shape[-1] / self.eeg_rate, min(a.shape[-1] for a in self.audios) / self.audio_rate)


@dataclass(frozen=True)
class ScatterFrontend:
    Q_e: int = 8
    Q_a: int = 8
    F_o: float = 8.0

    def configs(self, eeg_rate: float, audio_rate: float):
        return (ScatterConfig.from_rate(self.Q_e, self.F_o, eeg_rate),
                ScatterConfig.from_rate(self.Q_a, self.F_o, audio_rate))


@dataclass(frozen=True)
class BaselineFrontend:
    out_rate: float = 64.0
    band: Tuple[float, float] = (1.0, 32.0)
    order: int = 4


@dataclass(frozen=True)
class SsqFrontend:
    eeg: SsqConfig = SsqConfig.eeg()
    audio: SsqConfig = SsqConfig.audio()


def _trial(record, frontend, eeg, eeg_rate, audios, audio_rate, meta=None) -> FeatureTrial:
    return FeatureTrial(record.subject_id, record.trial_id, eeg, eeg_rate, audios, audio_rate,
                        record.attended, tuple(record.speaker_ids), frontend, meta or {})


def scattering_features(record, fe: ScatterFrontend = ScatterFrontend()) -> FeatureTrial:
    ce, ca = fe.configs(record.eeg.sample_rate, record.audios[0].sample_rate)
    se = scatter_stream(record.eeg, ce, build_filterbank(ce))
    fb_a = build_filterbank(ca)
    audios = [scatter_stream(a, ca, fb_a).flat() for a in record.audios]
    meta = {"eeg_paths": len(se.path_table), "audio_paths": audios[0].shape[0]}
    return _trial(record, "scattering", se.flat(), se.frame_rate, audios, fe.F_o, meta)


def baseline_features(record, fe: BaselineFrontend = BaselineFrontend()) -> FeatureTrial:
    eeg = eeg_baseline(record.eeg, fe.band, fe.out_rate, fe.order, n_channels=None)
    cfg = EnvelopeConfig(band_lo=fe.band[0], band_hi=fe.band[1], out_rate=fe.out_rate, bandpass_order=fe.order)
    audios = [gammatone_envelope(a, cfg).data for a in record.audios]
    return _trial(record, "baseline", eeg.data, eeg.sample_rate, audios, fe.out_rate)


def ssq_features(record, fe: SsqFrontend = SsqFrontend()) -> FeatureTrial:
    me = ssq_stft(record.eeg, fe.eeg)
    audios = []
    for a in record.audios:
        m = ssq_stft(a, fe.audio)
        audios.append(m.magnitudes.reshape(-1, m.magnitudes.shape[-1]))
    eeg = me.magnitudes.reshape(-1, me.magnitudes.shape[-1])
    return _trial(record, "ssq", eeg, me.frame_rate, audios, m.frame_rate)


def compute_features(record, frontend: str, params=None) -> FeatureTrial:
    if frontend == "scattering":
        return scattering_features(record, params or ScatterFrontend())
    if frontend == "baseline":
        return baseline_features(record, params or BaselineFrontend())
    if frontend == "ssq":
        return ssq_features(record, params or SsqFrontend())
    raise ValueError(f"unknown frontend {frontend!r}; expected one of {', '.join(FRONTENDS)}")
