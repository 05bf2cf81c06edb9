"""Trial records: one EEG recording with the competing audio streams."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

from ..sigkit import Signal, SignalError


class CorpusError(ValueError):
    """A corpus, manifest or record violates its invariants."""


@dataclass
class TrialRecord:
    subject_id: str
    trial_id: str
    eeg: Signal
    audios: List[Signal]
    attended: int
    speaker_ids: List[str]
    duration_s: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        check_trial_shape(self.trial_id, self.attended, self.speaker_ids,
                          [a.duration for a in self.audios], self.eeg.duration,
                          1.0 / self.eeg.sample_rate)
        for a in self.audios:
            if a.n_channels != 1:
                raise CorpusError(f"trial {self.trial_id}: audio streams must be mono")

    @property
    def n_speakers(self) -> int:
        return len(self.audios)


def check_trial_shape(trial_id, attended, speaker_ids, audio_durations, eeg_duration, eeg_step):
    """Invariants shared by in-memory records and manifest entries."""
    n = len(audio_durations)
    if n < 2:
        raise CorpusError(f"trial {trial_id}: need at least two audio streams, got {n}")
    if len(speaker_ids) != n:
        raise CorpusError(f"trial {trial_id}: {len(speaker_ids)} speaker ids for {n} audio streams")
    if len(set(speaker_ids)) != n:
        raise CorpusError(f"trial {trial_id}: speaker ids must be distinct")
    if not (0 <= attended < n):
        raise CorpusError(f"trial {trial_id}: attended index {attended} out of range")
    d0 = audio_durations[0]
    if any(abs(d - d0) > 1e-9 for d in audio_durations):
        raise CorpusError(f"trial {trial_id}: audio durations differ: {audio_durations}")
    if abs(eeg_duration - d0) > eeg_step + 1e-9:
        raise CorpusError(f"trial {trial_id}: EEG lasts {eeg_duration} s but audio {d0} s")


__all__ = ["CorpusError", "SignalError", "TrialRecord", "check_trial_shape"]
