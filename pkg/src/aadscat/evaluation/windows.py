"""Decision windows cut from feature trials.

Window offsets are multiples of the stride, which is snapped to a whole
number of frames of the slower modality (and at least one frame). Both
modalities must then land on whole frames, so the faster frame rate has to
be an integer multiple of the slower one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .features import FeatureTrial


class WindowError(ValueError):
    pass


@dataclass
class DecisionWindow:
    eeg: np.ndarray
    audios: List[np.ndarray]
    label: int
    origin: Tuple[str, float]


@dataclass
class WindowBatch:
    """Per-window summary statistics ready for the probe.

    ``eeg``: ``[windows, 2 * C_e]``; ``audio``: ``[windows, speakers, 2 * C_a]``
    (time-mean then time-standard-deviation of every channel).
    """

    eeg: np.ndarray
    audio: np.ndarray
    labels: np.ndarray
    origins: List[Tuple[str, float]]

    def __len__(self) -> int:
        return self.labels.shape[0]

    def subset(self, idx) -> "WindowBatch":
        idx = np.asarray(idx)
        return WindowBatch(self.eeg[idx], self.audio[idx], self.labels[idx], [self.origins[i] for i in idx])

    @staticmethod
    def concat(batches: List["WindowBatch"]) -> "WindowBatch":
        batches = [b for b in batches if len(b)]
        if not batches:
            raise WindowError("no windows")
        return WindowBatch(np.concatenate([b.eeg for b in batches]), np.concatenate([b.audio for b in batches]),
                           np.concatenate([b.labels for b in batches]),
                           [o for b in batches for o in b.origins])


def _frames(seconds: float, rate: float, what: str) -> int:
    f = seconds * rate
    n = int(round(f))
    if abs(f - n) > 1e-9 or n < 1:
        raise WindowError(f"{what} of {seconds} s is not a whole number (>= 1) of frames at {rate} Hz")
    return n


def window_plan(ft: FeatureTrial, L_x: float, stride: float):
    """``(offsets_s, frames_eeg, frames_audio, step_eeg, step_audio)`` for a trial."""
    slow, fast = sorted((ft.eeg_rate, ft.audio_rate))
    ratio = fast / slow
    if abs(ratio - round(ratio)) > 1e-9:
        raise WindowError(f"frame rates {ft.eeg_rate} and {ft.audio_rate} are not integer multiples")
    le = _frames(L_x, ft.eeg_rate, "window")
    la = _frames(L_x, ft.audio_rate, "window")
    if stride <= 0:
        raise WindowError("stride must be positive")
    step_slow = max(1, int(round(stride * slow)))
    step_s = step_slow / slow
    dur = ft.duration
    if L_x > dur + 1e-9:
        raise WindowError(f"window of {L_x} s is longer than trial {ft.trial_id} ({dur} s)")
    n = int(math.floor((dur - L_x) / step_s + 1e-9)) + 1
    return np.arange(n) * step_s, le, la, int(round(step_s * ft.eeg_rate)), int(round(step_s * ft.audio_rate))


def window_features(ft: FeatureTrial, L_x: float, stride: float) -> List[DecisionWindow]:
    offsets, le, la, se, sa = window_plan(ft, L_x, stride)
    out = []
    for k, off in enumerate(offsets):
        out.append(DecisionWindow(ft.eeg[:, k * se:k * se + le], [a[:, k * sa:k * sa + la] for a in ft.audios],
                                  ft.attended, (ft.trial_id, float(off))))
    return out


def _stats(x: np.ndarray, length: int, step: int, count: int) -> np.ndarray:
    """Time-mean and std of ``count`` windows of ``x`` (``[channels, frames]``) -> ``[count, 2*channels]``."""
    v = sliding_window_view(x, length, axis=-1)[:, ::step][:, :count]  # [C, count, length]
    return np.concatenate([v.mean(-1).T, v.std(-1).T], axis=1)


def window_stats(ft: FeatureTrial, L_x: float, stride: float) -> WindowBatch:
    offsets, le, la, se, sa = window_plan(ft, L_x, stride)
    n = offsets.size
    e = _stats(ft.eeg, le, se, n)
    a = np.stack([_stats(x, la, sa, n) for x in ft.audios], axis=1)
    labels = np.full(n, ft.attended, dtype=np.int64)
    return WindowBatch(e, a, labels, [(ft.trial_id, float(o)) for o in offsets])
