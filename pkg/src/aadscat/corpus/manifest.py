"""Corpus manifests: a JSON index of trials stored as AADT tensors.

A manifest lists, per trial, the EEG tensor and one tensor (or mono PCM
wave file) per competing speaker, with the attended index and speaker ids.
Paths are relative to the manifest's directory. Every tensor's sidecar holds
its ``sample_rate`` (raw signals) or ``frame_rate`` (feature tensors).

``offset_s`` records where the trial starts in the original recording, so
users converting real data can document how they cut trials.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional

import jsonschema
import numpy as np
from scipy.io import wavfile

from ..sigkit import Kind, Signal
from .records import CorpusError, TrialRecord, check_trial_shape
from .tensorio import TensorFormatError, read_dims, read_meta, read_tensor, write_tensor

MANIFEST_VERSION = 1
PREPROCESSING_TAGS = ("raw", "baseline", "scattering", "ssq")

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "AAD corpus manifest",
    "type": "object",
    "required": ["version", "dataset_name", "preprocessing_tag", "trials"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": MANIFEST_VERSION},
        "dataset_name": {"type": "string", "minLength": 1},
        "preprocessing_tag": {"enum": list(PREPROCESSING_TAGS)},
        "meta": {"type": "object"},
        "trials": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["subject_id", "trial_id", "eeg", "audios", "attended", "speaker_ids",
                             "duration_s"],
                "additionalProperties": False,
                "properties": {
                    "subject_id": {"type": "string", "minLength": 1},
                    "trial_id": {"type": "string", "minLength": 1},
                    "eeg": {"type": "string"},
                    "audios": {"type": "array", "minItems": 2, "items": {"type": "string"}},
                    "attended": {"type": "integer", "minimum": 0},
                    "speaker_ids": {"type": "array", "minItems": 2, "items": {"type": "string"}},
                    "duration_s": {"type": "number", "exclusiveMinimum": 0},
                    "offset_s": {"type": "number", "minimum": 0},
                    "meta": {"type": "object"},
                },
            },
        },
    },
}


class ManifestError(CorpusError):
    pass


@dataclass(frozen=True)
class TrialEntry:
    """Manifest metadata of one trial with resolved file paths."""

    subject_id: str
    trial_id: str
    eeg: Path
    audios: List[Path]
    attended: int
    speaker_ids: List[str]
    duration_s: float
    offset_s: float = 0.0
    meta: dict = field(default_factory=dict)


def _rate(path: Path, meta: dict) -> float:
    for key in ("sample_rate", "frame_rate"):
        if key in meta:
            return float(meta[key])
    raise ManifestError(f"{path}: sidecar has neither sample_rate nor frame_rate")


def read_wav(path) -> Signal:
    """Mono PCM wave file as a float audio signal (integers scaled to [-1, 1))."""
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ManifestError(f"{path}: expected a mono wave file, got {data.shape[1]} channels")
    if np.issubdtype(data.dtype, np.integer):
        info = np.iinfo(data.dtype)
        data = (data.astype(np.float64) - (info.max + info.min + 1) / 2) / ((info.max - info.min + 1) / 2)
    return Signal(data.astype(np.float64), float(rate), Kind.AUDIO)


def _probe(path: Path):
    """``(duration_s, step_s)`` of a tensor or wave file without loading the payload."""
    if not path.exists():
        raise ManifestError(f"missing file: {path}")
    if path.suffix.lower() == ".wav":
        rate, data = wavfile.read(path, mmap=True)
        return data.shape[0] / rate, 1.0 / rate
    try:
        dims = read_dims(path)
    except TensorFormatError as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    if not dims:
        raise ManifestError(f"{path}: scalar tensor has no time axis")
    rate = _rate(path, read_meta(path))
    return dims[-1] / rate, 1.0 / rate


@dataclass
class Corpus:
    """A validated manifest. Trials are loaded on demand."""

    dataset_name: str
    preprocessing_tag: str
    entries: List[TrialEntry]
    root: Path
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TrialEntry]:
        return iter(self.entries)

    @property
    def subjects(self) -> List[str]:
        return sorted({e.subject_id for e in self.entries})

    def by_id(self) -> Dict[str, TrialEntry]:
        return {e.trial_id: e for e in self.entries}

    def load_trial(self, entry: TrialEntry) -> TrialRecord:
        """Load a raw trial as signals."""
        if self.preprocessing_tag != "raw":
            raise CorpusError(f"corpus holds {self.preprocessing_tag} features; use load_features")
        eeg_meta = read_meta(entry.eeg)
        eeg = Signal(read_tensor(entry.eeg).astype(np.float64), _rate(entry.eeg, eeg_meta), Kind.EEG)
        audios = []
        for p in entry.audios:
            if p.suffix.lower() == ".wav":
                audios.append(read_wav(p))
            else:
                audios.append(Signal(read_tensor(p).astype(np.float64), _rate(p, read_meta(p)), Kind.AUDIO))
        return TrialRecord(entry.subject_id, entry.trial_id, eeg, audios, entry.attended,
                           list(entry.speaker_ids), entry.duration_s, dict(entry.meta))

    def load_features(self, entry: TrialEntry):
        """``(eeg, [audio...], meta_eeg, [meta_audio...])`` arrays of a preprocessed trial."""
        eeg = read_tensor(entry.eeg)
        audios = [read_tensor(p) for p in entry.audios]
        return eeg, audios, read_meta(entry.eeg), [read_meta(p) for p in entry.audios]


def load_corpus(manifest_path, check_files: bool = True) -> Corpus:
    """Parse and validate a manifest.

    Raises :class:`ManifestError` on schema violations, missing or corrupt
    files and duplicate trial ids, and :class:`CorpusError` when a trial's
    streams disagree in duration.
    """
    manifest_path = Path(manifest_path)
    try:
        with open(manifest_path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ManifestError(f"missing file: {manifest_path}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON ({exc})") from exc
    try:
        jsonschema.validate(doc, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ManifestError(f"{manifest_path}: schema violation at {where}: {exc.message}") from exc

    root = manifest_path.parent
    entries = []
    seen = set()
    for t in doc["trials"]:
        if t["trial_id"] in seen:
            raise ManifestError(f"duplicate trial_id {t['trial_id']!r}")
        seen.add(t["trial_id"])
        entry = TrialEntry(t["subject_id"], t["trial_id"], root / t["eeg"], [root / a for a in t["audios"]],
                           t["attended"], list(t["speaker_ids"]), float(t["duration_s"]),
                           float(t.get("offset_s", 0.0)), dict(t.get("meta", {})))
        if check_files:
            eeg_dur, eeg_step = _probe(entry.eeg)
            audio_durs = [_probe(p)[0] for p in entry.audios]
            check_trial_shape(entry.trial_id, entry.attended, entry.speaker_ids, audio_durs, eeg_dur, eeg_step)
            if abs(audio_durs[0] - entry.duration_s) > eeg_step + 1e-9:
                raise CorpusError(f"trial {entry.trial_id}: declared duration {entry.duration_s} s, "
                                  f"files last {audio_durs[0]} s")
        else:
            check_trial_shape(entry.trial_id, entry.attended, entry.speaker_ids,
                              [entry.duration_s] * len(entry.audios), entry.duration_s, 0.0)
        entries.append(entry)
    return Corpus(doc["dataset_name"], doc["preprocessing_tag"], entries, root, dict(doc.get("meta", {})))


def write_manifest(path, dataset_name: str, preprocessing_tag: str, trials: List[dict],
                   meta: Optional[dict] = None) -> Path:
    doc = {"version": MANIFEST_VERSION, "dataset_name": dataset_name,
           "preprocessing_tag": preprocessing_tag, "trials": trials}
    if meta:
        doc["meta"] = meta
    jsonschema.validate(doc, MANIFEST_SCHEMA)
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    return path


def write_raw_corpus(records: List[TrialRecord], out_dir, dataset_name: str = "synthetic",
                     meta: Optional[dict] = None) -> Path:
    """Store raw trials as AADT tensors plus ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    (out / "tensors").mkdir(parents=True, exist_ok=True)
    trials = []
    for r in records:
        eeg_rel = f"tensors/{r.trial_id}_eeg.aadt"
        write_tensor(r.eeg.data, out / eeg_rel, {"sample_rate": r.eeg.sample_rate, "kind": "eeg",
                                                 "channels": [f"ch{i:02d}" for i in range(r.eeg.n_channels)]})
        audio_rel = []
        for i, a in enumerate(r.audios):
            rel = f"tensors/{r.trial_id}_audio{i}.aadt"
            write_tensor(a.data, out / rel, {"sample_rate": a.sample_rate, "kind": "audio",
                                             "speaker_id": r.speaker_ids[i]})
            audio_rel.append(rel)
        trials.append({"subject_id": r.subject_id, "trial_id": r.trial_id, "eeg": eeg_rel, "audios": audio_rel,
                       "attended": r.attended, "speaker_ids": list(r.speaker_ids),
                       "duration_s": r.duration_s, "meta": _jsonable(r.meta)})
    return write_manifest(out / "manifest.json", dataset_name, "raw", trials, meta)


def _jsonable(d: dict) -> dict:
    return json.loads(json.dumps(d, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))
