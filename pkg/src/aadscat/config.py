"""Pipeline configuration: a JSON file checked against a published schema.

Command-line flags override values from the file. The resolved configuration
is hashed (SHA-256 of its canonical JSON) for the provenance record.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import jsonschema

from .evaluation.splits import STRATEGIES

FRONTEND_CHOICES = ("baseline", "scattering", "ssq")

_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

PIPELINE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "aadscat pipeline configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "frontend": {"enum": list(FRONTEND_CHOICES)},
        "scattering": {
            "type": "object", "additionalProperties": False,
            "properties": {"Q_e": _POS_INT, "Q_a": _POS_INT, "F_o": _POS_NUM},
        },
        "baseline": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "out_rate": _POS_NUM,
                "band": {"type": "array", "items": _POS_NUM, "minItems": 2, "maxItems": 2},
                "order": _POS_INT,
            },
        },
        "ssq": {
            "type": "object", "additionalProperties": False,
            "properties": {"eeg_window": _POS_INT, "eeg_hop": _POS_INT, "audio_window": _POS_INT,
                           "audio_hop": _POS_INT, "n_bins": {"type": "integer", "minimum": 2}},
        },
        "strategy": {"enum": list(STRATEGIES)},
        "L_x": {"type": "array", "items": _POS_NUM, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "manifest": {"type": "string", "minLength": 1},
        "output_dir": {"type": "string", "minLength": 1},
        "shuffle_labels": {"type": "boolean"},
        "synth": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "n_subjects": _POS_INT, "trials_per_subject": _POS_INT, "duration_s": _POS_NUM,
                "mod_rates": {"type": "array", "items": _POS_NUM, "minItems": 2, "maxItems": 2},
                "trf_length_s": _POS_NUM, "snr_db": {"type": "number"},
                "leak": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "n_channels": _POS_INT, "speaker_pairs": _POS_INT,
            },
        },
        "probe": {
            "type": "object", "additionalProperties": False,
            "properties": {"k_eeg": _POS_INT, "k_audio": _POS_INT, "epochs": _POS_INT, "lr": _POS_NUM,
                           "l2": {"type": "number", "minimum": 0}},
        },
        "stats": {
            "type": "object", "additionalProperties": False,
            "properties": {"alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                           "per_subject": {"type": "boolean"}},
        },
    },
}


class PipelineConfigError(ValueError):
    """The configuration file or flags are invalid."""


@dataclass
class PipelineConfig:
    frontend: str = "scattering"
    scattering: dict = field(default_factory=dict)
    baseline: dict = field(default_factory=dict)
    ssq: dict = field(default_factory=dict)
    strategy: str = "trial_wise_5x2"
    L_x: List[float] = field(default_factory=lambda: [2.0])
    seed: int = 0
    manifest: Optional[str] = None
    output_dir: Optional[str] = None
    shuffle_labels: bool = False
    synth: dict = field(default_factory=dict)
    probe: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def sha256(self) -> str:
        return config_hash(self.as_dict())


def config_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def resolve_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> PipelineConfig:
    """Read ``path`` (if any), apply ``overrides`` and validate the result.

    ``None`` values in ``overrides`` mean "flag not given" and are skipped.
    A parameter block for a frontend other than the chosen one is rejected.
    """
    doc: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise PipelineConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise PipelineConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise PipelineConfigError(f"{path}: top level must be an object")
    clean = _drop_none(overrides or {})
    doc = _merge(doc, clean)
    try:
        jsonschema.validate(doc, PIPELINE_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise PipelineConfigError(f"schema violation at {where}: {exc.message}") from exc
    cfg = PipelineConfig(**doc)
    for other in FRONTEND_CHOICES:
        if other != cfg.frontend and getattr(cfg, other):
            raise PipelineConfigError(f"parameter block {other!r} given but the frontend is {cfg.frontend!r}")
    return cfg


def _drop_none(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            v = _drop_none(v)
            if v:
                out[k] = v
        elif v is not None:
            out[k] = v
    return out
