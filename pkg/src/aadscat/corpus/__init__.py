"""Trial records, the synthetic generator and on-disk formats."""
from .manifest import (MANIFEST_SCHEMA, Corpus, ManifestError, TrialEntry, load_corpus, read_wav,
                       write_manifest, write_raw_corpus)
from .records import CorpusError, TrialRecord
from .synth import SynthParams, attended_for, subject_kernels, synth_envelopes, synth_trial
from .tensorio import (BadDtypeError, BadMagicError, BadVersionError, TensorFormatError,
                       TrailingDataError, TruncatedError, read_meta, read_tensor, write_tensor)

__all__ = [
    "MANIFEST_SCHEMA", "Corpus", "ManifestError", "TrialEntry", "load_corpus", "read_wav",
    "write_manifest", "write_raw_corpus", "CorpusError", "TrialRecord", "SynthParams", "attended_for",
    "subject_kernels", "synth_envelopes", "synth_trial", "BadDtypeError", "BadMagicError",
    "BadVersionError", "TensorFormatError", "TrailingDataError", "TruncatedError", "read_meta",
    "read_tensor", "write_tensor",
]
