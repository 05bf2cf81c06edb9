import json

import numpy as np
import pytest
from scipy import signal as sps
from scipy.io import wavfile

from aadscat.corpus import (CorpusError, ManifestError, SynthParams, TrialRecord, attended_for, load_corpus,
                            synth_envelopes, synth_trial, write_raw_corpus, write_tensor)
from aadscat.sigkit import Kind, Signal


def small(**kw):
    base = dict(seed=3, n_subjects=2, trials_per_subject=4, duration_s=10.0)
    base.update(kw)
    return SynthParams(**base)


def test_synth_is_deterministic():
    p = small()
    a, b = synth_trial(p, 1, 2, 0), synth_trial(p, 1, 2, 0)
    assert np.array_equal(a.eeg.data, b.eeg.data)
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a.audios, b.audios))
    c = synth_trial(small(seed=4), 1, 2, 0)
    assert not np.array_equal(a.eeg.data, c.eeg.data)


def test_trial_shapes():
    r = synth_trial(small(), 0, 0, 1)
    assert r.eeg.data.shape == (64, 1280) and r.eeg.sample_rate == 128.0
    assert [a.n_samples for a in r.audios] == [163840, 163840]
    assert r.attended == 1 and r.n_speakers == 2


def _best_corr(x, y, max_lag):
    # plain Pearson correlation of x delayed against y, maximised over non-negative lags
    return max(abs(np.corrcoef(x[:x.size - k], y[k:])[0, 1]) for k in range(max_lag + 1))


def test_high_snr_eeg_follows_attended_envelope():
    p = small(leak=0.0, snr_db=40.0, duration_s=20.0)
    for trial in range(4):
        att = attended_for(p, 0, trial)
        r = synth_trial(p, 0, trial, att)
        _, slow, _ = synth_envelopes(p, 0, trial, att)
        mean = r.eeg.data.mean(axis=0)
        ra = _best_corr(slow[att], mean, 32)
        ru = _best_corr(slow[1 - att], mean, 32)
        assert ra > 3 * ru


def test_low_snr_eeg_is_noise():
    p = small(leak=0.0, snr_db=-40.0, duration_s=20.0)
    r = synth_trial(p, 0, 0, 0)
    _, slow, _ = synth_envelopes(p, 0, 0, 0)
    assert abs(np.corrcoef(slow[0], r.eeg.data.mean(axis=0))[0, 1]) < 0.05


def test_envelope_spectrum_peaks_at_modulation_rate():
    p = small(duration_s=40.0)
    _, slow, rates = synth_envelopes(p, 0, 0, 0)
    for env, rate in zip(slow, rates):
        f, pxx = sps.welch(env - env.mean(), fs=128.0, nperseg=1024)
        assert abs(f[np.argmax(pxx)] - rate) <= 0.5


def test_attended_rate_is_balanced_per_subject():
    p = small()
    for s in range(2):
        rates = [synth_envelopes(p, s, t, attended_for(p, s, t))[2][attended_for(p, s, t)] for t in range(4)]
        assert sorted(rates) == [3.0, 3.0, 5.0, 5.0]


def test_subject_kernels_do_not_depend_on_trial_count():
    a = synth_trial(small(trials_per_subject=4), 1, 0, 0)
    b = synth_trial(small(trials_per_subject=9), 1, 0, 0)
    assert np.array_equal(a.eeg.data, b.eeg.data)


@pytest.mark.parametrize("kw", [dict(mod_rates=(3.0, 3.0)), dict(mod_rates=(3.0, 80.0)), dict(leak=1.0),
                                dict(snr_db=float("inf")), dict(duration_s=0.0), dict(n_subjects=0),
                                dict(trf_length_s=0.0)])
def test_bad_synth_params(kw):
    with pytest.raises(CorpusError):
        small(**kw)


def test_bad_attended_index():
    with pytest.raises(CorpusError):
        synth_trial(small(), 0, 0, 2)


def test_record_checks_audio_durations():
    eeg = Signal(np.zeros((2, 128)), 128.0, Kind.EEG)
    a = Signal(np.zeros(1024), 1024.0, Kind.AUDIO)
    b = Signal(np.zeros(2048), 1024.0, Kind.AUDIO)
    with pytest.raises(CorpusError, match="audio durations differ"):
        TrialRecord("S", "T", eeg, [a, b], 0, ["x", "y"], 1.0)
    with pytest.raises(CorpusError, match="distinct"):
        TrialRecord("S", "T", eeg, [a, a], 0, ["x", "x"], 1.0)
    with pytest.raises(CorpusError, match="out of range"):
        TrialRecord("S", "T", eeg, [a, a], 2, ["x", "y"], 1.0)


@pytest.fixture(scope="module")
def raw_corpus(tmp_path_factory):
    p = small(duration_s=2.0)
    recs = [synth_trial(p, s, t, attended_for(p, s, t)) for s in range(2) for t in range(4)]
    out = tmp_path_factory.mktemp("raw")
    return write_raw_corpus(recs, out), recs


def test_manifest_roundtrip(raw_corpus):
    path, recs = raw_corpus
    c = load_corpus(path)
    assert len(c) == 8 and c.subjects == ["S00", "S01"]
    got = c.load_trial(c.by_id()["S01_T002"])
    want = recs[6]
    assert got.attended == want.attended and got.speaker_ids == want.speaker_ids
    assert np.allclose(got.eeg.data, want.eeg.data, rtol=1e-6, atol=1e-6)


def _edit(path, tmp_path, fn):
    doc = json.loads(path.read_text())
    fn(doc)
    for t in doc["trials"]:
        t["eeg"] = str(path.parent / t["eeg"])
        t["audios"] = [str(path.parent / a) for a in t["audios"]]
    new = tmp_path / "manifest.json"
    new.write_text(json.dumps(doc))
    return new


def test_missing_file_is_named(raw_corpus, tmp_path):
    path, _ = raw_corpus
    new = _edit(path, tmp_path, lambda d: d["trials"][3].update(eeg="tensors/nope.aadt"))
    with pytest.raises(ManifestError, match="nope.aadt"):
        load_corpus(new)


def test_mismatched_audio_durations(raw_corpus, tmp_path):
    path, _ = raw_corpus
    short = write_tensor(np.zeros(16384), tmp_path / "short.aadt", {"sample_rate": 16384.0})
    new = _edit(path, tmp_path, lambda d: d["trials"][0]["audios"].__setitem__(1, str(short)))
    with pytest.raises(CorpusError, match="audio durations differ"):
        load_corpus(new)


def test_duplicate_trial_id(raw_corpus, tmp_path):
    path, _ = raw_corpus
    new = _edit(path, tmp_path, lambda d: d["trials"][1].update(trial_id=d["trials"][0]["trial_id"]))
    with pytest.raises(ManifestError, match="duplicate"):
        load_corpus(new)


def test_schema_violation(raw_corpus, tmp_path):
    path, _ = raw_corpus
    new = _edit(path, tmp_path, lambda d: d.update(preprocessing_tag="mystery"))
    with pytest.raises(ManifestError, match="schema"):
        load_corpus(new)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ManifestError, match="invalid JSON"):
        load_corpus(bad)


def test_wave_audio_is_accepted(raw_corpus, tmp_path):
    path, recs = raw_corpus
    r = recs[0]
    names = []
    for i, a in enumerate(r.audios):
        pcm = np.clip(a.data[0] / np.abs(a.data[0]).max(), -1, 1)
        wavfile.write(tmp_path / f"a{i}.wav", 16384, (pcm * 32767).astype(np.int16))
        names.append(str(tmp_path / f"a{i}.wav"))
    new = _edit(path, tmp_path, lambda d: d["trials"][0].update(audios=names))
    c = load_corpus(new)
    rec = c.load_trial(c.entries[0])
    assert rec.audios[0].sample_rate == 16384.0
    assert np.max(np.abs(rec.audios[0].data)) <= 1.0
