"""Command-line entry point: ``aadscat <subcommand> ...``.

Subcommands
-----------
synth       write a synthetic raw corpus (AADT tensors plus manifest)
preprocess  turn a raw corpus into a feature corpus for one frontend
split       write the split plan of a corpus as JSON
probe       train and score the linear probe on every run of a split plan
stats       paired t-tests between two result tables
channels    scattering channel counts and lag, alone or as the full table
flops       cost of the frontends and of the audited decoders
audit       weight and FLOP audit of the decoder networks
report      per-strategy summaries and tidy accuracy columns

Every subcommand that writes files records them, with their SHA-256, the
resolved configuration and its hash, the seeds and the library versions, in
``run_manifest.json`` inside the output directory.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
invariant failure. Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import scipy

from . import __version__
from .archaudit import (ARCH_NAMES, AuditError, ArchSpec, FRONTENDS as ARCH_FRONTENDS, audit,
                        audit_suite, builtin_arch, format_suite)
from .archaudit.suite import FRONTEND_LABELS, PUBLISHED
from .baseline import EnvelopeConfig, estimate_baseline_cost
from .config import PipelineConfig, PipelineConfigError, config_hash, resolve_config
from .corpus import (CorpusError, SynthParams, TensorFormatError, attended_for, load_corpus, synth_trial,
                     write_manifest, write_raw_corpus, write_tensor)
from .evaluation import (BaselineFrontend, FeatureTrial, ProbeConfig, ProbeError, ScatterFrontend, SplitError,
                         SsqFrontend, TrialRef, WindowError, check_plan, compute_features, make_splits)
from .evaluation.experiment import default_workers, run_plan
from .scattering import ConfigError, ScatterConfig, enumerate_paths, estimate_cost, lag_seconds
from .sigkit import SignalError
from .ssq import SsqConfig
from .stats import RESULT_FIELDS, DegenerateVarianceError, compare_strategy, read_results

log = logging.getLogger("aadscat")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4
RUN_MANIFEST = "run_manifest.json"

PRESET_RATES = {"eeg": 128.0, "audio": 16384.0}

# Printed channel tables: (F_o, printed J, Q, layer counts, printed lag in s)
CHANNEL_TABLES = {
    "audio": [
        (64, 6, 8, (1, 54, 179), 0.06), (32, 7, 8, (1, 62, 237), 0.13), (16, 8, 8, (1, 70, 303), 0.25),
        (8, 9, 8, (1, 78, 377), 0.5), (8, 11, 4, (1, 42, 189), 0.5), (8, 11, 2, (1, 23, 108), 0.5),
        (8, 11, 1, (1, 12, 63), 0.5),
    ],
    "eeg": [
        (64, 1, 8, (1, 7, 0), 0.06), (32, 2, 8, (1, 7, 0), 0.13), (16, 3, 8, (1, 14, 9), 0.25),
        (8, 4, 8, (1, 22, 27), 0.5), (8, 4, 4, (1, 14, 14), 0.5), (8, 4, 2, (1, 8, 11), 0.5),
        (8, 4, 1, (1, 5, 7), 0.5),
    ],
}

# frame rate of each audited scattering variant (EEG and audio use the same one)
SCAT_VARIANT_RATE = {"scat88": 8.0, "scat1616": 16.0}
N_SPEAKERS = 2
N_EEG = 64


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


# ------------------------------------------------------------------ helpers

def _emit_error(code: int, exc: BaseException, subcommand: Optional[str]) -> int:
    kind = {EXIT_CONFIG: "config_error", EXIT_DATA: "data_error", EXIT_INVARIANT: "invariant_failure"}[code]
    diag = {"status": "error", "kind": kind, "exit_code": code, "subcommand": subcommand,
            "exception": type(exc).__name__, "message": str(exc)}
    print(json.dumps(diag, sort_keys=True), file=sys.stderr)
    return code


def _warn(message: str, **extra) -> None:
    print(json.dumps({"status": "warning", "message": message, **extra}, sort_keys=True), file=sys.stderr)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> dict:
    return {"aadscat": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "jsonschema": metadata.version("jsonschema"), "python": platform.python_version()}


def write_provenance(out_dir: Path, subcommand: str, config: dict, seeds: dict, inputs: Optional[dict] = None) -> Path:
    """Add this subcommand's entry to ``run_manifest.json`` and list every file under ``out_dir``."""
    out_dir = Path(out_dir)
    path = out_dir / RUN_MANIFEST
    doc = {}
    if path.exists():
        with open(path) as fh:
            doc = json.load(fh)
    files = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != RUN_MANIFEST)
    doc.setdefault("runs", {})[subcommand] = {
        "config": config, "config_sha256": config_hash(config), "seeds": seeds,
        "inputs": inputs or {},
    }
    doc["versions"] = versions()
    doc["outputs"] = [{"path": p.relative_to(out_dir).as_posix(), "sha256": _sha256_file(p)} for p in files]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out_dir(cfg: PipelineConfig) -> Path:
    if not cfg.output_dir:
        raise PipelineConfigError("no output directory: pass --out or set output_dir in the config")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_from(args, **overrides) -> PipelineConfig:
    overrides.setdefault("output_dir", getattr(args, "out", None))
    return resolve_config(getattr(args, "config", None), overrides)


def frontend_params(cfg: PipelineConfig):
    """Frontend parameter object for the configured frontend."""
    try:
        if cfg.frontend == "scattering":
            return ScatterFrontend(**cfg.scattering)
        if cfg.frontend == "baseline":
            b = dict(cfg.baseline)
            if "band" in b:
                b["band"] = tuple(b["band"])
            fe = BaselineFrontend(**b)
            EnvelopeConfig(band_lo=fe.band[0], band_hi=fe.band[1], out_rate=fe.out_rate, bandpass_order=fe.order)
            return fe
        s = cfg.ssq
        n_bins = s.get("n_bins")
        return SsqFrontend(SsqConfig(window_len=s.get("eeg_window", 64), hop=s.get("eeg_hop", 16), n_bins=n_bins),
                           SsqConfig(window_len=s.get("audio_window", 1024), hop=s.get("audio_hop", 512),
                                     n_bins=n_bins))
    except (ValueError, TypeError) as exc:
        raise PipelineConfigError(f"invalid {cfg.frontend} parameters: {exc}") from exc


def _map(fn, items, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# -------------------------------------------------------------- subcommands

def cmd_synth(args) -> int:
    cfg = _config_from(args, seed=args.seed, synth={
        "n_subjects": args.subjects, "trials_per_subject": args.trials, "duration_s": args.duration,
        "snr_db": args.snr_db, "leak": args.leak, "n_channels": args.channels,
        "speaker_pairs": args.speaker_pairs})
    s = dict(cfg.synth)
    if "mod_rates" in s:
        s["mod_rates"] = tuple(s["mod_rates"])
    try:
        params = SynthParams(seed=cfg.seed, **s)
    except CorpusError as exc:
        raise PipelineConfigError(str(exc)) from exc
    out = _out_dir(cfg)
    keys = [(si, ti) for si in range(params.n_subjects) for ti in range(params.trials_per_subject)]
    records = _map(lambda k: synth_trial(params, k[0], k[1], attended_for(params, k[0], k[1])), keys,
                   default_workers())
    manifest = write_raw_corpus(records, out, "synthetic", {"synth": {**s, "seed": cfg.seed}})
    write_provenance(out, "synth", cfg.as_dict(), {"seed": cfg.seed})
    print(f"wrote {len(records)} trials to {manifest}")
    return EXIT_OK


def _trim_common(ft: FeatureTrial) -> FeatureTrial:
    """Cut both modalities to the same duration, a whole number of the slower frame step."""
    slow = min(ft.eeg_rate, ft.audio_rate)
    ratio_e, ratio_a = ft.eeg_rate / slow, ft.audio_rate / slow
    if abs(ratio_e - round(ratio_e)) > 1e-9 or abs(ratio_a - round(ratio_a)) > 1e-9:
        raise PipelineConfigError(f"frame rates {ft.eeg_rate} and {ft.audio_rate} are not integer multiples")
    n_slow = int(math.floor(ft.duration * slow + 1e-9))
    ne, na = n_slow * int(round(ratio_e)), n_slow * int(round(ratio_a))
    ft.eeg = ft.eeg[:, :ne]
    ft.audios = [a[:, :na] for a in ft.audios]
    return ft


def cmd_preprocess(args) -> int:
    cfg = _config_from(args, frontend=args.frontend, manifest=args.manifest)
    if not cfg.manifest:
        raise PipelineConfigError("no input manifest: pass --manifest or set manifest in the config")
    fe = frontend_params(cfg)
    corpus = load_corpus(cfg.manifest)
    if corpus.preprocessing_tag != "raw":
        raise CorpusError(f"{cfg.manifest} holds {corpus.preprocessing_tag} features, not raw signals")
    out = _out_dir(cfg)
    (out / "tensors").mkdir(exist_ok=True)

    def one(entry):
        ft = _trim_common(compute_features(corpus.load_trial(entry), cfg.frontend, fe))
        eeg_rel = f"tensors/{ft.trial_id}_eeg.aadt"
        write_tensor(ft.eeg.astype(np.float32), out / eeg_rel,
                     {"frame_rate": ft.eeg_rate, "kind": "eeg", "frontend": cfg.frontend, **ft.meta})
        audio_rel = []
        for i, a in enumerate(ft.audios):
            rel = f"tensors/{ft.trial_id}_audio{i}.aadt"
            write_tensor(a.astype(np.float32), out / rel, {"frame_rate": ft.audio_rate, "kind": "audio",
                                                           "frontend": cfg.frontend,
                                                           "speaker_id": ft.speaker_ids[i]})
            audio_rel.append(rel)
        return {"subject_id": ft.subject_id, "trial_id": ft.trial_id, "eeg": eeg_rel, "audios": audio_rel,
                "attended": ft.attended, "speaker_ids": list(ft.speaker_ids),
                "duration_s": ft.eeg.shape[-1] / ft.eeg_rate, "meta": dict(entry.meta)}

    trials = _map(one, corpus.entries, default_workers())
    path = write_manifest(out / "manifest.json", corpus.dataset_name, cfg.frontend, trials,
                          {"source_manifest": str(cfg.manifest), "frontend_params": _params_dict(cfg)})
    load_corpus(path)  # the written corpus must pass its own validation
    write_provenance(out, "preprocess", cfg.as_dict(), {"seed": cfg.seed},
                     {"manifest": {"path": str(cfg.manifest), "sha256": _sha256_file(Path(cfg.manifest))}})
    print(f"wrote {len(trials)} {cfg.frontend} trials to {path}")
    return EXIT_OK


def _params_dict(cfg: PipelineConfig) -> dict:
    return getattr(cfg, cfg.frontend)


def _trial_refs(corpus) -> List[TrialRef]:
    return [TrialRef(e.subject_id, e.trial_id, tuple(e.speaker_ids), int(e.attended)) for e in corpus.entries]


def plan_to_dict(plan) -> dict:
    return {"strategy": plan.strategy, "seed": plan.seed, "leaky": plan.leaky, "notes": plan.notes,
            "runs": [{"repetition": r.repetition, "fold": r.fold, "subject": r.subject,
                      "window_level": r.window_level, "train": list(r.train), "test": list(r.test)}
                     for r in plan.runs]}


def cmd_split(args) -> int:
    cfg = _config_from(args, manifest=args.manifest, strategy=args.strategy, seed=args.seed)
    if not cfg.manifest:
        raise PipelineConfigError("no input manifest: pass --manifest or set manifest in the config")
    corpus = load_corpus(cfg.manifest, check_files=False)
    refs = _trial_refs(corpus)
    plan = make_splits(refs, cfg.strategy, cfg.seed)
    check_plan(plan, refs)
    out = _out_dir(cfg)
    with open(out / f"splits_{cfg.strategy}.json", "w") as fh:
        json.dump(plan_to_dict(plan), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_provenance(out, "split", cfg.as_dict(), {"seed": cfg.seed},
                     {"manifest": {"path": str(cfg.manifest), "sha256": _sha256_file(Path(cfg.manifest))}})
    print(f"{cfg.strategy}: {len(plan.runs)} runs")
    return EXIT_OK


def load_feature_trials(corpus) -> Dict[str, FeatureTrial]:
    if corpus.preprocessing_tag == "raw":
        raise CorpusError("the probe needs a preprocessed corpus; run `aadscat preprocess` first")
    out = {}
    for e in corpus.entries:
        eeg, audios, me, ma = corpus.load_features(e)
        out[e.trial_id] = FeatureTrial(e.subject_id, e.trial_id, eeg.astype(np.float64), float(me["frame_rate"]),
                                       [a.astype(np.float64) for a in audios], float(ma[0]["frame_rate"]),
                                       int(e.attended), tuple(e.speaker_ids), corpus.preprocessing_tag)
    return out


def write_results(path: Path, rows: List[dict]) -> None:
    rows = sorted(rows, key=lambda r: (r["strategy"], r["frontend"], r["L_x"], r["subject"],
                                       r["repetition"], r["fold"]))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(RESULT_FIELDS), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "L_x": repr(float(r["L_x"])), "accuracy": repr(float(r["accuracy"]))})


def cmd_probe(args) -> int:
    probe_over = {"epochs": args.epochs, "k_eeg": args.k_eeg, "k_audio": args.k_audio}
    cfg = _config_from(args, manifest=args.manifest, strategy=args.strategy, seed=args.seed, L_x=args.L_x,
                       shuffle_labels=True if args.shuffle_labels else None, probe=probe_over)
    if not cfg.manifest:
        raise PipelineConfigError("no input manifest: pass --manifest or set manifest in the config")
    pc = ProbeConfig(seed=cfg.seed, **cfg.probe)
    corpus = load_corpus(cfg.manifest)
    features = load_feature_trials(corpus)
    refs = _trial_refs(corpus)
    plan = make_splits(refs, cfg.strategy, cfg.seed)
    check_plan(plan, refs)
    rows = []
    for L_x in cfg.L_x:
        rows += [r.as_dict() for r in run_plan(features, plan, L_x, corpus.preprocessing_tag, pc,
                                               shuffle_labels=cfg.shuffle_labels)]
    if len(rows) != len(plan.runs) * len(cfg.L_x):
        raise InvariantError(f"expected {len(plan.runs) * len(cfg.L_x)} result rows, got {len(rows)}")
    out = _out_dir(cfg)
    name = "results_shuffled.csv" if cfg.shuffle_labels else "results.csv"
    write_results(out / name, rows)
    with open(out / f"splits_{cfg.strategy}.json", "w") as fh:
        json.dump(plan_to_dict(plan), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_provenance(out, "probe", cfg.as_dict(), {"seed": cfg.seed, "probe_seed": pc.seed},
                     {"manifest": {"path": str(cfg.manifest), "sha256": _sha256_file(Path(cfg.manifest))}})
    for L_x in cfg.L_x:
        acc = [r["accuracy"] for r in rows if r["L_x"] == L_x]
        print(f"{corpus.preprocessing_tag} {cfg.strategy} L_x={L_x:g} s: mean accuracy {np.mean(acc):.4f} "
              f"over {len(acc)} runs")
    return EXIT_OK


def cmd_stats(args) -> int:
    stats_over = {"alpha": args.alpha, "per_subject": True if args.per_subject else None}
    cfg = _config_from(args, stats=stats_over)
    alpha = cfg.stats.get("alpha", 0.01)
    per_subject = cfg.stats.get("per_subject", False)
    rows_a, rows_b = read_results(args.a), read_results(args.b)
    groups = sorted({(r["strategy"], r["L_x"]) for r in rows_a} & {(r["strategy"], r["L_x"]) for r in rows_b})
    if not groups:
        raise CorpusError("the two result tables share no (strategy, L_x) group")
    tests = []
    for strategy, L_x in groups:
        ga = [r for r in rows_a if (r["strategy"], r["L_x"]) == (strategy, L_x)]
        gb = [r for r in rows_b if (r["strategy"], r["L_x"]) == (strategy, L_x)]
        entry = {"strategy": strategy, "L_x": L_x,
                 "frontend_a": sorted({r["frontend"] for r in ga}), "frontend_b": sorted({r["frontend"] for r in gb}),
                 "mean_a": float(np.mean([r["accuracy"] for r in ga])),
                 "mean_b": float(np.mean([r["accuracy"] for r in gb]))}
        try:
            entry.update(compare_strategy(ga, gb, strategy, alpha, per_subject))
        except DegenerateVarianceError as exc:
            entry["error"] = str(exc)
        tests.append(entry)
    report = {"alpha": alpha, "per_subject": per_subject, "a": str(args.a), "b": str(args.b), "tests": tests}
    text = json.dumps(report, indent=2, sort_keys=True)
    if cfg.output_dir:
        out = _out_dir(cfg)
        with open(out / "ttest.json", "w") as fh:
            fh.write(text + "\n")
        write_provenance(out, "stats", cfg.as_dict(), {},
                         {"a": {"path": str(args.a), "sha256": _sha256_file(Path(args.a))},
                          "b": {"path": str(args.b), "sha256": _sha256_file(Path(args.b))}})
    print(text)
    return EXIT_OK


def channel_counts(preset: str, Q: int, F_o: float, rate: Optional[float] = None):
    rate = PRESET_RATES[preset] if rate is None else rate
    cfg = ScatterConfig.from_rate(Q, F_o, rate)
    return cfg, enumerate_paths(cfg).counts


def channel_table() -> List[dict]:
    """Every printed row next to the enumerated counts."""
    rows = []
    for preset, table in CHANNEL_TABLES.items():
        for F_o, J_printed, Q, printed, lag_printed in table:
            cfg, counts = channel_counts(preset, Q, F_o)
            rows.append({"preset": preset, "F_o": F_o, "Q": Q, "J": cfg.J, "J_printed": J_printed,
                         "counts": list(counts), "total": sum(counts), "printed": list(printed),
                         "printed_total": sum(printed), "lag_s": lag_seconds(F_o), "lag_printed": lag_printed})
    return rows


def cmd_channels(args) -> int:
    if args.table:
        rows = channel_table()
        if args.json:
            print(json.dumps(rows, indent=2, sort_keys=True))
            return EXIT_OK
        print(f"{'preset':<6} {'F_o':>4} {'Q':>2} {'J':>3} | {'counts':>14} | {'all':>4} | "
              f"{'printed':>14} | {'all':>4} | {'lag':>6}")
        for r in rows:
            c = " ".join(str(x) for x in r["counts"])
            p = " ".join(str(x) for x in r["printed"])
            print(f"{r['preset']:<6} {r['F_o']:>4g} {r['Q']:>2} {r['J']:>3} | {c:>14} | {r['total']:>4} | "
                  f"{p:>14} | {r['printed_total']:>4} | {r['lag_s']:>6.4g}")
        return EXIT_OK
    if args.Q is None or args.Fo is None:
        raise PipelineConfigError("channels needs --Q and --Fo (or --table)")
    rate = PRESET_RATES[args.preset] if args.rate is None else args.rate
    if args.J is not None and rate / 2 ** args.J != args.Fo:
        _warn(f"J={args.J} does not give F_o={args.Fo:g} Hz at {rate:g} Hz; J is derived from F_o instead",
              requested_J=args.J)
    try:
        cfg, counts = channel_counts(args.preset, args.Q, args.Fo, rate)
    except ConfigError as exc:
        raise PipelineConfigError(str(exc)) from exc
    if args.json:
        print(json.dumps({"preset": args.preset, "rate": rate, "Q": args.Q, "F_o": args.Fo, "J": cfg.J,
                          "counts": list(counts), "total": sum(counts), "lag_s": lag_seconds(args.Fo)},
                         sort_keys=True))
    else:
        print(f"{counts[0]} {counts[1]} {counts[2]} | {sum(counts)}")
    return EXIT_OK


def frontend_flops(variant: str) -> Optional[float]:
    """Per-second frontend cost for ``N_SPEAKERS`` audio streams and the EEG; None when not modelled."""
    if variant == "baseline":
        return N_SPEAKERS * estimate_baseline_cost().flops_per_second_window
    if variant in SCAT_VARIANT_RATE:
        F_o = SCAT_VARIANT_RATE[variant]
        audio = estimate_cost(ScatterConfig.from_rate(8, F_o, PRESET_RATES["audio"])).flops_per_second_window
        eeg = estimate_cost(ScatterConfig.from_rate(8, F_o, PRESET_RATES["eeg"])).flops_per_second_window
        return N_SPEAKERS * audio + N_EEG * eeg
    return None


def flops_report(Q: int = 8, F_o: float = 8.0, eeg_channels: int = N_EEG) -> dict:
    audio = estimate_cost(ScatterConfig.from_rate(Q, F_o, PRESET_RATES["audio"]))
    eeg = estimate_cost(ScatterConfig.from_rate(Q, F_o, PRESET_RATES["eeg"]))
    gt = estimate_baseline_cost()
    archs = []
    for row in audit_suite():
        fe = frontend_flops(row.frontend)
        archs.append({"model": row.model, "variant": FRONTEND_LABELS[row.frontend], "status": row.status,
                      "model_flops": row.flops, "frontend_flops": fe,
                      "total_flops": None if row.flops is None or fe is None else row.flops + fe})
    return {
        "scattering_audio": {"Q": Q, "F_o": F_o, "flops": audio.flops_per_second_window, "lag_s": audio.lag_seconds,
                             "breakdown": audio.breakdown},
        "scattering_eeg": {"Q": Q, "F_o": F_o, "channels": eeg_channels,
                           "flops": eeg_channels * eeg.flops_per_second_window, "lag_s": eeg.lag_seconds,
                           "flops_per_channel": eeg.flops_per_second_window},
        "gammatone_envelope": {"flops": gt.flops_per_second_window, "breakdown": gt.breakdown},
        "architectures": archs,
    }


def cmd_flops(args) -> int:
    rep = flops_report(args.Q, args.Fo, args.eeg_channels)
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
        return EXIT_OK
    a, e, g = rep["scattering_audio"], rep["scattering_eeg"], rep["gammatone_envelope"]
    print(f"scattering, one audio stream (Q={a['Q']}, F_o={a['F_o']:g}): {a['flops'] / 1e6:.2f}M FLOPs/s, "
          f"lag {a['lag_s']:g} s")
    print(f"scattering, {e['channels']} EEG channels (Q={e['Q']}, F_o={e['F_o']:g}): {e['flops'] / 1e6:.2f}M FLOPs/s, "
          f"lag {e['lag_s']:g} s")
    print(f"gammatone envelope, one audio stream: {g['flops'] / 1e6:.2f}M FLOPs/s")
    print(f"\n{'model':<12} {'variant':<12} {'model':>9} {'frontend':>9} {'total':>9}")
    for r in rep["architectures"]:
        def fmt(v):
            return f"{v / 1e6:.2f}M" if v is not None else "-"
        print(f"{r['model']:<12} {r['variant']:<12} {fmt(r['model_flops']):>9} {fmt(r['frontend_flops']):>9} "
              f"{fmt(r['total_flops']):>9}")
    return EXIT_OK


def _emit_reports(reports: List[dict], fmt: str, out: Optional[Path], stem: str) -> None:
    if fmt == "json":
        text = json.dumps(reports, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        fields = sorted({k for r in reports for k in r if not isinstance(r[k], (dict, list))})
        lines = [",".join(fields)]
        for r in reports:
            lines.append(",".join("" if r.get(f) is None else str(r.get(f)) for f in fields))
        text = "\n".join(lines) + "\n"
    else:
        text = None
    if text is not None:
        sys.stdout.write(text)
        if out is not None:
            with open(out / f"{stem}.{fmt}", "w") as fh:
                fh.write(text)


def cmd_audit(args) -> int:
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    if args.all:
        rows = audit_suite()
        if args.format == "text":
            print(format_suite(rows))
        _emit_reports([r.as_dict() for r in rows], args.format, out, "audit_suite")
    else:
        if args.spec:
            try:
                spec = ArchSpec.load(args.spec)
            except FileNotFoundError:
                raise PipelineConfigError(f"architecture file not found: {args.spec}") from None
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise PipelineConfigError(f"{args.spec}: malformed architecture ({exc})") from exc
            printed = None
        else:
            if args.arch is None:
                raise PipelineConfigError("audit needs --arch (with --frontend), --spec or --all")
            spec = builtin_arch(args.arch, n=args.n, **ARCH_FRONTENDS[args.frontend])
            printed = next(((pf, pw) for m, fe, pf, pw in PUBLISHED if m == args.arch and fe == args.frontend), None)
        rep = audit(spec)
        d = rep.as_dict()
        if printed is not None:
            d["printed_flops"], d["printed_weights"] = printed
            d["weight_error"] = rep.total_weights / printed[1] - 1.0
        if args.format == "text":
            label = spec.name if args.spec else f"{args.arch} {FRONTEND_LABELS[args.frontend]}"
            line = f"{label}: {rep.total_weights:,} weights, {rep.total_flops / 1e6:.3f}M FLOPs"
            if printed is not None:
                line += f" (printed {printed[1]:,.0f} weights, {d['weight_error']:+.1%})"
            print(line)
            if args.per_layer:
                for lr in rep.per_layer:
                    ld = lr.as_dict()
                    print(f"  {ld['name']:<28} {ld['kind']:<16} {str(tuple(ld['shape'])):<20} "
                          f"{ld['weights']:>10,} {ld['flops']:>14,.0f}")
        else:
            if args.format == "csv" and args.per_layer:
                _emit_reports([lr.as_dict() for lr in rep.per_layer], "csv", out, "audit_layers")
            else:
                _emit_reports([d], args.format, out, "audit")
    if out is not None:
        write_provenance(out, "audit", {"all": args.all, "arch": args.arch, "frontend": args.frontend,
                                        "spec": args.spec, "n": args.n}, {})
    return EXIT_OK


SUMMARY_FIELDS = ("strategy", "frontend", "L_x", "n", "mean", "std", "min", "q25", "median", "q75", "max")


def summarize(rows: List[dict]) -> List[dict]:
    groups: Dict[tuple, List[float]] = {}
    for r in rows:
        groups.setdefault((r["strategy"], r["frontend"], r["L_x"]), []).append(r["accuracy"])
    out = []
    for (strategy, frontend, L_x), acc in sorted(groups.items()):
        a = np.asarray(acc)
        q25, med, q75 = np.quantile(a, [0.25, 0.5, 0.75])
        out.append({"strategy": strategy, "frontend": frontend, "L_x": L_x, "n": int(a.size),
                    "mean": float(a.mean()), "std": float(a.std(ddof=1)) if a.size > 1 else 0.0,
                    "min": float(a.min()), "q25": float(q25), "median": float(med), "q75": float(q75),
                    "max": float(a.max())})
    return out


def cmd_report(args) -> int:
    cfg = _config_from(args)
    rows = []
    for path in args.results:
        try:
            rows += read_results(path)
        except FileNotFoundError:
            raise CorpusError(f"missing result table: {path}") from None
        except (KeyError, ValueError) as exc:
            raise CorpusError(f"{path}: malformed result table ({exc})") from exc
    if not rows:
        raise CorpusError("no result rows")
    out = _out_dir(cfg)
    summary = summarize(rows)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(SUMMARY_FIELDS), lineterminator="\n")
        w.writeheader()
        for s in summary:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in s.items()})
    write_results(out / "accuracies.csv", rows)
    write_provenance(out, "report", cfg.as_dict(), {},
                     {str(p): {"sha256": _sha256_file(Path(p))} for p in args.results})
    for s in summary:
        print(f"{s['strategy']:<22} {s['frontend']:<11} L_x={s['L_x']:<5g} n={s['n']:<4} "
              f"mean {s['mean']:.4f}  median {s['median']:.4f}")
    return EXIT_OK


# ------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"status": "error", "kind": "config_error", "exit_code": EXIT_CONFIG,
                          "exception": "ArgumentError", "message": message, "subcommand": None},
                         sort_keys=True), file=sys.stderr)
        self.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline configuration (JSON); flags override its values")
    common.add_argument("--out", help="output directory")

    p = _Parser(prog="aadscat", description="Scattering features for auditory attention decoding.")
    p.add_argument("--version", action="version", version=f"aadscat {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic raw corpus")
    s.add_argument("--seed", type=int)
    s.add_argument("--subjects", type=int)
    s.add_argument("--trials", type=int, help="trials per subject")
    s.add_argument("--duration", type=float, help="trial duration in seconds")
    s.add_argument("--snr-db", type=float)
    s.add_argument("--leak", type=float)
    s.add_argument("--channels", type=int, help="EEG channels")
    s.add_argument("--speaker-pairs", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("preprocess", parents=[common], help="compute frontend features of a raw corpus")
    s.add_argument("--manifest", help="raw corpus manifest")
    s.add_argument("--frontend", choices=("baseline", "scattering", "ssq"))
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("split", parents=[common], help="write the split plan of a corpus")
    s.add_argument("--manifest")
    s.add_argument("--strategy")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("probe", parents=[common], help="train and score the linear probe")
    s.add_argument("--manifest", help="feature corpus manifest")
    s.add_argument("--strategy")
    s.add_argument("--seed", type=int)
    s.add_argument("--L-x", dest="L_x", type=float, nargs="+", help="decision window lengths in seconds")
    s.add_argument("--shuffle-labels", action="store_true", help="chance-level control")
    s.add_argument("--epochs", type=int)
    s.add_argument("--k-eeg", type=int)
    s.add_argument("--k-audio", type=int)
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("stats", parents=[common], help="paired t-tests between two result tables")
    s.add_argument("--a", required=True, help="results of frontend A")
    s.add_argument("--b", required=True, help="results of frontend B")
    s.add_argument("--alpha", type=float)
    s.add_argument("--per-subject", action="store_true", help="one test per subject instead of pooling")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("channels", help="scattering channel counts per layer")
    s.add_argument("--preset", choices=sorted(PRESET_RATES), default="eeg")
    s.add_argument("--Q", type=int)
    s.add_argument("--J", type=int, help="checked against F_o; J is always derived from the rates")
    s.add_argument("--Fo", type=float)
    s.add_argument("--rate", type=float, help="input sample rate (default from the preset)")
    s.add_argument("--table", action="store_true", help="all printed configurations next to the enumeration")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_channels)

    s = sub.add_parser("flops", help="FLOP estimates of the frontends and decoders")
    s.add_argument("--Q", type=int, default=8)
    s.add_argument("--Fo", type=float, default=8.0)
    s.add_argument("--eeg-channels", type=int, default=N_EEG)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_flops)

    s = sub.add_parser("audit", help="weight and FLOP audit of the decoder networks")
    s.add_argument("--arch", choices=ARCH_NAMES)
    s.add_argument("--frontend", choices=sorted(ARCH_FRONTENDS), default="baseline")
    s.add_argument("--n", type=int, default=2, help="number of speakers")
    s.add_argument("--spec", help="user-defined architecture (JSON)")
    s.add_argument("--all", action="store_true", help="every row of the published table")
    s.add_argument("--format", choices=("text", "json", "csv"), default="text")
    s.add_argument("--per-layer", action="store_true")
    s.add_argument("--out", help="also write the report here")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("report", parents=[common], help="summaries and tidy accuracy columns")
    s.add_argument("--results", nargs="+", required=True)
    s.set_defaults(func=cmd_report)
    return p


CONFIG_ERRORS = (PipelineConfigError, ConfigError, AuditError)
DATA_ERRORS = (CorpusError, TensorFormatError, SplitError, WindowError, ProbeError, SignalError,
               DegenerateVarianceError, FileNotFoundError)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        return _emit_error(EXIT_CONFIG, exc, args.command)
    except DATA_ERRORS as exc:
        return _emit_error(EXIT_DATA, exc, args.command)
    except Exception as exc:  # anything else is a bug or a broken invariant
        log.debug("unexpected failure", exc_info=True)
        return _emit_error(EXIT_INVARIANT, exc, args.command)


if __name__ == "__main__":
    sys.exit(main())
