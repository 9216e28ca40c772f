"""Command-line entry points.

Commands: synth, preprocess, train, infer, score, bench, render, gradcheck.
Settings merge as flags > config file (TOML or JSON) > defaults, and every
run writes its effective configuration next to its outputs so the exact run
can be reproduced with ``--config effective_config.json``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_benchmark
from .checkpoint import load_checkpoint
from .errors import MismatchedRecordings, SzDetectError
from .inference import (
    EventList,
    run_ensemble_configs,
    write_hypothesis_tsv,
    write_trace_csv,
)
from .manifest import load_manifest
from .model import ConvSpec, ModelConfig, grad_check
from .montage import MontageSpec
from .preprocess import PreprocessConfig, cached_preprocess, preprocess_pipeline
from .recording import read_annotations, read_raw
from .render import RenderRow, render_timeline
from .scoring import aggregate, format_table, score_recording
from .synth import SyntheticSpec, generate_corpus
from .training import TrainConfig, train_run
from .windowing import WindowSpec


def _load_config_file(path: str) -> dict:
    p = Path(path)
    text = p.read_bytes()
    if p.suffix == ".json":
        return json.loads(text.decode("utf-8"))
    try:
        import tomllib  # Python >= 3.11
    except ImportError:
        import tomli as tomllib
    return tomllib.loads(text.decode("utf-8"))


def _effective(defaults: dict, args: argparse.Namespace) -> dict:
    cfg = dict(defaults)
    file_path = getattr(args, "config", None)
    if file_path:
        file_cfg = _load_config_file(file_path)
        file_cfg.pop("command", None)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise SystemExit(f"config file keys not recognized: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _dump_effective(out_dir: Path, command: str, cfg: dict, artifacts: list[str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": command}
    doc.update(cfg)
    (out_dir / "effective_config.json").write_text(json.dumps(doc, indent=2), encoding="utf-8")
    (out_dir / "artifacts.json").write_text(
        json.dumps({"command": command, "outputs": artifacts}, indent=2), encoding="utf-8"
    )


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise SystemExit(f"expected three comma-separated numbers, got {text!r}")
    return parts[0], parts[1], parts[2]


def _parse_pair(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(text)
    parts = text.split(",")
    return tuple(type_of(x) for x, type_of in zip(parts, (float, float)))


def _model_config(cfg: dict) -> ModelConfig:
    behind, target, ahead = (
        _parse_triple(cfg["window"]) if isinstance(cfg["window"], str) else cfg["window"]
    )
    kernels = _parse_pair(cfg["conv_kernels"])
    widths = _parse_pair(cfg["conv_widths"])
    return ModelConfig(
        n_channels=18,
        patch_len=int(cfg["patch_len"]),
        embed_dim=int(cfg["embed_dim"]),
        conv_spec=ConvSpec((int(kernels[0]), int(kernels[1])), (int(widths[0]), int(widths[1]))),
        n_encoder_layers=int(cfg["encoder_layers"]),
        n_heads=int(cfg["heads"]),
        ffn_dim=int(cfg["ffn_dim"]),
        dropout_rate=float(cfg["dropout"]),
        cross_channel_heads=int(cfg["cross_heads"]),
        window=WindowSpec(behind, target, ahead),
    )


def _load_input_recording(path: str, notch_hz: float):
    """Read a recording file and standardize it unless already montaged."""
    p = Path(path)
    if p.suffix == ".edf":
        from .edf import read_edf

        rec = read_edf(p)
    else:
        rec = read_raw(p)
    montage = MontageSpec()
    if rec.fs == 128.0 and rec.channel_labels == montage.derivation_labels():
        return rec
    return preprocess_pipeline(rec, PreprocessConfig(notch_hz=notch_hz))


# --- commands ---

SYNTH_DEFAULTS = {k: getattr(SyntheticSpec(), k) for k in SyntheticSpec.__dataclass_fields__}
SYNTH_DEFAULTS.pop("seed")
SYNTH_DEFAULTS.update({"out": None, "seed": 0})


def cmd_synth(cfg: dict) -> int:
    out = Path(_required(cfg, "out"))
    fields = {}
    for name in SyntheticSpec.__dataclass_fields__:
        value = cfg[name]
        if isinstance(value, list):
            value = tuple(value)
        fields[name] = value
    manifest_path = generate_corpus(SyntheticSpec(**fields), out)
    _dump_effective(out, "synth", _jsonable(cfg), [str(manifest_path)])
    print(f"synthetic corpus written: {manifest_path}")
    return 0


PREPROCESS_DEFAULTS = {"manifest": None, "out": None, "notch_hz": 50.0}


def cmd_preprocess(cfg: dict) -> int:
    manifest = load_manifest(_required(cfg, "manifest"))
    out = Path(_required(cfg, "out"))
    pp = PreprocessConfig(notch_hz=cfg["notch_hz"])
    artifacts = []
    for entry in manifest.entries:
        src = manifest.root / entry.path
        paths = [src] if entry.format == "edf" else [
            Path(str(src) + ".json"), Path(str(src) + ".bin")
        ]
        rec = cached_preprocess(
            paths, lambda _p, e=entry: e.load_recording(manifest.root), pp, out
        )
        artifacts.append(entry.id)
        print(f"{entry.id}: {rec.n_channels} ch x {rec.duration_s:.0f} s @ {rec.fs:.0f} Hz")
    _dump_effective(out, "preprocess", _jsonable(cfg), artifacts)
    return 0


TRAIN_DEFAULTS = {
    "manifest": None,
    "out": None,
    "window": "32,16,32",
    "patch_len": 128,
    "embed_dim": 96,
    "encoder_layers": 4,
    "heads": 4,
    "ffn_dim": 384,
    "dropout": 0.1,
    "cross_heads": 4,
    "conv_kernels": "7,5",
    "conv_widths": "4,8",
    "epochs": 200,
    "batch_size": 64,
    "segments_per_epoch": 60000,
    "learning_rate": 1e-3,
    "weight_decay": 1e-5,
    "label_smoothing": 0.1,
    "threshold": 0.85,
    "seed": 0,
    "val_stride_s": 2,
    "infer_batch_size": 64,
    "notch_hz": 50.0,
    "resume": False,
}


def cmd_train(cfg: dict) -> int:
    out = Path(_required(cfg, "out"))
    model_cfg = _model_config(cfg)
    train_cfg = TrainConfig(
        epochs=int(cfg["epochs"]),
        batch_size=int(cfg["batch_size"]),
        learning_rate=float(cfg["learning_rate"]),
        weight_decay=float(cfg["weight_decay"]),
        label_smoothing=float(cfg["label_smoothing"]),
        threshold=float(cfg["threshold"]),
        seed=int(cfg["seed"]),
        segments_per_epoch=int(cfg["segments_per_epoch"]),
        val_stride_s=int(cfg["val_stride_s"]),
        infer_batch_size=int(cfg["infer_batch_size"]),
    )
    _dump_effective(out, "train", _jsonable(cfg), ["best.ckpt", "metrics.jsonl"])
    best = train_run(
        _required(cfg, "manifest"),
        model_cfg,
        train_cfg,
        out,
        PreprocessConfig(notch_hz=cfg["notch_hz"]),
        resume=bool(cfg["resume"]),
        log=lambda row: print(json.dumps(row)),
    )
    print(f"best checkpoint: {best}")
    return 0


INFER_DEFAULTS = {
    "checkpoint": None,  # list
    "recording": None,
    "out": None,
    "stride_s": 2,
    "threshold": 0.85,
    "merge_gap_s": 90.0,
    "max_event_s": 300.0,
    "notch_hz": 50.0,
    "batch_size": 64,
}


def cmd_infer(cfg: dict) -> int:
    out = Path(_required(cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    ckpt_paths = cfg["checkpoint"]
    if not ckpt_paths:
        raise SystemExit("at least one --checkpoint is required")
    if isinstance(ckpt_paths, str):
        ckpt_paths = [ckpt_paths]
    checkpoints = []
    for p in ckpt_paths:
        params, model_cfg, _meta = load_checkpoint(p)
        checkpoints.append((params, model_cfg))
    rec = _load_input_recording(_required(cfg, "recording"), cfg["notch_hz"])
    events, trace = run_ensemble_configs(
        rec,
        checkpoints,
        stride_s=int(cfg["stride_s"]),
        threshold=float(cfg["threshold"]),
        merge_gap_s=float(cfg["merge_gap_s"]),
        max_event_s=float(cfg["max_event_s"]),
        batch_size=int(cfg["batch_size"]),
    )
    hyp_path = out / f"{rec.id}.tsv"
    trace_path = out / f"{rec.id}.trace.csv"
    write_hypothesis_tsv(hyp_path, events)
    write_trace_csv(trace_path, trace)
    _dump_effective(out, "infer", _jsonable(cfg), [str(hyp_path), str(trace_path)])
    print(f"{rec.id}: {len(events.events)} events -> {hyp_path}")
    return 0


SCORE_DEFAULTS = {
    "manifest": None,
    "hyp": None,
    "out": None,
    "split": "test",
    "pre_s": 30.0,
    "post_s": 60.0,
}


def cmd_score(cfg: dict) -> int:
    manifest = load_manifest(_required(cfg, "manifest"))
    hyp_dir = Path(_required(cfg, "hyp"))
    entries = manifest.entries if cfg["split"] == "all" else manifest.split(cfg["split"])
    reports = []
    for entry in entries:
        duration = entry.duration_s(manifest.root)
        hyp_path = hyp_dir / f"{entry.id}.tsv"
        if not hyp_path.exists():
            raise MismatchedRecordings(f"no hypothesis for {entry.id} under {hyp_dir}")
        hyp_ann = read_annotations(hyp_path, duration + 1.0, entry.id)
        hyp = EventList(entry.id, hyp_ann.events, duration)
        ref = entry.load_annotations(manifest.root, duration + 1.0)
        reports.append(
            score_recording(hyp, ref, duration, pre_s=cfg["pre_s"], post_s=cfg["post_s"])
        )
    pooled = aggregate(reports)
    print(format_table({cfg["split"]: pooled}))
    out = Path(cfg["out"]) if cfg["out"] else hyp_dir
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "score_report.json"
    report_path.write_text(pooled.to_json(), encoding="utf-8")
    _dump_effective(out, "score", _jsonable(cfg), [str(report_path)])
    return 0


BENCH_DEFAULTS = {
    "recording": None,
    "checkpoint": None,
    "threads": None,
    "stride_s": 2,
    "batch_size": 96,
    "notch_hz": 50.0,
    "out": None,
}


def cmd_bench(cfg: dict) -> int:
    params, model_cfg, _meta = load_checkpoint(_required(cfg, "checkpoint"))
    rec = _load_input_recording(_required(cfg, "recording"), cfg["notch_hz"])
    report = run_benchmark(
        rec,
        params,
        model_cfg,
        stride_s=int(cfg["stride_s"]),
        threads=cfg["threads"],
        batch_size=int(cfg["batch_size"]),
    )
    print(json.dumps(report, indent=2))
    if cfg["out"]:
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench_report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
        _dump_effective(out, "bench", _jsonable(cfg), ["bench_report.json"])
    return 0


RENDER_DEFAULTS = {
    "manifest": None,
    "hyp": None,
    "out": None,
    "split": "all",
    "pre_s": 30.0,
    "post_s": 60.0,
}


def cmd_render(cfg: dict) -> int:
    manifest = load_manifest(_required(cfg, "manifest"))
    hyp_dir = Path(_required(cfg, "hyp"))
    out_path = Path(_required(cfg, "out"))
    entries = manifest.entries if cfg["split"] == "all" else manifest.split(cfg["split"])
    ids = {e.id for e in entries}
    hyp_ids = {p.stem for p in hyp_dir.glob("*.tsv")}
    if not ids <= hyp_ids:
        raise MismatchedRecordings(
            f"hypotheses missing for recordings: {sorted(ids - hyp_ids)}"
        )
    rows = []
    for entry in entries:
        duration = entry.duration_s(manifest.root)
        hyp = read_annotations(hyp_dir / f"{entry.id}.tsv", duration + 1.0, entry.id)
        ref = entry.load_annotations(manifest.root, duration + 1.0)
        rows.append(RenderRow(entry.id, entry.patient_id, duration, hyp.events, ref.events))
    render_timeline(rows, out_path, pre_s=cfg["pre_s"], post_s=cfg["post_s"])
    if out_path.parent:
        _dump_effective(out_path.parent, "render", _jsonable(cfg), [str(out_path)])
    print(f"timeline written: {out_path}")
    return 0


GRADCHECK_DEFAULTS = {"seed": 0, "out": None}


def tiny_gradcheck_config() -> ModelConfig:
    return ModelConfig(
        n_channels=3,
        patch_len=8,
        embed_dim=8,
        conv_spec=ConvSpec((3, 3), (2, 3)),
        n_encoder_layers=2,
        n_heads=2,
        ffn_dim=16,
        dropout_rate=0.0,
        cross_channel_heads=2,
        window=WindowSpec(0.25, 0.5, 0.25),
    )


def cmd_gradcheck(cfg: dict) -> int:
    report = grad_check(tiny_gradcheck_config(), seed=int(cfg["seed"]))
    for name, row in report["tensors"].items():
        flag = "ok" if row["passed"] else "FAIL"
        print(f"{name:<24} max_rel_error={row['max_rel_error']:.3e}  {flag}")
    print(f"{report['n_params']} parameters checked; tolerance {report['tolerance']}")
    print("PASS" if report["passed"] else "FAIL")
    if cfg["out"]:
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "gradcheck_report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
        _dump_effective(out, "gradcheck", _jsonable(cfg), ["gradcheck_report.json"])
    return 0 if report["passed"] else 1


def _required(cfg: dict, key: str):
    if cfg.get(key) in (None, ""):
        raise SystemExit(f"missing required setting: {key}")
    return cfg[key]


def _jsonable(cfg: dict) -> dict:
    out = {}
    for k, v in cfg.items():
        if isinstance(v, tuple):
            v = list(v)
        if isinstance(v, Path):
            v = str(v)
        if isinstance(v, (np.integer, np.floating)):
            v = v.item()
        out[k] = v
    return out


_COMMANDS = {
    "synth": (cmd_synth, SYNTH_DEFAULTS),
    "preprocess": (cmd_preprocess, PREPROCESS_DEFAULTS),
    "train": (cmd_train, TRAIN_DEFAULTS),
    "infer": (cmd_infer, INFER_DEFAULTS),
    "score": (cmd_score, SCORE_DEFAULTS),
    "bench": (cmd_bench, BENCH_DEFAULTS),
    "render": (cmd_render, RENDER_DEFAULTS),
    "gradcheck": (cmd_gradcheck, GRADCHECK_DEFAULTS),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="szdetect", description="EEG seizure detection pipeline"
    )
    parser.add_argument("--version", action="version", version=f"szdetect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, defaults: dict, **flag_kwargs):
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML or JSON config file")
        for key, default in defaults.items():
            flag = "--" + key.replace("_", "-")
            extra = flag_kwargs.get(key, {})
            if isinstance(default, bool):
                p.add_argument(flag, action="store_true", default=None, **extra)
            else:
                kind = extra.pop("type", None)
                if kind is None:
                    kind = type(default) if default is not None else str
                    if kind in (tuple, list):
                        kind = str
                p.add_argument(flag, type=kind, default=None, help=extra.pop("help", None), **extra)
        return p

    for name, (_fn, defaults) in _COMMANDS.items():
        if name == "infer":
            p = sub.add_parser(name)
            p.add_argument("--config")
            p.add_argument("--checkpoint", action="append")
            for key, default in INFER_DEFAULTS.items():
                if key == "checkpoint":
                    continue
                flag = "--" + key.replace("_", "-")
                kind = type(default) if default is not None else str
                p.add_argument(flag, type=kind, default=None)
        else:
            add(name, defaults)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn, defaults = _COMMANDS[args.command]
    try:
        cfg = _effective(defaults, args)
        return fn(cfg)
    except SzDetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
