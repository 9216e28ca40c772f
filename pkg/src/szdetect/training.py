"""Training loop: balanced epochs, adaptive-moment updates with decoupled
weight decay, validation-based model selection, and resumable state.

The optimizer applies weight decay independently of the learning rate
(theta *= 1 - decay), so a zero learning rate leaves only decay shrinkage
and zero decay with zero learning rate is the exact identity. Model
selection runs sliding-window inference over the validation recordings each
epoch and keeps the checkpoint with the strictly best event-based F1 at the
operating threshold.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, load_tensors, save_checkpoint, save_tensors
from .errors import EmptyValidationSet, NonFiniteLoss
from .inference import binarize_and_extract, sliding_infer
from .manifest import Manifest, load_manifest
from .model import ModelConfig, Params, backward, init_params
from .preprocess import PreprocessConfig, cached_preprocess
from .recording import AnnotationSet, Recording
from .scoring import aggregate, score_recording
from .windowing import (
    LABEL_SEIZURE,
    EpochSampler,
    RecordingIndex,
    SamplerConfig,
    extract_segment,
)

SEIZURE_CLASS = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    weight_decay: float = 1e-5
    label_smoothing: float = 0.1
    threshold: float = 0.85
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    segments_per_epoch: int = 60000
    proportions: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    val_stride_s: int = 2  # full protocol; raise for faster validation passes
    infer_batch_size: int = 64

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must be in (0, 1)")
        if not 0 <= self.label_smoothing <= 1:
            raise ValueError("label_smoothing must be in [0, 1]")


@dataclass
class TrainState:
    params: Params
    m: Params
    v: Params
    step: int = 0
    epoch: int = 0  # completed epochs
    best_f1: float | None = None
    best_epoch: int = -1
    best_params: Params | None = None

    @classmethod
    def fresh(cls, cfg: ModelConfig, seed: int) -> "TrainState":
        params = init_params(cfg, seed=seed)
        zeros = {k: np.zeros_like(p) for k, p in params.items()}
        return cls(params=params, m=zeros, v={k: z.copy() for k, z in zeros.items()})


def adamw_step(state: TrainState, grads: Params, cfg: TrainConfig) -> None:
    """In-place adaptive-moment update with lr-independent decoupled decay."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    for name, p in state.params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        if cfg.weight_decay:
            p *= 1.0 - cfg.weight_decay
        p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)


def _label_array(segments) -> np.ndarray:
    return np.array([1 if s.target_label == LABEL_SEIZURE else 0 for s in segments])


def train_epoch(
    state: TrainState,
    sampler: EpochSampler,
    recordings: dict[str, Recording],
    annotations: dict[str, AnnotationSet],
    cfg: TrainConfig,
    model_cfg: ModelConfig,
) -> float:
    """One pass over a freshly sampled epoch; returns the running-mean loss.

    Raises:
        NonFiniteLoss: aborts with the batch index and source provenance.
    """
    epoch_seed = state.epoch
    sources = sampler.sources(epoch_seed)
    total_loss = 0.0
    n_batches = 0
    for lo in range(0, len(sources), cfg.batch_size):
        chunk = sources[lo : lo + cfg.batch_size]
        segs = [
            extract_segment(recordings[rid], start, model_cfg.window, annotations[rid])
            for rid, start, _ in chunk
        ]
        x = np.stack([s.samples for s in segs])
        labels = _label_array(segs)
        drop_rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([cfg.seed, epoch_seed, n_batches, 101]))
        )
        loss, grads, _ = backward(
            state.params,
            model_cfg,
            x,
            labels,
            label_smoothing=cfg.label_smoothing,
            mode="train",
            dropout_rng=drop_rng,
        )
        if not np.isfinite(loss):
            raise NonFiniteLoss(
                f"epoch {epoch_seed} batch {n_batches}: loss {loss}; "
                f"first source {chunk[0][:2]}"
            )
        adamw_step(state, grads, cfg)
        total_loss += loss
        n_batches += 1
    return total_loss / max(n_batches, 1)


def evaluate_event_f1(
    params: Params,
    model_cfg: ModelConfig,
    recordings: list[Recording],
    annotations: dict[str, AnnotationSet],
    threshold: float,
    stride_s: int,
    batch_size: int = 64,
) -> dict:
    """Event-scored inference over a recording set at one threshold."""
    reports = []
    for rec in recordings:
        trace = sliding_infer(rec, params, model_cfg, stride_s=stride_s, batch_size=batch_size)
        events = binarize_and_extract(trace, threshold=threshold)
        reports.append(score_recording(events, annotations[rec.id], rec.duration_s))
    pooled = aggregate(reports)
    return {
        "f1": pooled.event.f1,
        "sensitivity": pooled.event.sensitivity,
        "precision": pooled.event.precision,
        "fp_per_day": pooled.event.fp_per_day,
    }


def validate_and_select(
    state: TrainState,
    val_recordings: list[Recording],
    annotations: dict[str, AnnotationSet],
    cfg: TrainConfig,
    model_cfg: ModelConfig,
) -> dict:
    """Score the validation set and keep the checkpoint on strict improvement.

    Raises:
        EmptyValidationSet: no validation recordings available.
    """
    if not val_recordings:
        raise EmptyValidationSet("validation split is empty")
    metrics = evaluate_event_f1(
        state.params,
        model_cfg,
        val_recordings,
        annotations,
        cfg.threshold,
        cfg.val_stride_s,
        cfg.infer_batch_size,
    )
    if state.best_f1 is None or metrics["f1"] > state.best_f1:
        state.best_f1 = metrics["f1"]
        state.best_epoch = state.epoch
        state.best_params = {k: p.copy() for k, p in state.params.items()}
    return metrics


# --- resumable on-disk state ---

def save_state(path: str | Path, state: TrainState, model_cfg: ModelConfig) -> None:
    tensors: Params = {}
    for k, p in state.params.items():
        tensors[k] = p
        tensors["opt.m." + k] = state.m[k]
        tensors["opt.v." + k] = state.v[k]
    if state.best_params is not None:
        for k, p in state.best_params.items():
            tensors["best." + k] = p
    meta = {
        "step": state.step,
        "epoch": state.epoch,
        "best_f1": state.best_f1,
        "best_epoch": state.best_epoch,
        "kind": "train_state",
    }
    save_tensors(path, tensors, model_cfg, meta)


def load_state(path: str | Path) -> TrainState:
    tensors, _, meta = load_tensors(path)
    params = {k: v for k, v in tensors.items() if not k.startswith(("opt.", "best."))}
    state = TrainState(
        params=params,
        m={k[len("opt.m.") :]: v for k, v in tensors.items() if k.startswith("opt.m.")},
        v={k[len("opt.v.") :]: v for k, v in tensors.items() if k.startswith("opt.v.")},
        step=meta["step"],
        epoch=meta["epoch"],
        best_f1=meta["best_f1"],
        best_epoch=meta["best_epoch"],
    )
    best = {k[len("best.") :]: v for k, v in tensors.items() if k.startswith("best.")}
    state.best_params = best or None
    return state


@dataclass
class TrainResources:
    """Preprocessed recordings and sampling index for one manifest."""

    train_recordings: dict[str, Recording]
    val_recordings: list[Recording]
    annotations: dict[str, AnnotationSet]
    sampler_index: list[RecordingIndex] = field(default_factory=list)


def prepare_resources(
    manifest: Manifest,
    preprocess_cfg: PreprocessConfig,
    cache_dir: str | Path,
    splits: tuple[str, ...] = ("train", "validation"),
) -> TrainResources:
    """Preprocess every recording of the requested splits (cached) and build
    the sampler index from the train split."""
    train_recs: dict[str, Recording] = {}
    val_recs: list[Recording] = []
    annotations: dict[str, AnnotationSet] = {}
    index: list[RecordingIndex] = []
    for entry in manifest.entries:
        if entry.split not in splits:
            continue
        src = manifest.root / entry.path
        paths = (
            [src]
            if entry.format == "edf"
            else [Path(str(src) + ".json"), Path(str(src) + ".bin")]
        )
        rec = cached_preprocess(
            paths, lambda _p, e=entry: e.load_recording(manifest.root), preprocess_cfg, cache_dir
        )
        rec.id = entry.id
        rec.patient_id = entry.patient_id
        ann = entry.load_annotations(manifest.root, rec.duration_s + 1.0)
        annotations[entry.id] = ann
        if entry.split == "train":
            train_recs[entry.id] = rec
            index.append(
                RecordingIndex(entry.id, entry.patient_id, rec.n_samples, ann, entry.long_form)
            )
        else:
            val_recs.append(rec)
    return TrainResources(train_recs, val_recs, annotations, index)


def train_run(
    manifest: Manifest | str | Path,
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    out_dir: str | Path,
    preprocess_cfg: PreprocessConfig | None = None,
    resume: bool = False,
    log=None,
) -> Path:
    """Full training run; returns the path of the best checkpoint.

    Writes metrics.jsonl (epoch, loss, validation F1, FP/day), best.ckpt on
    every strict improvement, and train_state.ckpt after every epoch for
    resumption. Deterministic given the configs and seeds.
    """
    if not isinstance(manifest, Manifest):
        manifest = load_manifest(manifest)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    preprocess_cfg = preprocess_cfg or PreprocessConfig()
    cache_dir = Path(preprocess_cfg.cache_dir) if preprocess_cfg.cache_dir else out_dir / "cache"

    res = prepare_resources(manifest, preprocess_cfg, cache_dir)
    sampler = EpochSampler(
        res.sampler_index,
        SamplerConfig(cfg.segments_per_epoch, cfg.proportions, cfg.seed),
        model_cfg.window,
    )

    state_path = out_dir / "train_state.ckpt"
    best_path = out_dir / "best.ckpt"
    metrics_path = out_dir / "metrics.jsonl"
    if resume and state_path.exists():
        state = load_state(state_path)
    else:
        state = TrainState.fresh(model_cfg, cfg.seed)
        metrics_path.write_text("", encoding="utf-8")

    while state.epoch < cfg.epochs:
        t0 = time.perf_counter()
        loss = train_epoch(state, sampler, res.train_recordings, res.annotations, cfg, model_cfg)
        state.epoch += 1
        metrics = validate_and_select(state, res.val_recordings, res.annotations, cfg, model_cfg)
        if state.best_epoch == state.epoch:
            save_checkpoint(
                best_path,
                state.best_params,
                model_cfg,
                {
                    "epoch": state.best_epoch,
                    "val_f1": state.best_f1,
                    "threshold": cfg.threshold,
                },
            )
        row = {
            "epoch": state.epoch,
            "loss": loss,
            "val_f1": metrics["f1"],
            "fp_per_day": metrics["fp_per_day"],
            "seconds": round(time.perf_counter() - t0, 3),
        }
        with open(metrics_path, "a", encoding="utf-8") as fp:
            fp.write(json.dumps(row) + "\n")
        if log:
            log(row)
        save_state(state_path, state, model_cfg)

    if not best_path.exists():  # no epoch improved on nothing: save last best
        save_checkpoint(
            best_path,
            state.best_params or state.params,
            model_cfg,
            {"epoch": state.best_epoch, "val_f1": state.best_f1, "threshold": cfg.threshold},
        )
    return best_path


def load_best(path: str | Path) -> tuple[Params, ModelConfig, dict]:
    return load_checkpoint(path)


def with_window(cfg: ModelConfig, look_behind_s: float, look_ahead_s: float) -> ModelConfig:
    """Same architecture with a different context placement."""
    return replace(cfg, window=replace(cfg.window, look_behind_s=look_behind_s, look_ahead_s=look_ahead_s))
