"""Sliding-window inference with overlap averaging, event extraction, and
probability-trace ensembling.

Target windows advance by a fixed stride; each window's seizure probability
is attributed to every one-second cell its target covers, and each cell takes
the mean over all covering windows. Context beyond the recording edges is
filled by boundary reflection so every second is covered.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from pathlib import Path

import numpy as np

from .errors import LengthMismatch, TooShortRecording
from .model import ModelConfig, Params, forward
from .recording import SEIZURE, Event, Recording, write_annotations
from .windowing import reflect_indices

DEFAULT_THRESHOLD = 0.85
DEFAULT_STRIDE_S = 2
MERGE_GAP_S = 90.0
MAX_EVENT_S = 300.0

SEIZURE_CLASS = 1  # softmax index of the seizure logit


@dataclass
class ProbabilityTrace:
    """Per-second seizure probability with per-second window coverage."""

    recording_id: str
    values: np.ndarray  # [ceil(duration_s)], floats in [0, 1]
    coverage: np.ndarray  # [ceil(duration_s)], ints >= 1
    duration_s: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.coverage = np.asarray(self.coverage, dtype=np.int64)
        if len(self.values) != ceil(self.duration_s - 1e-9):
            raise ValueError("trace length must be ceil(duration_s)")


@dataclass
class EventList:
    """Detected seizure intervals for one recording."""

    recording_id: str
    events: list[Event]
    duration_s: float


def window_starts(duration_s: float, target_s: int, stride_s: int) -> list[int]:
    """Target start seconds: 0, stride, 2*stride, ... plus a final window
    clamped so the last (possibly partial) second is covered."""
    n_cells = ceil(duration_s - 1e-9)
    last = n_cells - target_s
    starts = list(range(0, last + 1, stride_s))
    if starts[-1] != last:
        starts.append(last)
    return starts


def sliding_infer(
    rec: Recording,
    params: Params,
    cfg: ModelConfig,
    stride_s: int = DEFAULT_STRIDE_S,
    batch_size: int = 64,
) -> ProbabilityTrace:
    """Overlap-averaged per-second seizure probabilities for one recording.

    Raises:
        TooShortRecording: recording shorter than one target window.
    """
    target_s = int(round(cfg.window.target_s))
    if abs(cfg.window.target_s - target_s) > 1e-9:
        raise ValueError("sliding inference needs a whole-second target")
    if stride_s < 1 or target_s % stride_s != 0:
        raise ValueError(f"stride {stride_s} must divide the target length {target_s}")
    if rec.duration_s < target_s - 1e-9:
        raise TooShortRecording(
            f"{rec.id}: {rec.duration_s:.1f} s is shorter than one {target_s} s target"
        )

    fs = int(round(rec.fs))
    n = rec.n_samples
    n_cells = ceil(rec.duration_s - 1e-9)
    starts = window_starts(rec.duration_s, target_s, stride_s)

    # reflect-pad once: look-behind, look-ahead, and the final window overhang
    pad_left = cfg.window.behind_samples
    overhang = max(0, (starts[-1] + target_s) * fs - n)
    pad_right = cfg.window.ahead_samples + overhang
    idx = reflect_indices(np.arange(-pad_left, n + pad_right), n)
    padded = rec.samples[:, idx]

    total = cfg.window.total_samples
    acc = np.zeros(n_cells)
    cov = np.zeros(n_cells, dtype=np.int64)
    for lo in range(0, len(starts), batch_size):
        chunk = starts[lo : lo + batch_size]
        windows = np.stack([padded[:, s * fs : s * fs + total] for s in chunk])
        out = forward(params, cfg, windows, mode="eval")
        probs = out.probabilities[:, SEIZURE_CLASS]
        for s, p in zip(chunk, probs):
            acc[s : s + target_s] += p
            cov[s : s + target_s] += 1

    return ProbabilityTrace(rec.id, acc / cov, cov, rec.duration_s)


def ensemble(traces: list[ProbabilityTrace]) -> ProbabilityTrace:
    """Elementwise mean of member traces.

    Raises:
        LengthMismatch: members differ in recording id or length.
    """
    if not traces:
        raise ValueError("need at least one trace")
    first = traces[0]
    for t in traces[1:]:
        if t.recording_id != first.recording_id or len(t.values) != len(first.values):
            raise LengthMismatch(
                f"trace {t.recording_id}/{len(t.values)} vs "
                f"{first.recording_id}/{len(first.values)}"
            )
    values = np.mean([t.values for t in traces], axis=0)
    coverage = np.min([t.coverage for t in traces], axis=0)
    return ProbabilityTrace(first.recording_id, values, coverage, first.duration_s)


def binarize_and_extract(
    trace: ProbabilityTrace,
    threshold: float = DEFAULT_THRESHOLD,
    merge_gap_s: float = MERGE_GAP_S,
    max_event_s: float = MAX_EVENT_S,
) -> EventList:
    """Threshold a trace and apply event hygiene.

    Cells at or above the threshold form events; events separated by less
    than `merge_gap_s` merge; events longer than `max_event_s` split into
    chunks of at most that length. The merge/split defaults follow common
    event-scoring conventions and are configurable.
    """
    mask = trace.values >= threshold
    raw: list[list[float]] = []
    start = None
    for i, on in enumerate(mask):
        if on and start is None:
            start = i
        elif not on and start is not None:
            raw.append([float(start), float(i)])
            start = None
    if start is not None:
        raw.append([float(start), float(len(mask))])

    merged: list[list[float]] = []
    for lo, hi in raw:
        if merged and lo - merged[-1][1] < merge_gap_s:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi])

    events = []
    for lo, hi in merged:
        while hi - lo > max_event_s:
            events.append(Event(lo, max_event_s, SEIZURE))
            lo += max_event_s
        events.append(Event(lo, hi - lo, SEIZURE))
    return EventList(trace.recording_id, events, trace.duration_s)


def run_ensemble_configs(
    rec: Recording,
    checkpoints: list[tuple[Params, ModelConfig]],
    stride_s: int = DEFAULT_STRIDE_S,
    threshold: float = DEFAULT_THRESHOLD,
    merge_gap_s: float = MERGE_GAP_S,
    max_event_s: float = MAX_EVENT_S,
    batch_size: int = 64,
) -> tuple[EventList, ProbabilityTrace]:
    """Infer with each checkpoint (each carries its own window placement),
    average the traces, and extract events."""
    traces = [
        sliding_infer(rec, params, cfg, stride_s=stride_s, batch_size=batch_size)
        for params, cfg in checkpoints
    ]
    combined = ensemble(traces)
    return binarize_and_extract(combined, threshold, merge_gap_s, max_event_s), combined


# --- output formats ---

def write_hypothesis_tsv(path: str | Path, events: EventList) -> None:
    """Hypothesis events in the annotation TSV schema."""
    write_annotations(path, events.events)


def write_trace_csv(path: str | Path, trace: ProbabilityTrace) -> None:
    """Raw trace as 'second,probability,coverage' rows."""
    lines = ["second,probability,coverage"]
    for i, (v, c) in enumerate(zip(trace.values, trace.coverage)):
        lines.append(f"{i},{v:.9f},{c}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
