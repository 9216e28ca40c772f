"""Sample-based and event-based scoring with corpus aggregation.

Sample scoring rasterizes hypothesis and reference onto the recording's 1 Hz
grid (a second is positive iff it overlaps an event) and counts per-cell
TP/FP/FN. Event scoring extends each reference by a pre/post tolerance and
uses any-overlap matching: sensitivity counts matched references, precision
counts matched hypothesis events, and false positives are normalized to a
24-hour rate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import ceil, floor

import numpy as np

from .errors import DurationMismatch
from .inference import EventList
from .recording import AnnotationSet

PRE_TOLERANCE_S = 30.0
POST_TOLERANCE_S = 60.0
SECONDS_PER_DAY = 86400.0


def _rate(numer: int, denom: int, clean: bool) -> float:
    if denom > 0:
        return numer / denom
    return 1.0 if clean else 0.0


def _f1(precision: float, sensitivity: float) -> float:
    if precision + sensitivity <= 0:
        return 0.0
    return 2.0 * precision * sensitivity / (precision + sensitivity)


@dataclass
class SampleScores:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def sensitivity(self) -> float:
        return _rate(self.tp, self.tp + self.fn, self.fp == 0)

    @property
    def precision(self) -> float:
        return _rate(self.tp, self.tp + self.fp, self.fn == 0)

    @property
    def f1(self) -> float:
        return _f1(self.precision, self.sensitivity)


@dataclass
class EventScores:
    tp_ref: int = 0  # matched reference events
    tp_hyp: int = 0  # matched hypothesis events
    fp: int = 0  # unmatched hypothesis events
    fn: int = 0  # missed reference events
    duration_s: float = 0.0

    @property
    def sensitivity(self) -> float:
        return _rate(self.tp_ref, self.tp_ref + self.fn, self.fp == 0)

    @property
    def precision(self) -> float:
        return _rate(self.tp_hyp, self.tp_hyp + self.fp, self.fn == 0)

    @property
    def f1(self) -> float:
        return _f1(self.precision, self.sensitivity)

    @property
    def fp_per_day(self) -> float:
        if self.duration_s <= 0:
            return 0.0
        return self.fp * SECONDS_PER_DAY / self.duration_s


@dataclass
class ScoreReport:
    sample: SampleScores = field(default_factory=SampleScores)
    event: EventScores = field(default_factory=EventScores)
    total_duration_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "sample": {
                "sensitivity": self.sample.sensitivity,
                "precision": self.sample.precision,
                "f1": self.sample.f1,
                "counts": {"tp": self.sample.tp, "fp": self.sample.fp, "fn": self.sample.fn},
            },
            "event": {
                "sensitivity": self.event.sensitivity,
                "precision": self.event.precision,
                "f1": self.event.f1,
                "fp_per_day": self.event.fp_per_day,
                "counts": {"tp": self.event.tp_ref, "fp": self.event.fp, "fn": self.event.fn},
            },
            "total_duration_s": self.total_duration_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def rasterize(intervals: list[tuple[float, float]], n_cells: int) -> np.ndarray:
    """1 Hz grid: cell s is positive iff [s, s+1) overlaps any interval."""
    mask = np.zeros(n_cells, dtype=bool)
    for a, b in intervals:
        lo = max(0, floor(a + 1e-9))
        hi = min(n_cells, ceil(b - 1e-9))
        if hi > lo:
            mask[lo:hi] = True
    return mask


def score_samples(hyp: EventList, ref: AnnotationSet, duration_s: float) -> SampleScores:
    """Per-cell confusion counts on the 1 Hz grid.

    Raises:
        DurationMismatch: hypothesis carries a different recording duration.
    """
    if abs(hyp.duration_s - duration_s) >= 1.0:
        raise DurationMismatch(
            f"hypothesis duration {hyp.duration_s} s vs reference {duration_s} s"
        )
    n_cells = ceil(duration_s - 1e-9)
    h = rasterize([(e.onset_s, e.end_s) for e in hyp.events], n_cells)
    r = rasterize(ref.seizure_intervals(), n_cells)
    return SampleScores(
        tp=int(np.sum(h & r)), fp=int(np.sum(h & ~r)), fn=int(np.sum(~h & r))
    )


def score_events(
    hyp: EventList,
    ref: AnnotationSet,
    duration_s: float,
    pre_s: float = PRE_TOLERANCE_S,
    post_s: float = POST_TOLERANCE_S,
) -> EventScores:
    """Any-overlap event matching with pre/post tolerances.

    Each reference is extended by [-pre_s, +post_s]; a reference is detected
    iff some hypothesis event overlaps its extended span, and a hypothesis
    event is false iff it overlaps no extended span.
    """
    extended = [(a - pre_s, b + post_s) for a, b in ref.seizure_intervals()]
    hyps = [(e.onset_s, e.end_s) for e in hyp.events]

    tp_ref = sum(1 for a, b in extended if any(ha < b and a < hb for ha, hb in hyps))
    tp_hyp = sum(1 for ha, hb in hyps if any(ha < b and a < hb for a, b in extended))
    return EventScores(
        tp_ref=tp_ref,
        tp_hyp=tp_hyp,
        fp=len(hyps) - tp_hyp,
        fn=len(extended) - tp_ref,
        duration_s=duration_s,
    )


def score_recording(
    hyp: EventList,
    ref: AnnotationSet,
    duration_s: float,
    pre_s: float = PRE_TOLERANCE_S,
    post_s: float = POST_TOLERANCE_S,
) -> ScoreReport:
    return ScoreReport(
        sample=score_samples(hyp, ref, duration_s),
        event=score_events(hyp, ref, duration_s, pre_s, post_s),
        total_duration_s=duration_s,
    )


def aggregate(reports: list[ScoreReport]) -> ScoreReport:
    """Micro-average across recordings: counts and durations are pooled and
    the metrics recomputed from the pooled counts."""
    if not reports:
        raise ValueError("need at least one report")
    out = ScoreReport()
    for r in reports:
        out.sample.tp += r.sample.tp
        out.sample.fp += r.sample.fp
        out.sample.fn += r.sample.fn
        out.event.tp_ref += r.event.tp_ref
        out.event.tp_hyp += r.event.tp_hyp
        out.event.fp += r.event.fp
        out.event.fn += r.event.fn
        out.event.duration_s += r.event.duration_s
        out.total_duration_s += r.total_duration_s
    return out


def format_table(reports: dict[str, ScoreReport]) -> str:
    """Aligned text table of event and sample metrics per corpus row."""
    header = f"{'corpus':<16}{'SDR':>8}{'FP/day':>10}{'F1ev':>8}{'Sens':>8}{'Prec':>8}{'F1smp':>8}"
    lines = [header, "-" * len(header)]
    for name, rep in reports.items():
        lines.append(
            f"{name:<16}{rep.event.sensitivity:>8.3f}{rep.event.fp_per_day:>10.2f}"
            f"{rep.event.f1:>8.3f}{rep.sample.sensitivity:>8.3f}"
            f"{rep.sample.precision:>8.3f}{rep.sample.f1:>8.3f}"
        )
    return "\n".join(lines)
