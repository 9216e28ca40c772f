"""Window extraction, target labeling, hour-chunk curation, and the
balanced epoch sampler.

A window is look-behind context + a labeled target section + look-ahead
context. Targets are categorized by their seizure coverage (fully seizure,
fully non-seizure, mixed) and labeled seizure when coverage strictly exceeds
half the target. The sampler draws a fixed number of segments per epoch,
split across categories by the configured proportions and evenly across
patients within each category, with start times uniform over the eligible
start positions on the sample grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor

import numpy as np

from .errors import EmptyCategory, TargetOutOfBounds
from .recording import AnnotationSet, Recording

FULLY_SEIZURE = "fully_seizure"
FULLY_NONSEIZURE = "fully_nonseizure"
MIXED = "mixed"
CATEGORIES = (FULLY_SEIZURE, FULLY_NONSEIZURE, MIXED)

LABEL_SEIZURE = "seizure"
LABEL_NONSEIZURE = "nonseizure"

HOUR_S = 3600.0

# slack when mapping real-valued interval endpoints onto the sample grid,
# in sample units
_GRID_EPS = 1e-6


@dataclass(frozen=True)
class WindowSpec:
    """Durations of the look-behind / target / look-ahead sections."""

    look_behind_s: float = 32.0
    target_s: float = 16.0
    look_ahead_s: float = 32.0
    fs: float = 128.0

    def __post_init__(self):
        if self.target_s <= 0:
            raise ValueError("target_s must be positive")
        if self.look_behind_s < 0 or self.look_ahead_s < 0:
            raise ValueError("context durations must be non-negative")
        for name in ("look_behind_s", "target_s", "look_ahead_s"):
            samples = getattr(self, name) * self.fs
            if abs(samples - round(samples)) > 1e-6:
                raise ValueError(f"{name} must be a multiple of 1/fs")

    @property
    def total_s(self) -> float:
        return self.look_behind_s + self.target_s + self.look_ahead_s

    @property
    def target_samples(self) -> int:
        return int(round(self.target_s * self.fs))

    @property
    def behind_samples(self) -> int:
        return int(round(self.look_behind_s * self.fs))

    @property
    def ahead_samples(self) -> int:
        return int(round(self.look_ahead_s * self.fs))

    @property
    def total_samples(self) -> int:
        return self.behind_samples + self.target_samples + self.ahead_samples

    def to_dict(self) -> dict:
        return {
            "look_behind_s": self.look_behind_s,
            "target_s": self.target_s,
            "look_ahead_s": self.look_ahead_s,
            "fs": self.fs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSpec":
        return cls(d["look_behind_s"], d["target_s"], d["look_ahead_s"], d.get("fs", 128.0))


@dataclass
class Segment:
    """One extracted model input with its target label and provenance."""

    samples: np.ndarray  # [n_channels, total_samples]
    target_label: str
    category: str
    source: tuple[str, float]  # (recording_id, target start seconds)


def seizure_coverage(ann: AnnotationSet, start_s: float, duration_s: float) -> float:
    """Seconds of seizure annotation inside [start_s, start_s + duration_s)."""
    end_s = start_s + duration_s
    total = 0.0
    for a, b in ann.seizure_intervals():
        total += max(0.0, min(b, end_s) - max(a, start_s))
    return total


def label_target(ann: AnnotationSet, target_start_s: float, spec: WindowSpec) -> tuple[str, str]:
    """Categorize and label the target section starting at `target_start_s`.

    Fully seizure at 100% coverage, fully non-seizure at 0%, mixed otherwise;
    the label is seizure iff coverage strictly exceeds half the target.
    """
    coverage = seizure_coverage(ann, target_start_s, spec.target_s)
    tol = 1e-9 * max(1.0, spec.target_s)
    if coverage >= spec.target_s - tol:
        category = FULLY_SEIZURE
    elif coverage <= tol:
        category = FULLY_NONSEIZURE
    else:
        category = MIXED
    label = LABEL_SEIZURE if coverage > spec.target_s / 2.0 else LABEL_NONSEIZURE
    return category, label


def reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    """Map out-of-range sample indices into [0, n) by repeated boundary reflection.

    Reflection excludes the boundary sample itself: index -k maps to k,
    index n-1+k maps to n-1-k.
    """
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * (n - 1)
    j = np.mod(idx, period)
    return np.where(j >= n, period - j, j)


def slice_with_reflection(samples: np.ndarray, start_idx: int, length: int) -> np.ndarray:
    """Slice [start_idx, start_idx + length) from each channel row, reflecting
    at the boundaries where the range leaves the recording."""
    n = samples.shape[-1]
    if 0 <= start_idx and start_idx + length <= n:
        return samples[..., start_idx : start_idx + length]
    idx = reflect_indices(np.arange(start_idx, start_idx + length), n)
    return samples[..., idx]


def extract_segment(
    rec: Recording,
    start_of_target_s: float,
    spec: WindowSpec,
    ann: AnnotationSet | None = None,
) -> Segment:
    """Extract the window whose target section starts at `start_of_target_s`.

    Context reaching past the recording boundaries is filled by reflection.
    When `ann` is given the segment carries its category and label.

    Raises:
        TargetOutOfBounds: target section not fully inside the recording.
    """
    fs = rec.fs
    t0 = int(round(start_of_target_s * fs))
    if t0 < 0 or t0 + spec.target_samples > rec.n_samples:
        raise TargetOutOfBounds(
            f"target [{start_of_target_s}, {start_of_target_s + spec.target_s}) s outside "
            f"recording of {rec.duration_s} s"
        )
    window = slice_with_reflection(rec.samples, t0 - spec.behind_samples, spec.total_samples)
    category, label = (FULLY_NONSEIZURE, LABEL_NONSEIZURE)
    if ann is not None:
        category, label = label_target(ann, start_of_target_s, spec)
    return Segment(np.ascontiguousarray(window), label, category, (rec.id, start_of_target_s))


def chunk_and_filter_hours(duration_s: float, ann: AnnotationSet) -> list[tuple[float, float]]:
    """Partition a recording into hour intervals and keep those touching a seizure.

    The final partial hour is kept as-is; an interval is retained iff it
    overlaps at least one seizure event.
    """
    intervals = []
    start = 0.0
    while start < duration_s:
        end = min(start + HOUR_S, duration_s)
        if any(a < end and start < b for a, b in ann.seizure_intervals()):
            intervals.append((start, end))
        start = end
    return intervals


# --- eligible start-position intervals, in sample units ---
# A piece is (lo, hi, lo_open, hi_open) with endpoints in fractional samples;
# grid starts are integers k with k in the piece.

_Piece = tuple[float, float, bool, bool]


def _count_piece(piece: _Piece) -> tuple[int, int]:
    lo, hi, lo_open, hi_open = piece
    k0 = floor(lo + _GRID_EPS) + 1 if lo_open else ceil(lo - _GRID_EPS)
    k1 = ceil(hi - _GRID_EPS) - 1 if hi_open else floor(hi + _GRID_EPS)
    return k0, k1


def _merge_open(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


def category_start_pieces(
    ann: AnnotationSet,
    n_samples: int,
    spec: WindowSpec,
    allowed_s: list[tuple[float, float]] | None = None,
) -> dict[str, list[_Piece]]:
    """Eligible target-start intervals per category for one recording.

    `allowed_s` optionally restricts targets to retained spans (hour-chunk
    curation); the target section must lie fully inside an allowed span.
    """
    fs = spec.fs
    ts = spec.target_samples
    domain_hi = n_samples - ts
    if domain_hi < 0:
        return {FULLY_SEIZURE: [], FULLY_NONSEIZURE: [], MIXED: []}

    events = [(a * fs, b * fs) for a, b in ann.seizure_intervals()]

    fully = [(a, b - ts) for a, b in events if b - a >= ts - _GRID_EPS]
    overlap = _merge_open([(a - ts, b) for a, b in events])

    fully_pieces: list[_Piece] = [
        (max(a, 0.0), min(b, domain_hi), False, False) for a, b in fully if a <= domain_hi and b >= 0
    ]

    # non-seizure: [0, domain_hi] minus the open overlap regions -> closed pieces
    nonseiz_pieces: list[_Piece] = []
    cursor = 0.0
    for a, b in overlap:
        if a > cursor:
            nonseiz_pieces.append((cursor, min(a, float(domain_hi)), False, False))
        cursor = max(cursor, b)
        if cursor > domain_hi:
            break
    if cursor <= domain_hi:
        nonseiz_pieces.append((cursor, float(domain_hi), False, False))
    nonseiz_pieces = [(lo, hi, False, False) for lo, hi, _, _ in nonseiz_pieces if hi >= lo]

    # mixed: open overlap regions minus closed fully regions -> open pieces
    mixed_pieces: list[_Piece] = []
    for a, b in overlap:
        lo = max(a, -0.5)  # landing grid starts must be >= 0
        hi = min(b, domain_hi + 0.5)
        cur = lo
        cur_open = True
        for fa, fb in sorted(fully):
            if fb < cur or fa > hi:
                continue
            if fa > cur:
                mixed_pieces.append((cur, fa, cur_open, True))
            cur, cur_open = fb, True
        if cur < hi:
            mixed_pieces.append((cur, hi, cur_open, True))
    # clamp to the closed domain
    mixed_pieces = [
        (max(lo, 0.0) if lo < 0 else lo, min(hi, float(domain_hi)) if hi > domain_hi else hi,
         lo_open and lo >= 0, hi_open and hi <= domain_hi)
        for lo, hi, lo_open, hi_open in mixed_pieces
    ]

    out = {FULLY_SEIZURE: fully_pieces, FULLY_NONSEIZURE: nonseiz_pieces, MIXED: mixed_pieces}
    if allowed_s is not None:
        allowed_u = [(a * fs, b * fs - ts) for a, b in allowed_s]
        out = {cat: _restrict(pieces, allowed_u) for cat, pieces in out.items()}
    return out


def _restrict(pieces: list[_Piece], allowed: list[tuple[float, float]]) -> list[_Piece]:
    result = []
    for lo, hi, lo_open, hi_open in pieces:
        for a, b in allowed:
            new_lo, new_hi = max(lo, a), min(hi, b)
            if new_hi < new_lo:
                continue
            result.append(
                (new_lo, new_hi, lo_open and new_lo == lo, hi_open and new_hi == hi)
            )
    return result


@dataclass
class RecordingIndex:
    """Sampling metadata for one preprocessed recording."""

    recording_id: str
    patient_id: str
    n_samples: int
    annotations: AnnotationSet
    long_form: bool = False


@dataclass(frozen=True)
class SamplerConfig:
    """Epoch sampling policy."""

    segments_per_epoch: int = 60000
    proportions: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)  # fully_sz, fully_non, mixed
    seed: int = 0

    def __post_init__(self):
        if self.segments_per_epoch <= 0:
            raise ValueError("segments_per_epoch must be positive")
        if abs(sum(self.proportions) - 1.0) > 1e-9:
            raise ValueError("category proportions must sum to 1")


class EpochSampler:
    """Draws balanced (category, patient)-stratified segment start positions.

    Start positions are uniform over the eligible sample-grid starts of each
    (patient, category); patients lacking a category pass their quota to the
    remaining patients of that category. Fully reproducible from
    (config.seed, epoch_seed).
    """

    def __init__(self, index: list[RecordingIndex], cfg: SamplerConfig, spec: WindowSpec):
        self.cfg = cfg
        self.spec = spec
        # per category: patient -> list of (recording_id, k0, count) grid runs
        self._runs: dict[str, dict[str, list[tuple[str, int, int]]]] = {
            c: {} for c in CATEGORIES
        }
        for rec in index:
            allowed = None
            if rec.long_form:
                duration_s = rec.n_samples / spec.fs
                allowed = chunk_and_filter_hours(duration_s, rec.annotations)
            pieces = category_start_pieces(rec.annotations, rec.n_samples, spec, allowed)
            for cat, plist in pieces.items():
                for piece in plist:
                    k0, k1 = _count_piece(piece)
                    if k1 >= k0:
                        self._runs[cat].setdefault(rec.patient_id, []).append(
                            (rec.recording_id, k0, k1 - k0 + 1)
                        )

    def category_patients(self, category: str) -> list[str]:
        return sorted(self._runs[category])

    def sources(self, epoch_seed: int) -> list[tuple[str, float, str]]:
        """Start positions for one epoch as (recording_id, target_start_s, category)."""
        cfg = self.cfg
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, epoch_seed])))

        # category quotas: floor + largest remainder, deterministic order
        raw = [p * cfg.segments_per_epoch for p in cfg.proportions]
        quotas = [floor(x) for x in raw]
        remainders = sorted(
            range(len(CATEGORIES)), key=lambda i: (raw[i] - quotas[i], -i), reverse=True
        )
        for i in remainders[: cfg.segments_per_epoch - sum(quotas)]:
            quotas[i] += 1

        out: list[tuple[str, float, str]] = []
        for cat, quota in zip(CATEGORIES, quotas):
            if quota == 0:
                continue
            patients = self.category_patients(cat)
            if not patients:
                raise EmptyCategory(f"no patient can produce {cat} segments")
            base, extra = divmod(quota, len(patients))
            order = list(rng.permutation(len(patients)))
            counts = {p: base for p in patients}
            for i in order[:extra]:
                counts[patients[i]] += 1
            for patient in patients:
                runs = self._runs[cat][patient]
                totals = np.array([c for _, _, c in runs])
                cum = np.cumsum(totals)
                draws = rng.integers(0, cum[-1], size=counts[patient])
                for d in np.sort(draws):
                    ri = int(np.searchsorted(cum, d, side="right"))
                    rec_id, k0, _ = runs[ri]
                    offset = int(d) - (int(cum[ri - 1]) if ri else 0)
                    out.append((rec_id, (k0 + offset) / self.spec.fs, cat))
        perm = rng.permutation(len(out))
        return [out[i] for i in perm]

    def segments(
        self,
        epoch_seed: int,
        recordings: dict[str, Recording],
        annotations: dict[str, AnnotationSet],
    ):
        """Yield materialized Segments for one epoch."""
        for rec_id, start_s, _ in self.sources(epoch_seed):
            yield extract_segment(recordings[rec_id], start_s, self.spec, annotations[rec_id])
