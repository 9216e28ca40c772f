"""Canonical recording and annotation types plus the raw on-disk format.

A Recording holds referential EEG in microvolts as a float64 matrix of shape
[n_channels, n_samples]. The raw format used for synthetic data and caches is
a ``<name>.json`` sidecar (fs, channel labels, sample count) next to a
``<name>.bin`` payload of little-endian float32 samples, channel-major.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HeaderPayloadMismatch, NegativeDuration, OutOfBounds

SEIZURE = "seizure"
BACKGROUND = "background"

# 10-20 vocabulary accepted by the readers. Montage electrodes plus the
# common midline/ear extras seen in clinical files.
ELECTRODES_10_20 = (
    "Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2",
    "F7", "F8", "T3", "T4", "T5", "T6", "Fz", "Cz", "Pz",
    "Fpz", "Oz", "A1", "A2",
)

# Modern 10-10 names that alias onto the classic temporal row.
_MODERN_ALIASES = {"T7": "T3", "T8": "T4", "P7": "T5", "P8": "T6", "M1": "A1", "M2": "A2"}

_CANONICAL = {e.upper(): e for e in ELECTRODES_10_20}
_CANONICAL.update({k.upper(): v for k, v in _MODERN_ALIASES.items()})


def normalize_channel_label(label: str) -> str | None:
    """Map a vendor channel label to its bare 10-20 electrode name.

    Handles variants like ``"EEG FP1-REF"``, ``"Fp1-LE"`` or ``"fp1"``.
    Returns None for labels that do not resolve to a known electrode
    (ECG, EMG, annotation channels, ...).
    """
    name = label.strip()
    if name.upper().startswith("EEG "):
        name = name[4:]
    # strip reference suffixes: FP1-REF, FP1-LE, FP1-AVG
    for suffix in ("-REF", "-LE", "-AVG", "-A1", "-A2", "-M1", "-M2"):
        if name.upper().endswith(suffix):
            name = name[: -len(suffix)]
            break
    return _CANONICAL.get(name.strip().upper())


@dataclass
class Recording:
    """Multichannel referential EEG in microvolts."""

    id: str
    patient_id: str
    channel_labels: list[str]
    fs: float
    samples: np.ndarray  # [n_channels, n_samples], float64, microvolts

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise ValueError("samples must be a 2-D [n_channels, n_samples] array")
        if len(self.channel_labels) != self.samples.shape[0]:
            raise ValueError("channel_labels length must match samples rows")
        if len(set(self.channel_labels)) != len(self.channel_labels):
            raise ValueError("channel labels must be unique")
        if not self.fs > 0:
            raise ValueError("fs must be positive")
        if not np.isfinite(self.samples).all():
            raise ValueError("samples contain NaN or Inf")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs

    def channel(self, label: str) -> np.ndarray:
        return self.samples[self.channel_labels.index(label)]


@dataclass(frozen=True)
class Event:
    """A labeled interval, in seconds from recording start."""

    onset_s: float
    duration_s: float
    label: str = SEIZURE

    @property
    def end_s(self) -> float:
        return self.onset_s + self.duration_s


@dataclass
class AnnotationSet:
    """Normalized seizure annotations for one recording.

    Seizure events are non-overlapping and sorted after normalization;
    background rows are dropped at read time.
    """

    recording_id: str
    events: list[Event] = field(default_factory=list)

    def seizure_intervals(self) -> list[tuple[float, float]]:
        return [(e.onset_s, e.end_s) for e in self.events]


def merge_seizure_events(events: list[Event]) -> list[Event]:
    """Merge overlapping or touching seizure intervals; idempotent and order-free."""
    intervals = sorted((e.onset_s, e.end_s) for e in events if e.label == SEIZURE)
    merged: list[list[float]] = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [Event(lo, hi - lo, SEIZURE) for lo, hi in merged]


# --- annotation TSV ---

_TSV_HEADER = "onset\tduration\teventType"

_EVENT_TYPE_MAP = {
    "sz": SEIZURE, "seiz": SEIZURE, "seizure": SEIZURE,
    "bckg": BACKGROUND, "bkg": BACKGROUND, "background": BACKGROUND,
}


def read_annotations(path: str | Path, rec_duration_s: float, recording_id: str) -> AnnotationSet:
    """Parse an annotation TSV and return a normalized AnnotationSet.

    Rows are ``onset\\tduration\\teventType`` in decimal seconds. Background
    rows are discarded; overlapping seizure rows are merged.
    """
    path = Path(path)
    events = []
    with open(path, encoding="utf-8") as fp:
        header = fp.readline()
        if header.strip().split("\t")[:3] != ["onset", "duration", "eventType"]:
            raise ValueError(f"{path}: expected TSV header '{_TSV_HEADER}'")
        for line_no, line in enumerate(fp, start=2):
            if not line.strip():
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) < 3:
                raise ValueError(f"{path}:{line_no}: expected 3 tab-separated columns")
            onset, duration = float(cols[0]), float(cols[1])
            label = _EVENT_TYPE_MAP.get(cols[2].strip().lower())
            if label is None:
                raise ValueError(f"{path}:{line_no}: unknown eventType {cols[2]!r}")
            if duration <= 0:
                raise NegativeDuration(f"{path}:{line_no}: duration {duration} <= 0")
            if onset < 0 or onset + duration > rec_duration_s + 1e-9:
                raise OutOfBounds(
                    f"{path}:{line_no}: event [{onset}, {onset + duration}) outside "
                    f"recording of {rec_duration_s} s"
                )
            events.append(Event(onset, duration, label))
    return AnnotationSet(recording_id, merge_seizure_events(events))


def write_annotations(path: str | Path, events: list[Event]) -> None:
    """Write events as an annotation TSV (same schema the reader accepts)."""
    lines = [_TSV_HEADER]
    for e in events:
        kind = "sz" if e.label == SEIZURE else "bckg"
        lines.append(f"{e.onset_s:.6f}\t{e.duration_s:.6f}\t{kind}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- raw format ---

def write_raw(path_stem: str | Path, rec: Recording) -> tuple[Path, Path]:
    """Write a Recording as <stem>.json + <stem>.bin (float32 LE, channel-major)."""
    stem = Path(path_stem)
    header = {
        "id": rec.id,
        "patient_id": rec.patient_id,
        "fs": rec.fs,
        "channel_labels": rec.channel_labels,
        "n_samples": rec.n_samples,
    }
    json_path = stem.with_suffix(".json")
    bin_path = stem.with_suffix(".bin")
    json_path.write_text(json.dumps(header, indent=2), encoding="utf-8")
    rec.samples.astype("<f4").tofile(bin_path)
    return json_path, bin_path


def read_raw(path: str | Path) -> Recording:
    """Read a raw-format recording (the .json or .bin path, or the bare stem)."""
    stem = Path(path)
    if stem.suffix in (".json", ".bin"):
        stem = stem.with_suffix("")
    header = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    n_channels = len(header["channel_labels"])
    n_samples = int(header["n_samples"])
    payload = np.fromfile(stem.with_suffix(".bin"), dtype="<f4")
    if payload.size != n_channels * n_samples:
        raise HeaderPayloadMismatch(
            f"{stem}.bin holds {payload.size} floats, header declares "
            f"{n_channels} x {n_samples}"
        )
    samples = payload.astype(np.float64).reshape(n_channels, n_samples)
    return Recording(
        id=header["id"],
        patient_id=header.get("patient_id", ""),
        channel_labels=list(header["channel_labels"]),
        fs=float(header["fs"]),
        samples=samples,
    )


def expected_samples(duration_s: float, fs: float) -> int:
    """n_samples == round(duration_s * fs), the Recording invariant."""
    return int(round(duration_s * fs))


def check_recording_invariants(rec: Recording) -> None:
    """Raise if a Recording violates its declared invariants."""
    if abs(rec.n_samples - rec.duration_s * rec.fs) > 0.5:
        raise ValueError("n_samples inconsistent with duration and fs")
    if not math.isfinite(rec.fs) or rec.fs <= 0:
        raise ValueError("fs must be a positive finite number")
