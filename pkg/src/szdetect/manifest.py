"""Dataset manifest: recordings, patients, split assignment, annotation paths.

The manifest is a JSON file; relative paths resolve against its directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .edf import read_edf, read_edf_duration
from .recording import AnnotationSet, Recording, read_annotations, read_raw

SPLITS = ("train", "validation", "test")


@dataclass
class ManifestEntry:
    id: str
    patient_id: str
    path: str  # raw-format stem or .edf file
    annotations: str | None
    split: str
    format: str = "raw"  # raw | edf
    long_form: bool = False  # apply hour-chunk curation when training

    def load_recording(self, root: Path) -> Recording:
        p = root / self.path
        rec = read_edf(p) if self.format == "edf" else read_raw(p)
        rec.id = self.id
        rec.patient_id = self.patient_id
        return rec

    def load_annotations(self, root: Path, duration_s: float) -> AnnotationSet:
        if self.annotations is None:
            return AnnotationSet(self.id, [])
        return read_annotations(root / self.annotations, duration_s, self.id)

    def duration_s(self, root: Path) -> float:
        """Recording duration from the header alone (no sample data read)."""
        if self.format == "edf":
            return read_edf_duration(root / self.path)
        header = json.loads((root / self.path).with_suffix(".json").read_text(encoding="utf-8"))
        return header["n_samples"] / header["fs"]


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    root: Path = Path(".")

    def split(self, name: str) -> list[ManifestEntry]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}; expected one of {SPLITS}")
        return [e for e in self.entries if e.split == name]

    def patients(self, split_name: str | None = None) -> list[str]:
        entries = self.entries if split_name is None else self.split(split_name)
        return sorted({e.patient_id for e in entries})


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    entries = []
    for row in doc["recordings"]:
        entry = ManifestEntry(
            id=row["id"],
            patient_id=row["patient_id"],
            path=row["path"],
            annotations=row.get("annotations"),
            split=row["split"],
            format=row.get("format", "raw"),
            long_form=bool(row.get("long_form", False)),
        )
        if entry.split not in SPLITS:
            raise ValueError(f"{path}: recording {entry.id}: bad split {entry.split!r}")
        entries.append(entry)
    return Manifest(entries=entries, root=path.parent)


def save_manifest(path: str | Path, manifest: Manifest) -> None:
    rows = []
    for e in manifest.entries:
        row = {
            "id": e.id,
            "patient_id": e.patient_id,
            "path": e.path,
            "annotations": e.annotations,
            "split": e.split,
            "format": e.format,
        }
        if e.long_form:
            row["long_form"] = True
        rows.append(row)
    Path(path).write_text(json.dumps({"recordings": rows}, indent=2), encoding="utf-8")
