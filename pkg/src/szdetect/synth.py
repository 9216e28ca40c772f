"""Synthetic EEG corpus generator.

Produces referential recordings over the 19 montage electrodes: pink-noise
background with slow drift and line noise, seizure bursts (amplitude-
modulated 3 Hz oscillations on a per-patient focus), a low-amplitude
pre-ictal cue tone before each onset, post-ictal background suppression
after each offset, and unlabeled distractor bursts that mimic seizures
within a single target window but carry neither cue nor suppression and
stay shorter than real seizures. Context around the target is therefore the
only reliable way to reject distractors, mirroring the value of surrounding
signal at a desk-scale size.

Generation is deterministic from the seed; annotations exactly match the
injected burst intervals.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .manifest import Manifest, ManifestEntry, save_manifest
from .montage import MONTAGE_ELECTRODES
from .recording import Event, Recording, write_annotations, write_raw

_SLOT_S = 200.0
_EDGE_TAPER_S = 2.0


@dataclass(frozen=True)
class SyntheticSpec:
    n_patients: int = 8
    recordings_per_patient: int = 1
    duration_s: float = 1800.0
    fs: float = 256.0
    seizures_per_recording: tuple[int, int] = (2, 4)  # inclusive range
    seizure_duration_s: tuple[float, float] = (30.0, 60.0)
    burst_freq_hz: float = 3.0
    burst_amplitude_uv: float = 50.0
    am_freq_hz: float = 0.3
    background_uv: float = 10.0
    drift_uv: float = 15.0
    line_noise_uv: float = 4.0
    line_freq_hz: float = 50.0
    cue_amplitude_uv: float = 10.0  # 0 disables the pre-ictal cue
    cue_freq_hz: float = 8.0
    cue_duration_s: float = 30.0
    post_ictal_attenuation: float = 0.3  # background amplitude factor; 1 disables
    post_ictal_s: float = 15.0
    post_ictal_ramp_s: float = 10.0
    distractors_per_recording: tuple[int, int] = (3, 5)
    distractor_duration_s: tuple[float, float] = (32.0, 40.0)
    focus_size: int = 8
    val_patients: int = 1
    test_patients: int = 2
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _pink_noise(rng: np.random.Generator, n: int, fs: float, std_uv: float) -> np.ndarray:
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    spectrum[0] = 0.0
    spectrum[1:] /= np.sqrt(freqs[1:])
    x = np.fft.irfft(spectrum, n)
    return x * (std_uv / x.std())


def _taper_envelope(n: int, fs: float, taper_s: float = _EDGE_TAPER_S) -> np.ndarray:
    env = np.ones(n)
    k = min(int(taper_s * fs), n // 2)
    if k > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(k) / k))
        env[:k] = ramp
        env[-k:] = ramp[::-1]
    return env


def _burst(rng: np.random.Generator, spec: SyntheticSpec, duration_s: float) -> np.ndarray:
    n = int(round(duration_s * spec.fs))
    t = np.arange(n) / spec.fs
    carrier = np.sin(2 * np.pi * spec.burst_freq_hz * t + rng.uniform(0, 2 * np.pi))
    am = 0.55 + 0.45 * np.sin(2 * np.pi * spec.am_freq_hz * t + rng.uniform(0, 2 * np.pi))
    amp = spec.burst_amplitude_uv * rng.uniform(0.8, 1.2)
    return amp * am * carrier * _taper_envelope(n, spec.fs)


def _place_events(rng, spec, n_seizures, n_distractors):
    """Assign events to slots on a coarse grid so bursts stay far apart."""
    n_slots = int(spec.duration_s // _SLOT_S)
    if n_seizures + n_distractors > n_slots:
        raise ValueError("recording too short for the requested event counts")
    slots = rng.permutation(n_slots)[: n_seizures + n_distractors]
    placements = []
    for i, slot in enumerate(slots):
        center = (slot + 0.5) * _SLOT_S + rng.uniform(-15.0, 15.0)
        kind = "seizure" if i < n_seizures else "distractor"
        lo, hi = spec.seizure_duration_s if kind == "seizure" else spec.distractor_duration_s
        duration = rng.uniform(lo, hi)
        placements.append((kind, center - duration / 2.0, duration))
    return sorted(placements, key=lambda p: p[1])


def generate_recording(
    spec: SyntheticSpec, patient_idx: int, rec_idx: int
) -> tuple[Recording, list[Event]]:
    """One synthetic referential recording with its seizure annotations."""
    patient_rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([spec.seed, patient_idx]))
    )
    focus_idx = patient_rng.permutation(len(MONTAGE_ELECTRODES))[: spec.focus_size]
    gains = patient_rng.uniform(0.6, 1.4, size=spec.focus_size)

    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([spec.seed, patient_idx, rec_idx, 17]))
    )
    n = int(round(spec.duration_s * spec.fs))
    t = np.arange(n) / spec.fs
    n_electrodes = len(MONTAGE_ELECTRODES)

    n_sz = int(rng.integers(spec.seizures_per_recording[0], spec.seizures_per_recording[1] + 1))
    n_dis = int(
        rng.integers(spec.distractors_per_recording[0], spec.distractors_per_recording[1] + 1)
    )
    placements = _place_events(rng, spec, n_sz, n_dis) if n_sz + n_dis else []

    # post-ictal suppression envelope over the background
    suppression = np.ones(n)
    if spec.post_ictal_attenuation < 1.0:
        for kind, onset, duration in placements:
            if kind != "seizure":
                continue
            a = int(round((onset + duration) * spec.fs))
            b = min(int(round((onset + duration + spec.post_ictal_s) * spec.fs)), n)
            c = min(int(round(b + spec.post_ictal_ramp_s * spec.fs)), n)
            suppression[a:b] = spec.post_ictal_attenuation
            if c > b:
                suppression[b:c] = np.linspace(spec.post_ictal_attenuation, 1.0, c - b)

    samples = np.empty((n_electrodes, n))
    for e in range(n_electrodes):
        x = _pink_noise(rng, n, spec.fs, spec.background_uv) * suppression
        for f_hz in (0.08, 0.21):
            x += spec.drift_uv * 0.5 * np.sin(2 * np.pi * f_hz * t + rng.uniform(0, 2 * np.pi))
        x += (
            spec.line_noise_uv
            * rng.uniform(0.5, 1.5)
            * np.sin(2 * np.pi * spec.line_freq_hz * t + rng.uniform(0, 2 * np.pi))
        )
        samples[e] = x

    def add_focal(waveform: np.ndarray, start_s: float):
        a = int(round(start_s * spec.fs))
        b = min(a + len(waveform), n)
        lo = max(a, 0)
        for fi, gain in zip(focus_idx, gains):
            samples[fi, lo:b] += gain * waveform[lo - a : b - a]

    events = []
    for kind, onset, duration in placements:
        add_focal(_burst(rng, spec, duration), onset)
        if kind == "seizure":
            events.append(Event(onset, duration, "seizure"))
            if spec.cue_amplitude_uv > 0:
                cue_len = min(spec.cue_duration_s, onset)
                m = int(round(cue_len * spec.fs))
                tc = np.arange(m) / spec.fs
                cue = (
                    spec.cue_amplitude_uv
                    * np.sin(2 * np.pi * spec.cue_freq_hz * tc + rng.uniform(0, 2 * np.pi))
                    * _taper_envelope(m, spec.fs)
                )
                add_focal(cue, onset - cue_len)

    rec = Recording(
        id=f"p{patient_idx:02d}r{rec_idx:02d}",
        patient_id=f"p{patient_idx:02d}",
        channel_labels=list(MONTAGE_ELECTRODES),
        fs=spec.fs,
        samples=samples,
    )
    return rec, events


def split_for_patient(spec: SyntheticSpec, patient_idx: int) -> str:
    n_train = spec.n_patients - spec.val_patients - spec.test_patients
    if n_train < 1:
        raise ValueError("split leaves no training patients")
    if patient_idx < n_train:
        return "train"
    if patient_idx < n_train + spec.val_patients:
        return "validation"
    return "test"


def generate_corpus(spec: SyntheticSpec, out_dir: str | Path) -> Path:
    """Write the corpus (raw recordings + annotation TSVs + manifest).

    Returns the manifest path.
    """
    out_dir = Path(out_dir)
    (out_dir / "recs").mkdir(parents=True, exist_ok=True)
    (out_dir / "annos").mkdir(parents=True, exist_ok=True)

    entries = []
    for p in range(spec.n_patients):
        for r in range(spec.recordings_per_patient):
            rec, events = generate_recording(spec, p, r)
            write_raw(out_dir / "recs" / rec.id, rec)
            write_annotations(out_dir / "annos" / f"{rec.id}.tsv", events)
            entries.append(
                ManifestEntry(
                    id=rec.id,
                    patient_id=rec.patient_id,
                    path=f"recs/{rec.id}",
                    annotations=f"annos/{rec.id}.tsv",
                    split=split_for_patient(spec, p),
                )
            )
    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest_path, Manifest(entries=entries, root=out_dir))
    (out_dir / "synth_spec.json").write_text(
        json.dumps(spec.to_dict(), indent=2), encoding="utf-8"
    )
    return manifest_path
