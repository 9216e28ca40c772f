"""The standardization pipeline: referential EEG in, 18-channel bipolar
128 Hz EEG out.

Stage order: impute missing electrodes, bipolar montage, 0.5 Hz highpass,
64 Hz lowpass, line-noise notch, resample to 128 Hz. Filters are designed
at the native sampling rate and applied before resampling. Every stage is
linear, so the whole pipeline is linear in the input samples.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .filters import design_fir, filter_reflect, resample_to_128
from .montage import MontageSpec, impute_missing, to_bipolar
from .recording import Recording, read_raw, write_raw

HIGHPASS_HZ = 0.5
HIGHPASS_TRANSITION_HZ = 0.5
LOWPASS_HZ = 64.0
LOWPASS_TRANSITION_HZ = 16.0
NOTCH_TRANSITION_HZ = 1.0
NOTCH_STOP_WIDTH_HZ = 1.0


@dataclass(frozen=True)
class PreprocessConfig:
    """Pipeline settings; notch frequency is 50 or 60 Hz per recording site."""

    notch_hz: float = 50.0
    cache_dir: str | None = None

    def cache_key_payload(self) -> dict:
        return {"notch_hz": self.notch_hz, "version": 1}


def preprocess_pipeline(
    rec: Recording,
    config: PreprocessConfig | None = None,
    spec: MontageSpec | None = None,
) -> Recording:
    """Run the full standardization pipeline on one referential recording.

    The 64 Hz lowpass transition narrows when Nyquist leaves less than
    16 Hz of headroom, and the stage is skipped entirely at fs = 128 where
    nothing above 64 Hz can exist.
    """
    config = config or PreprocessConfig()
    spec = spec or MontageSpec()

    rec = impute_missing(rec, spec)
    rec = to_bipolar(rec, spec)
    fs = rec.fs

    hp = design_fir("highpass", HIGHPASS_HZ, HIGHPASS_TRANSITION_HZ, fs)
    rec = filter_reflect(rec, hp)

    lp_transition = min(LOWPASS_TRANSITION_HZ, fs / 2.0 - LOWPASS_HZ)
    if lp_transition > 0:
        lp = design_fir("lowpass", LOWPASS_HZ, lp_transition, fs)
        rec = filter_reflect(rec, lp)

    notch = design_fir(
        "notch", config.notch_hz, NOTCH_TRANSITION_HZ, fs, stop_width_hz=NOTCH_STOP_WIDTH_HZ
    )
    rec = filter_reflect(rec, notch)

    return resample_to_128(rec)


# --- content-hash keyed cache ---

def _source_digest(paths: list[Path], config: PreprocessConfig) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(config.cache_key_payload(), sort_keys=True).encode())
    for p in sorted(paths):
        h.update(p.read_bytes())
    return h.hexdigest()


def _payload_digest(bin_path: Path) -> str:
    return hashlib.sha256(bin_path.read_bytes()).hexdigest()


def cached_preprocess(
    rec_paths: list[str | Path],
    reader,
    config: PreprocessConfig,
    cache_dir: str | Path,
) -> Recording:
    """Preprocess with an idempotent on-disk cache in the raw format.

    The cache key hashes the source bytes plus the pipeline settings; a
    stored payload digest detects corrupted entries, which are recomputed.
    `reader` maps the first source path to a Recording.
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    paths = [Path(p) for p in rec_paths]
    key = _source_digest(paths, config)
    stem = cache_dir / key
    meta_path = stem.with_suffix(".meta.json")

    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            if meta.get("payload_sha256") == _payload_digest(stem.with_suffix(".bin")):
                return read_raw(stem)
        except (OSError, ValueError, KeyError):
            pass  # fall through to recompute

    out = preprocess_pipeline(reader(paths[0]), config)
    _, bin_path = write_raw(stem, out)
    meta_path.write_text(
        json.dumps({"key": key, "payload_sha256": _payload_digest(bin_path)}),
        encoding="utf-8",
    )
    return read_raw(stem)
