"""Minimal EDF reader and writer for continuous recordings.

Implements the fixed 256-byte header, the field-major per-signal headers,
and 16-bit little-endian two's-complement sample records. EDF+ extensions
(annotations, discontinuous records) are out of scope; seizure labels come
from the annotation TSV sidecar.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedHeader, MixedSamplingRates, TruncatedRecord
from .recording import Recording, normalize_channel_label

_HEADER_LEN = 256
_SIGNAL_HEADER_LEN = 256


@dataclass
class _SignalHeader:
    label: str
    transducer: str
    dimension: str
    phys_min: float
    phys_max: float
    dig_min: int
    dig_max: int
    prefiltering: str
    samples_per_record: int


def _ascii_field(value: str, width: int) -> bytes:
    out = value.encode("ascii", errors="replace")[:width]
    return out.ljust(width)


def _parse_float(raw: bytes, what: str) -> float:
    try:
        return float(raw.decode("ascii").strip())
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedHeader(f"cannot parse {what}: {raw!r}") from exc


def _parse_int(raw: bytes, what: str) -> int:
    try:
        return int(raw.decode("ascii").strip())
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedHeader(f"cannot parse {what}: {raw!r}") from exc


def digital_to_physical(digital: np.ndarray, sig: _SignalHeader) -> np.ndarray:
    """physical = (digital - dig_min) * (phys_max - phys_min)/(dig_max - dig_min) + phys_min"""
    scale = (sig.phys_max - sig.phys_min) / (sig.dig_max - sig.dig_min)
    return (digital.astype(np.float64) - sig.dig_min) * scale + sig.phys_min


def read_edf(path: str | Path) -> Recording:
    """Parse a continuous EDF file into a Recording.

    Signals whose label does not normalize to a 10-20 electrode are dropped.
    All retained EEG signals must share one sampling rate.

    Raises:
        MalformedHeader: a byte-level header field fails validation.
        MixedSamplingRates: EEG signals disagree on sampling rate.
        TruncatedRecord: the data section is shorter than the header claims.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER_LEN:
        raise MalformedHeader(f"{path}: file shorter than the 256-byte EDF header")
    head = blob[:_HEADER_LEN]

    version = head[0:8].decode("ascii", errors="replace").strip()
    if version != "0":
        raise MalformedHeader(f"{path}: unsupported EDF version {version!r}")
    patient_id = head[8:88].decode("ascii", errors="replace").strip()
    recording_id = head[88:168].decode("ascii", errors="replace").strip()
    header_bytes = _parse_int(head[184:192], "header byte count")
    n_records = _parse_int(head[236:244], "number of data records")
    record_duration = _parse_float(head[244:252], "record duration")
    n_signals = _parse_int(head[252:256], "signal count")

    if n_signals <= 0:
        raise MalformedHeader(f"{path}: signal count {n_signals} must be positive")
    if n_records < 0:
        raise MalformedHeader(f"{path}: record count {n_records} must be non-negative")
    if record_duration <= 0:
        raise MalformedHeader(f"{path}: record duration {record_duration} must be positive")
    expected_header = _HEADER_LEN + n_signals * _SIGNAL_HEADER_LEN
    if header_bytes != expected_header:
        raise MalformedHeader(
            f"{path}: header byte count {header_bytes} != {expected_header} "
            f"for {n_signals} signals"
        )
    if len(blob) < expected_header:
        raise MalformedHeader(f"{path}: file ends inside the signal headers")

    sig_block = blob[_HEADER_LEN:expected_header]

    def field(offset: int, width: int, i: int) -> bytes:
        start = offset * n_signals + i * width
        return sig_block[start : start + width]

    signals = []
    for i in range(n_signals):
        dig_min = _parse_int(field(16 + 80 + 8 + 8 + 8, 8, i), "digital minimum")
        dig_max = _parse_int(field(16 + 80 + 8 + 8 + 8 + 8, 8, i), "digital maximum")
        phys_min = _parse_float(field(16 + 80 + 8, 8, i), "physical minimum")
        phys_max = _parse_float(field(16 + 80 + 8 + 8, 8, i), "physical maximum")
        if dig_max <= dig_min:
            raise MalformedHeader(f"{path}: signal {i}: digital range [{dig_min}, {dig_max}]")
        if phys_max == phys_min:
            raise MalformedHeader(f"{path}: signal {i}: degenerate physical range")
        spr = _parse_int(field(16 + 80 + 8 + 8 + 8 + 8 + 8 + 80, 8, i), "samples per record")
        if spr <= 0:
            raise MalformedHeader(f"{path}: signal {i}: samples per record {spr}")
        signals.append(
            _SignalHeader(
                label=field(0, 16, i).decode("ascii", errors="replace").strip(),
                transducer=field(16, 80, i).decode("ascii", errors="replace").strip(),
                dimension=field(16 + 80, 8, i).decode("ascii", errors="replace").strip(),
                phys_min=phys_min,
                phys_max=phys_max,
                dig_min=dig_min,
                dig_max=dig_max,
                prefiltering="",
                samples_per_record=spr,
            )
        )

    record_samples = sum(s.samples_per_record for s in signals)
    expected_data = n_records * record_samples * 2
    data = blob[expected_header:]
    if len(data) < expected_data:
        raise TruncatedRecord(
            f"{path}: data section holds {len(data)} bytes, header claims {expected_data}"
        )
    raw = np.frombuffer(data[:expected_data], dtype="<i2").reshape(n_records, record_samples)

    # keep EEG signals only, in file order
    keep: list[tuple[int, str]] = []
    seen: set[str] = set()
    for i, sig in enumerate(signals):
        name = normalize_channel_label(sig.label)
        if name is not None and name not in seen:
            keep.append((i, name))
            seen.add(name)
    if not keep:
        raise MalformedHeader(f"{path}: no recognizable EEG signals")

    rates = {signals[i].samples_per_record / record_duration for i, _ in keep}
    if len(rates) != 1:
        raise MixedSamplingRates(f"{path}: EEG sampling rates {sorted(rates)}")
    fs = rates.pop()

    offsets = np.cumsum([0] + [s.samples_per_record for s in signals])
    channels = []
    for i, _ in keep:
        digital = raw[:, offsets[i] : offsets[i + 1]].reshape(-1)
        channels.append(digital_to_physical(digital, signals[i]))
    samples = np.stack(channels)
    if not np.isfinite(samples).all():
        raise MalformedHeader(f"{path}: non-finite samples after conversion")

    return Recording(
        id=recording_id or path.stem,
        patient_id=patient_id,
        channel_labels=[name for _, name in keep],
        fs=fs,
        samples=samples,
    )


def read_edf_duration(path: str | Path) -> float:
    """Recording duration from the fixed header alone."""
    with open(path, "rb") as fp:
        head = fp.read(_HEADER_LEN)
    if len(head) < _HEADER_LEN:
        raise MalformedHeader(f"{path}: file shorter than the 256-byte EDF header")
    n_records = _parse_int(head[236:244], "number of data records")
    record_duration = _parse_float(head[244:252], "record duration")
    return n_records * record_duration


def write_edf(
    path: str | Path,
    rec: Recording,
    record_duration: float = 1.0,
    phys_range: tuple[float, float] = (-2000.0, 2000.0),
    extra_signals: dict[str, np.ndarray] | None = None,
) -> None:
    """Write a Recording as a continuous EDF file.

    Samples are quantized to the 16-bit digital range over `phys_range`;
    values outside the range are clipped. `extra_signals` adds non-EEG
    channels (e.g. ECG) with the same sampling rate, for reader tests.
    Recording length must be a whole number of data records.
    """
    path = Path(path)
    spr = rec.fs * record_duration
    if abs(spr - round(spr)) > 1e-9:
        raise ValueError("fs * record_duration must be an integer")
    spr = int(round(spr))
    if rec.n_samples % spr != 0:
        raise ValueError("recording length must be a whole number of data records")
    n_records = rec.n_samples // spr

    labels = list(rec.channel_labels)
    rows = [rec.samples[i] for i in range(rec.n_channels)]
    for name, sig in (extra_signals or {}).items():
        if len(sig) != rec.n_samples:
            raise ValueError("extra signals must match the recording length")
        labels.append(name)
        rows.append(np.asarray(sig, dtype=np.float64))
    n_signals = len(labels)

    phys_min, phys_max = phys_range
    dig_min, dig_max = -32768, 32767
    scale = (dig_max - dig_min) / (phys_max - phys_min)

    head = b"".join(
        [
            _ascii_field("0", 8),
            _ascii_field(rec.patient_id, 80),
            _ascii_field(rec.id, 80),
            _ascii_field("01.01.00", 8),
            _ascii_field("00.00.00", 8),
            _ascii_field(str(_HEADER_LEN + n_signals * _SIGNAL_HEADER_LEN), 8),
            _ascii_field("", 44),
            _ascii_field(str(n_records), 8),
            _ascii_field(f"{record_duration:g}", 8),
            _ascii_field(str(n_signals), 4),
        ]
    )

    def column(width: int, values: list[str]) -> bytes:
        return b"".join(_ascii_field(v, width) for v in values)

    sig_head = b"".join(
        [
            column(16, labels),
            column(80, [""] * n_signals),
            column(8, ["uV"] * n_signals),
            column(8, [f"{phys_min:g}"] * n_signals),
            column(8, [f"{phys_max:g}"] * n_signals),
            column(8, [str(dig_min)] * n_signals),
            column(8, [str(dig_max)] * n_signals),
            column(80, [""] * n_signals),
            column(8, [str(spr)] * n_signals),
            column(32, [""] * n_signals),
        ]
    )

    digital = np.empty((n_signals, rec.n_samples), dtype="<i2")
    for i, row in enumerate(rows):
        q = np.round((np.clip(row, phys_min, phys_max) - phys_min) * scale) + dig_min
        digital[i] = q.astype("<i2")

    # interleave per record, field order: record 0 signal 0..n, record 1 ...
    data = digital.reshape(n_signals, n_records, spr).transpose(1, 0, 2)
    path.write_bytes(head + sig_head + data.tobytes())
