import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szdetect.errors import HeaderPayloadMismatch, NegativeDuration, OutOfBounds
from szdetect.recording import (
    AnnotationSet,
    Event,
    Recording,
    merge_seizure_events,
    normalize_channel_label,
    read_annotations,
    read_raw,
    write_annotations,
    write_raw,
)


class TestRawFormat:
    def test_zeros_round_trip(self, tmp_path):
        rec = Recording("r0", "p0", ["a", "b"], 16.0, np.zeros((2, 4)))
        write_raw(tmp_path / "r0", rec)
        back = read_raw(tmp_path / "r0")
        assert back.duration_s == pytest.approx(4 / 16.0)
        assert np.all(back.samples == 0.0)
        assert back.channel_labels == ["a", "b"]

    def test_duration_from_header(self, tmp_path, rng):
        rec = Recording("r1", "p0", ["a", "b"], 256.0, rng.standard_normal((2, 256)))
        write_raw(tmp_path / "r1", rec)
        assert read_raw(tmp_path / "r1").duration_s == pytest.approx(1.0)

    def test_float32_payload_widened(self, tmp_path, rng):
        data = rng.standard_normal((3, 100))
        write_raw(tmp_path / "r2", Recording("r2", "p", ["a", "b", "c"], 128.0, data))
        back = read_raw(tmp_path / "r2")
        assert back.samples.dtype == np.float64
        assert np.allclose(back.samples, data, atol=1e-6)
        assert np.array_equal(back.samples, data.astype(np.float32).astype(np.float64))

    def test_truncated_payload_rejected(self, tmp_path, rng):
        write_raw(tmp_path / "r3", Recording("r3", "p", ["a"], 128.0, rng.standard_normal((1, 64))))
        bin_path = tmp_path / "r3.bin"
        bin_path.write_bytes(bin_path.read_bytes()[:-4])
        with pytest.raises(HeaderPayloadMismatch):
            read_raw(tmp_path / "r3")


class TestRecordingInvariants:
    def test_rejects_nan(self):
        bad = np.zeros((1, 8))
        bad[0, 3] = np.nan
        with pytest.raises(ValueError):
            Recording("x", "p", ["a"], 128.0, bad)

    def test_rejects_duplicate_labels(self):
        with pytest.raises(ValueError):
            Recording("x", "p", ["a", "a"], 128.0, np.zeros((2, 8)))

    def test_rejects_nonpositive_fs(self):
        with pytest.raises(ValueError):
            Recording("x", "p", ["a"], 0.0, np.zeros((1, 8)))


class TestLabelNormalization:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("EEG FP1-REF", "Fp1"),
            ("EEG FP1-LE", "Fp1"),
            ("fp2", "Fp2"),
            ("Cz", "Cz"),
            ("T7", "T3"),
            ("P8", "T6"),
            ("ECG", None),
            ("EMG chin", None),
        ],
    )
    def test_aliases(self, raw, expected):
        assert normalize_channel_label(raw) == expected


class TestAnnotations:
    def _write(self, path, rows):
        lines = ["onset\tduration\teventType"] + [f"{o}\t{d}\t{k}" for o, d, k in rows]
        path.write_text("\n".join(lines) + "\n")

    def test_overlapping_rows_merge(self, tmp_path):
        path = tmp_path / "a.tsv"
        self._write(path, [(10, 20, "sz"), (25, 10, "sz")])
        ann = read_annotations(path, 3600.0, "r")
        assert [(e.onset_s, e.end_s) for e in ann.events] == [(10.0, 35.0)]

    def test_background_rows_dropped(self, tmp_path):
        path = tmp_path / "b.tsv"
        self._write(path, [(0, 5, "bckg")])
        assert read_annotations(path, 100.0, "r").events == []

    def test_out_of_bounds(self, tmp_path):
        path = tmp_path / "c.tsv"
        self._write(path, [(3590, 20, "sz")])
        with pytest.raises(OutOfBounds):
            read_annotations(path, 3600.0, "r")

    def test_negative_duration(self, tmp_path):
        path = tmp_path / "d.tsv"
        self._write(path, [(10, -1, "sz")])
        with pytest.raises(NegativeDuration):
            read_annotations(path, 3600.0, "r")

    def test_round_trip(self, tmp_path):
        events = [Event(10.5, 20.25), Event(100.0, 30.0)]
        write_annotations(tmp_path / "e.tsv", events)
        ann = read_annotations(tmp_path / "e.tsv", 200.0, "r")
        assert [(e.onset_s, e.duration_s) for e in ann.events] == [(10.5, 20.25), (100.0, 30.0)]


@st.composite
def event_lists(draw):
    n = draw(st.integers(0, 8))
    events = []
    for _ in range(n):
        onset = draw(st.floats(0, 500))
        duration = draw(st.floats(0.5, 60))
        events.append(Event(round(onset, 3), round(duration, 3)))
    return events


class TestMergeProperties:
    @given(event_lists())
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, events):
        once = merge_seizure_events(events)
        assert merge_seizure_events(once) == once

    @given(event_lists(), st.randoms())
    @settings(max_examples=200, deadline=None)
    def test_order_independent(self, events, rand):
        shuffled = list(events)
        rand.shuffle(shuffled)
        assert merge_seizure_events(shuffled) == merge_seizure_events(events)

    @given(event_lists())
    @settings(max_examples=200, deadline=None)
    def test_non_overlapping_and_sorted(self, events):
        merged = merge_seizure_events(events)
        for a, b in zip(merged, merged[1:]):
            assert a.end_s < b.onset_s

    def test_normalized_annotation_set(self):
        events = [Event(5, 10), Event(8, 10), Event(40, 5)]
        ann = AnnotationSet("r", merge_seizure_events(events))
        assert ann.seizure_intervals() == [(5.0, 18.0), (40.0, 45.0)]
