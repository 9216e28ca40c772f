import numpy as np
import pytest

from szdetect.edf import _SignalHeader, digital_to_physical, read_edf, read_edf_duration, write_edf
from szdetect.errors import MalformedHeader, MixedSamplingRates, TruncatedRecord
from szdetect.recording import Recording


def _quantum(phys_range=(-2000.0, 2000.0)):
    return (phys_range[1] - phys_range[0]) / 65535


def _fixture(rng, fs=256.0, seconds=4, labels=("Fp1", "Fp2", "Cz")):
    n = int(fs * seconds)
    data = 150.0 * rng.standard_normal((len(labels), n))
    return Recording("fix01", "patientA", list(labels), fs, data)


class TestConversionFormula:
    def test_dig_min_maps_to_phys_min(self):
        sig = _SignalHeader("x", "", "uV", -200.0, 200.0, -2048, 2047, "", 256)
        assert digital_to_physical(np.array([-2048]), sig)[0] == -200.0

    def test_stated_midpoint(self):
        # digital=0, dig range [-2048, 2047], phys range [-200, 200]
        sig = _SignalHeader("x", "", "uV", -200.0, 200.0, -2048, 2047, "", 256)
        value = digital_to_physical(np.array([0]), sig)[0]
        assert value == pytest.approx(2048 * (400 / 4095) - 200)
        assert value == pytest.approx(0.04884, abs=1e-4)


class TestRoundTrip:
    def test_write_then_read_within_quantum(self, tmp_path, rng):
        rec = _fixture(rng)
        path = tmp_path / "f.edf"
        write_edf(path, rec)
        back = read_edf(path)
        assert back.channel_labels == rec.channel_labels
        assert back.fs == rec.fs
        assert back.n_samples == rec.n_samples
        assert np.max(np.abs(back.samples - rec.samples)) <= _quantum() / 2 + 1e-12

    def test_exactly_representable_values_bit_exact(self, tmp_path):
        # values on the digital grid survive write -> read exactly
        phys_min, phys_max = -2000.0, 2000.0
        scale = (phys_max - phys_min) / 65535
        digital = np.arange(-100, 100, dtype=np.int64)
        physical = (digital + 32768) * scale + phys_min
        rec = Recording("g", "p", ["Fp1"], 100.0, physical[None, :])
        path = tmp_path / "g.edf"
        write_edf(path, rec, record_duration=2.0)
        back = read_edf(path)
        assert np.array_equal(back.samples, rec.samples)

    def test_metadata_preserved(self, tmp_path, rng):
        rec = _fixture(rng)
        write_edf(tmp_path / "m.edf", rec)
        back = read_edf(tmp_path / "m.edf")
        assert back.id == "fix01"
        assert back.patient_id == "patientA"

    def test_duration_header_only(self, tmp_path, rng):
        rec = _fixture(rng, seconds=6)
        write_edf(tmp_path / "d.edf", rec)
        assert read_edf_duration(tmp_path / "d.edf") == pytest.approx(6.0)


class TestNonEegHandling:
    def test_non_eeg_signals_dropped(self, tmp_path, rng):
        rec = _fixture(rng)
        extra = {"ECG": 500.0 * rng.standard_normal(rec.n_samples)}
        write_edf(tmp_path / "x.edf", rec, extra_signals=extra)
        back = read_edf(tmp_path / "x.edf")
        assert back.channel_labels == ["Fp1", "Fp2", "Cz"]

    def test_vendor_labels_normalized(self, tmp_path, rng):
        rec = _fixture(rng, labels=("Fp1", "Fp2", "Cz"))
        rec.channel_labels = ["EEG FP1-REF", "EEG FP2-REF", "EEG CZ-REF"]
        write_edf(tmp_path / "v.edf", rec)
        assert read_edf(tmp_path / "v.edf").channel_labels == ["Fp1", "Fp2", "Cz"]


class TestErrors:
    def test_truncated_record(self, tmp_path, rng):
        rec = _fixture(rng)
        path = tmp_path / "t.edf"
        write_edf(path, rec)
        blob = path.read_bytes()
        path.write_bytes(blob[:-100])
        with pytest.raises(TruncatedRecord):
            read_edf(path)

    def test_malformed_numeric_field(self, tmp_path, rng):
        rec = _fixture(rng)
        path = tmp_path / "h.edf"
        write_edf(path, rec)
        blob = bytearray(path.read_bytes())
        blob[252:256] = b"abcd"  # signal count field
        path.write_bytes(bytes(blob))
        with pytest.raises(MalformedHeader):
            read_edf(path)

    def test_bad_version_rejected(self, tmp_path, rng):
        rec = _fixture(rng)
        path = tmp_path / "w.edf"
        write_edf(path, rec)
        blob = bytearray(path.read_bytes())
        blob[0:8] = b"9       "
        path.write_bytes(bytes(blob))
        with pytest.raises(MalformedHeader):
            read_edf(path)

    def test_mixed_sampling_rates(self, tmp_path, rng):
        rec = _fixture(rng)
        path = tmp_path / "s.edf"
        write_edf(path, rec)
        blob = bytearray(path.read_bytes())
        # samples-per-record column starts after label/transducer/dim/ranges/prefilter
        n_signals = 3
        offset = 256 + n_signals * (16 + 80 + 8 + 8 + 8 + 8 + 8 + 80)
        blob[offset : offset + 8] = b"128     "  # halve signal 0's rate claim
        path.write_bytes(bytes(blob))
        # data section now appears longer than needed; rate check fires first
        with pytest.raises((MixedSamplingRates, TruncatedRecord)):
            read_edf(path)

    def test_file_too_short(self, tmp_path):
        path = tmp_path / "tiny.edf"
        path.write_bytes(b"0" * 100)
        with pytest.raises(MalformedHeader):
            read_edf(path)
