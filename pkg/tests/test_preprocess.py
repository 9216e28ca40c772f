import numpy as np
import pytest

from szdetect.montage import MONTAGE_ELECTRODES
from szdetect.preprocess import PreprocessConfig, cached_preprocess, preprocess_pipeline
from szdetect.recording import Recording, read_raw, write_raw

from conftest import make_referential


def bandpower(x: np.ndarray, fs: float, lo: float, hi: float) -> float:
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1.0 / fs)
    return spec[(freqs >= lo) & (freqs <= hi)].sum()


class TestPipeline:
    def test_zero_recording_stays_zero(self):
        rec = Recording(
            "z", "p", list(MONTAGE_ELECTRODES), 256.0, np.zeros((19, 256 * 30))
        )
        out = preprocess_pipeline(rec)
        assert out.n_channels == 18
        assert out.fs == 128.0
        assert np.max(np.abs(out.samples)) < 1e-12

    def test_line_noise_suppressed_30db(self, rng):
        fs = 256.0
        n = int(fs * 60)
        t = np.arange(n) / fs
        samples = rng.standard_normal((19, n))
        for e in range(19):
            samples[e] += 20.0 * np.sin(2 * np.pi * 50.0 * t + rng.uniform(0, 2 * np.pi))
        rec = Recording("n", "p", list(MONTAGE_ELECTRODES), fs, samples)
        out = preprocess_pipeline(rec, PreprocessConfig(notch_hz=50.0))

        # 50 Hz amplitude on each bipolar channel after the pipeline
        t_out = np.arange(out.n_samples) / 128.0
        for ch in out.samples:
            c = np.cos(2 * np.pi * 50.0 * t_out)
            s = np.sin(2 * np.pi * 50.0 * t_out)
            amp = 2.0 * np.hypot(np.dot(ch, c), np.dot(ch, s)) / out.n_samples
            assert amp <= 0.7

    def test_output_shape_contract(self, rng):
        out = preprocess_pipeline(make_referential(rng, duration_s=20.0))
        assert out.fs == 128.0
        assert out.n_channels == 18

    def test_linearity(self, rng):
        a = make_referential(rng, duration_s=15.0)
        b = make_referential(np.random.default_rng(77), duration_s=15.0)
        combo = Recording(
            "c", "p", list(MONTAGE_ELECTRODES), 256.0, 2.0 * a.samples + 0.5 * b.samples
        )
        out_combo = preprocess_pipeline(combo).samples
        out_parts = 2.0 * preprocess_pipeline(a).samples + 0.5 * preprocess_pipeline(b).samples
        scale = np.max(np.abs(out_parts)) + 1e-12
        assert np.max(np.abs(out_combo - out_parts)) / scale < 1e-6

    def test_imputes_missing_montage_electrode(self, rng):
        full = make_referential(rng, duration_s=15.0)
        keep = [i for i, e in enumerate(full.channel_labels) if e != "F4"]
        rec = Recording(
            "m", "p", [full.channel_labels[i] for i in keep], 256.0, full.samples[keep]
        )
        out = preprocess_pipeline(rec)
        assert out.n_channels == 18

    def test_notch_60_configurable(self, rng):
        fs = 256.0
        n = int(fs * 30)
        t = np.arange(n) / fs
        samples = rng.standard_normal((19, n))
        samples += 20.0 * np.sin(2 * np.pi * 60.0 * t)[None, :] * rng.uniform(
            0.5, 1.5, size=(19, 1)
        )
        rec = Recording("n60", "p", list(MONTAGE_ELECTRODES), fs, samples)
        out = preprocess_pipeline(rec, PreprocessConfig(notch_hz=60.0))
        for ch in out.samples[:4]:
            power = bandpower(ch, 128.0, 59.5, 60.5)
            total = bandpower(ch, 128.0, 0.5, 64.0)
            assert power / total < 0.01


class TestCache:
    def _reader(self, manifest_root):
        return lambda p: read_raw(p)

    def test_cache_equals_direct_pipeline(self, tmp_path, rng):
        rec = make_referential(rng, duration_s=15.0)
        write_raw(tmp_path / "src", rec)
        cfg = PreprocessConfig(notch_hz=50.0)
        paths = [tmp_path / "src.json", tmp_path / "src.bin"]
        cached = cached_preprocess(paths, lambda p: read_raw(p), cfg, tmp_path / "cache")
        direct = preprocess_pipeline(read_raw(tmp_path / "src"), cfg)
        # cache stores float32 payloads; compare at that precision
        assert np.array_equal(cached.samples, direct.samples.astype(np.float32).astype(np.float64))

    def test_warm_cache_no_recompute(self, tmp_path, rng):
        rec = make_referential(rng, duration_s=15.0)
        write_raw(tmp_path / "src", rec)
        cfg = PreprocessConfig()
        paths = [tmp_path / "src.json", tmp_path / "src.bin"]
        calls = []

        def reader(p):
            calls.append(p)
            return read_raw(p)

        first = cached_preprocess(paths, reader, cfg, tmp_path / "cache")
        second = cached_preprocess(paths, reader, cfg, tmp_path / "cache")
        assert len(calls) == 1
        assert np.array_equal(first.samples, second.samples)

    def test_corrupt_cache_detected_and_recomputed(self, tmp_path, rng):
        rec = make_referential(rng, duration_s=15.0)
        write_raw(tmp_path / "src", rec)
        cfg = PreprocessConfig()
        paths = [tmp_path / "src.json", tmp_path / "src.bin"]
        first = cached_preprocess(paths, lambda p: read_raw(p), cfg, tmp_path / "cache")
        bins = list((tmp_path / "cache").glob("*.bin"))
        assert len(bins) == 1
        blob = bytearray(bins[0].read_bytes())
        blob[100] ^= 0xFF
        bins[0].write_bytes(bytes(blob))
        again = cached_preprocess(paths, lambda p: read_raw(p), cfg, tmp_path / "cache")
        assert np.array_equal(first.samples, again.samples)

    def test_config_changes_cache_key(self, tmp_path, rng):
        rec = make_referential(rng, duration_s=15.0)
        write_raw(tmp_path / "src", rec)
        paths = [tmp_path / "src.json", tmp_path / "src.bin"]
        cached_preprocess(paths, lambda p: read_raw(p), PreprocessConfig(50.0), tmp_path / "cache")
        cached_preprocess(paths, lambda p: read_raw(p), PreprocessConfig(60.0), tmp_path / "cache")
        assert len(list((tmp_path / "cache").glob("*.bin"))) == 2
