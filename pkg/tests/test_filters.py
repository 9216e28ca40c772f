import numpy as np
import pytest

from szdetect.errors import InvalidBand, TooShort, UpsampleUnsupported
from szdetect.filters import FirFilter, design_fir, filter_reflect, resample_to_128
from szdetect.recording import Recording


def dft_gain(taps: np.ndarray, freq_hz: float, fs: float) -> float:
    """Independent magnitude response: direct DFT of the taps."""
    n = np.arange(len(taps))
    return abs(np.sum(taps * np.exp(-2j * np.pi * freq_hz * n / fs)))


def to_db(gain: float) -> float:
    return 20.0 * np.log10(max(gain, 1e-300))


class TestDesign:
    def test_highpass_dc_gain_exactly_zero(self):
        f = design_fir("highpass", 0.5, 0.5, 256.0)
        assert f.taps.sum() == pytest.approx(0.0, abs=1e-9)
        assert dft_gain(f.taps, 0.0, 256.0) == pytest.approx(0.0, abs=1e-9)

    def test_lowpass_passband_gain(self):
        f = design_fir("lowpass", 64.0, 16.0, 256.0)
        assert abs(dft_gain(f.taps, 10.0, 256.0) - 1.0) < 0.05
        assert f.taps.sum() == pytest.approx(1.0, abs=1e-9)

    def test_lowpass_stopband_attenuation(self):
        f = design_fir("lowpass", 64.0, 16.0, 256.0)
        # one transition width beyond the cutoff
        assert to_db(dft_gain(f.taps, 80.0, 256.0)) <= -40.0

    def test_highpass_stopband_and_passband(self):
        f = design_fir("highpass", 0.5, 0.5, 256.0)
        assert to_db(dft_gain(f.taps, 0.01, 256.0)) <= -40.0
        for freq in (1.0, 10.0, 40.0):
            assert abs(dft_gain(f.taps, freq, 256.0) - 1.0) < 0.05

    def test_notch_attenuation(self):
        for notch_hz in (50.0, 60.0):
            f = design_fir("notch", notch_hz, 1.0, 256.0)
            assert to_db(dft_gain(f.taps, notch_hz, 256.0)) <= -30.0
            assert f.taps.sum() == pytest.approx(1.0, abs=1e-9)
            for freq in (1.0, 10.0, 40.0):
                assert abs(dft_gain(f.taps, freq, 256.0) - 1.0) < 0.05

    def test_taps_symmetric_linear_phase(self):
        for f in (
            design_fir("highpass", 0.5, 0.5, 256.0),
            design_fir("lowpass", 64.0, 16.0, 256.0),
            design_fir("notch", 50.0, 1.0, 256.0),
        ):
            assert len(f) % 2 == 1
            assert np.allclose(f.taps, f.taps[::-1], atol=1e-15)

    def test_gain_helper_matches_oracle(self):
        f = design_fir("lowpass", 64.0, 16.0, 256.0)
        for freq in (0.0, 10.0, 64.0, 90.0):
            assert f.gain_at(freq) == pytest.approx(dft_gain(f.taps, freq, 256.0), abs=1e-12)

    @pytest.mark.parametrize(
        "kind,cutoff,transition",
        [
            ("lowpass", 0.0, 1.0),
            ("lowpass", 130.0, 1.0),
            ("lowpass", 120.0, 20.0),
            ("highpass", 0.5, 2.0),
            ("lowpass", 64.0, 0.0),
            ("notch", 127.0, 1.0),
        ],
    )
    def test_invalid_bands(self, kind, cutoff, transition):
        with pytest.raises(InvalidBand):
            design_fir(kind, cutoff, transition, 256.0)


class TestFilterReflect:
    def test_zeros_stay_zeros(self):
        rec = Recording("r", "p", ["a"], 256.0, np.zeros((1, 2048)))
        f = design_fir("lowpass", 64.0, 16.0, 256.0)
        out = filter_reflect(rec, f)
        assert out.n_samples == 2048
        assert np.all(out.samples == 0.0)

    def test_sinusoid_amplitude_preserved_in_passband(self):
        fs = 256.0
        t = np.arange(int(20 * fs)) / fs
        x = np.sin(2 * np.pi * 10.0 * t)
        rec = Recording("r", "p", ["a"], fs, x[None, :])
        f = design_fir("lowpass", 64.0, 16.0, fs)
        out = filter_reflect(rec, f).samples[0]
        interior = slice(len(f), len(x) - len(f))
        expected_gain = dft_gain(f.taps, 10.0, fs)
        amp = np.max(np.abs(out[interior]))
        assert abs(amp - expected_gain) < 0.05
        assert abs(amp - 1.0) < 0.05

    def test_matches_naive_convolution_oracle(self, rng):
        fs = 256.0
        x = rng.standard_normal(1000)
        taps = design_fir("lowpass", 40.0, 30.0, fs).taps
        rec = Recording("r", "p", ["a"], fs, x[None, :])
        out = filter_reflect(rec, FirFilter(taps, "lowpass", 40.0, 30.0, fs)).samples[0]

        # O(N*K) direct convolution with explicit reflected padding
        k = len(taps)
        pad = (k - 1) // 2
        xp = np.empty(len(x) + 2 * pad)
        for i in range(-pad, len(x) + pad):
            j = i
            if j < 0:
                j = -j
            if j >= len(x):
                j = 2 * (len(x) - 1) - j
            xp[i + pad] = x[j]
        expected = np.empty(len(x))
        for i in range(len(x)):
            acc = 0.0
            for j in range(k):
                acc += taps[j] * xp[i + j]
            expected[i] = acc
        assert np.max(np.abs(out - expected)) < 1e-9

    def test_group_delay_compensated(self):
        # a delta stays centered at its own sample
        fs = 256.0
        x = np.zeros(2048)
        x[1000] = 1.0
        f = design_fir("lowpass", 64.0, 16.0, fs)
        out = filter_reflect(Recording("r", "p", ["a"], fs, x[None, :]), f).samples[0]
        assert np.argmax(np.abs(out)) == 1000

    def test_too_short(self):
        f = design_fir("lowpass", 64.0, 16.0, 256.0)
        rec = Recording("r", "p", ["a"], 256.0, np.zeros((1, len(f))))
        with pytest.raises(TooShort):
            filter_reflect(rec, f)


class TestResample:
    def test_factor_two_sample_count(self, rng):
        rec = Recording("r", "p", ["a"], 256.0, rng.standard_normal((1, 512)))
        assert resample_to_128(rec).n_samples == 256

    def test_dc_preserved_interior(self):
        rec = Recording("r", "p", ["a", "b"], 256.0, np.full((2, 2560), 3.25))
        out = resample_to_128(rec)
        interior = out.samples[:, 32:-32]
        assert np.max(np.abs(interior - 3.25)) < 1e-6

    def test_sinusoid_matches_analytic_reference(self):
        fs = 250.0
        t_in = np.arange(int(fs * 20)) / fs
        x = np.sin(2 * np.pi * 5.0 * t_in)
        out = resample_to_128(Recording("r", "p", ["a"], fs, x[None, :]))
        t_out = np.arange(out.n_samples) / 128.0
        ref = np.sin(2 * np.pi * 5.0 * t_out)
        interior = slice(128, out.n_samples - 128)
        rms = np.sqrt(np.mean((out.samples[0][interior] - ref[interior]) ** 2))
        assert rms < 0.02

    def test_duration_within_one_sample_period(self, rng):
        for fs, n in ((256.0, 12345), (250.0, 10007), (500.0, 20011)):
            rec = Recording("r", "p", ["a"], fs, rng.standard_normal((1, n)))
            out = resample_to_128(rec)
            assert out.fs == 128.0
            assert abs(out.duration_s - rec.duration_s) <= 1.0 / 128.0 + 1e-9

    def test_already_128_is_identity(self, rng):
        rec = Recording("r", "p", ["a"], 128.0, rng.standard_normal((1, 512)))
        out = resample_to_128(rec)
        assert out is rec

    def test_upsample_rejected(self, rng):
        rec = Recording("r", "p", ["a"], 64.0, rng.standard_normal((1, 512)))
        with pytest.raises(UpsampleUnsupported):
            resample_to_128(rec)
