"""Windowed-sinc FIR design, reflect-padded filtering, and resampling.

All filters are linear-phase (symmetric taps) Hamming-window designs.
Filtering reflects (len(taps)-1)/2 samples at each boundary and compensates
group delay, so output aligns with the input timebase at equal length.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil

import numpy as np
from scipy.signal import oaconvolve, resample_poly

from .errors import InvalidBand, TooShort, UpsampleUnsupported
from .recording import Recording

# Hamming window: transition width ~ 3.3/N of fs, stopband ~ -53 dB
_HAMMING_TRANSITION = 3.3


@dataclass(frozen=True)
class FirFilter:
    """Linear-phase FIR filter with its design metadata."""

    taps: np.ndarray
    kind: str  # highpass | lowpass | notch
    cutoff_hz: float
    transition_hz: float
    fs: float

    def __post_init__(self):
        object.__setattr__(self, "taps", np.asarray(self.taps, dtype=np.float64))
        if len(self.taps) % 2 != 1:
            raise ValueError("taps must have odd length")

    def __len__(self) -> int:
        return len(self.taps)

    def gain_at(self, freq_hz: float) -> float:
        """Magnitude response at one frequency (direct DFT of the taps)."""
        n = np.arange(len(self.taps))
        return float(abs(np.sum(self.taps * np.exp(-2j * np.pi * freq_hz * n / self.fs))))


def _num_taps(transition_hz: float, fs: float) -> int:
    n = int(ceil(_HAMMING_TRANSITION * fs / transition_hz))
    n = max(n, 9)
    return n if n % 2 == 1 else n + 1


def _windowed_sinc_lowpass(center_hz: float, n_taps: int, fs: float) -> np.ndarray:
    """Hamming-windowed ideal lowpass with -6 dB point at center_hz, unit DC gain."""
    fc = center_hz / fs
    m = np.arange(n_taps) - (n_taps - 1) / 2
    h = 2.0 * fc * np.sinc(2.0 * fc * m)
    h *= np.hamming(n_taps)
    return h / h.sum()


def design_fir(
    kind: str,
    cutoff_hz: float,
    transition_hz: float,
    fs: float,
    stop_width_hz: float = 1.0,
) -> FirFilter:
    """Design a highpass, lowpass, or notch FIR filter.

    The transition band sits just outside the passband: a lowpass reaches its
    stopband at cutoff + transition, a highpass at cutoff - transition. A
    notch removes a band of `stop_width_hz` centered on `cutoff_hz`.

    Raises:
        InvalidBand: cutoffs outside (0, fs/2) or non-positive transition.
    """
    if transition_hz <= 0:
        raise InvalidBand(f"transition {transition_hz} Hz must be positive")
    nyquist = fs / 2.0

    if kind == "lowpass":
        if not 0 < cutoff_hz < nyquist:
            raise InvalidBand(f"lowpass cutoff {cutoff_hz} Hz outside (0, {nyquist})")
        center = cutoff_hz + transition_hz / 2.0
        if center + transition_hz / 2.0 > nyquist:
            raise InvalidBand(f"lowpass transition band exceeds Nyquist ({nyquist} Hz)")
        taps = _windowed_sinc_lowpass(center, _num_taps(transition_hz, fs), fs)

    elif kind == "highpass":
        if not 0 < cutoff_hz < nyquist:
            raise InvalidBand(f"highpass cutoff {cutoff_hz} Hz outside (0, {nyquist})")
        center = cutoff_hz - transition_hz / 2.0
        if center <= 0:
            raise InvalidBand("highpass transition band extends below 0 Hz")
        base = _windowed_sinc_lowpass(center, _num_taps(transition_hz, fs), fs)
        taps = -base
        taps[(len(base) - 1) // 2] += 1.0  # delta - lowpass: exact zero DC gain

    elif kind == "notch":
        lo_edge = cutoff_hz - stop_width_hz / 2.0
        hi_edge = cutoff_hz + stop_width_hz / 2.0
        if lo_edge - transition_hz / 2.0 <= 0 or hi_edge + transition_hz / 2.0 >= nyquist:
            raise InvalidBand(
                f"notch band {lo_edge}-{hi_edge} Hz (+/- transition) outside (0, {nyquist})"
            )
        n = _num_taps(transition_hz, fs)
        lp_lo = _windowed_sinc_lowpass(lo_edge, n, fs)
        lp_hi = _windowed_sinc_lowpass(hi_edge, n, fs)
        taps = lp_lo - lp_hi  # bandstop minus the delta below
        taps[(n - 1) // 2] += 1.0

    else:
        raise ValueError(f"unknown filter kind {kind!r}")

    return FirFilter(taps=taps, kind=kind, cutoff_hz=cutoff_hz, transition_hz=transition_hz, fs=fs)


def filter_reflect(rec: Recording, filt: FirFilter) -> Recording:
    """Apply an FIR filter to every channel with reflective boundary padding.

    Raises:
        TooShort: recording not longer than the filter.
    """
    if rec.n_samples <= len(filt):
        raise TooShort(
            f"recording of {rec.n_samples} samples needs more than {len(filt)} (filter length)"
        )
    pad = (len(filt) - 1) // 2
    padded = np.pad(rec.samples, ((0, 0), (pad, pad)), mode="reflect")
    out = oaconvolve(padded, filt.taps[None, :], mode="valid", axes=1)
    return Recording(rec.id, rec.patient_id, list(rec.channel_labels), rec.fs, out)


def resample_to_128(rec: Recording) -> Recording:
    """Polyphase resample to exactly 128 Hz.

    The input is reflect-padded by a whole number of polyphase periods so the
    resampler's edge transient falls outside the retained span; output
    duration matches input within one output sample period.

    Raises:
        UpsampleUnsupported: fs below 128 Hz.
    """
    if rec.fs < 128.0 - 1e-9:
        raise UpsampleUnsupported(f"fs {rec.fs} Hz is below the 128 Hz target")
    ratio = Fraction(128) / Fraction(rec.fs).limit_denominator(1_000_000)
    up, down = ratio.numerator, ratio.denominator
    if up == down == 1:
        return rec

    n = rec.n_samples
    n_out = -(-n * up // down)  # ceil
    half_in = ceil(10 * max(up, down) / up) + 1  # resample_poly kernel half-extent
    periods = ceil(half_in / down) + 1
    pad_in, trim_out = periods * down, periods * up
    padded = np.pad(rec.samples, ((0, 0), (pad_in, pad_in)), mode="reflect")
    out = resample_poly(padded, up, down, axis=1)[:, trim_out : trim_out + n_out]
    return Recording(rec.id, rec.patient_id, list(rec.channel_labels), 128.0, out)
