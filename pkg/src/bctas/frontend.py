"""Transmit front-end impairments and spectral measurements.

Covers the memoryless solid-state amplifier AM/AM curve with input back-off
control (phase is passed through undistorted), least-squares EVM, Welch
spectral density estimation, and piecewise-linear emission-mask checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal


@dataclass(frozen=True)
class RappParams:
    """Smooth saturating AM/AM model: small-signal gain, saturation level,
    and the knee-sharpness exponent p (p=2 is a typical solid-state PA)."""

    gain: float = 1.0
    a_sat: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.gain <= 0 or self.a_sat <= 0 or self.p <= 0:
            raise ValueError("gain, a_sat and p must all be positive")

    @property
    def sat_input_power(self) -> float:
        """Input power driving the amplifier exactly to saturation, (a_sat/gain)^2."""
        return (self.a_sat / self.gain) ** 2


def rapp_amam(a_in, params: RappParams):
    """Output amplitude G*a / (1 + (G*a/A_sat)^(2p))^(1/(2p)).

    Monotone in the input and bounded by A_sat.
    """
    a_in = np.asarray(a_in, dtype=float)
    if np.any(a_in < 0):
        raise ValueError("input amplitude must be non-negative")
    x = params.gain * a_in
    return x / (1.0 + (x / params.a_sat) ** (2.0 * params.p)) ** (1.0 / (2.0 * params.p))


def apply_pa(signal: np.ndarray, ibo_db: float, params: RappParams) -> np.ndarray:
    """Drive the amplifier at the given input back-off, preserving phase.

    The signal is rescaled so its mean power sits ibo_db below the saturation
    input power, passed through the AM/AM curve sample by sample, and divided
    by the small-signal gain so that a perfectly linear amplifier would return
    the back-off-scaled input unchanged.
    """
    signal = np.asarray(signal, dtype=complex)
    mean_power = np.mean(np.abs(signal) ** 2)
    if mean_power == 0:
        raise ValueError("signal must have nonzero mean power")
    target = params.sat_input_power / 10.0 ** (ibo_db / 10.0)
    scaled = signal * np.sqrt(target / mean_power)
    amp = np.abs(scaled)
    out_amp = rapp_amam(amp, params)
    ratio = np.divide(out_amp, amp, out=np.full(amp.shape, params.gain), where=amp > 0)
    return scaled * ratio / params.gain


def evm_percent(ref: np.ndarray, rx: np.ndarray) -> float:
    """RMS error vector magnitude in percent after the best scalar fit.

    A single complex least-squares coefficient removes residual gain and
    phase, so only the nonlinear distortion (plus noise) is counted.
    """
    ref = np.asarray(ref).reshape(-1)
    rx = np.asarray(rx).reshape(-1)
    if ref.size != rx.size:
        raise ValueError("ref and rx must have equal length")
    denom = np.vdot(ref, ref)
    if denom == 0:
        raise ValueError("reference must have nonzero power")
    alpha = np.vdot(ref, rx) / denom
    fitted = alpha * ref
    err = rx - fitted
    return float(100.0 * np.sqrt(np.sum(np.abs(err) ** 2) / np.sum(np.abs(fitted) ** 2)))


def psd_welch(signal: np.ndarray, segment_len: int, overlap: int, sample_rate_hz: float):
    """Hann-windowed Welch spectral density, normalized to a 0 dBr peak.

    Returns (freq_hz, psd_dbr) sorted by frequency, with the peak bin at
    exactly 0 dBr. overlap counts samples shared by consecutive segments;
    overlap = 0 with segment_len equal to one OFDM symbol gives a
    symbol-gated estimate free of inter-symbol boundary artifacts.
    """
    signal = np.asarray(signal).reshape(-1)
    if segment_len > signal.size:
        raise ValueError("segment_len exceeds signal length")
    if not 0 <= overlap < segment_len:
        raise ValueError("overlap must lie in [0, segment_len)")
    freq, pxx = sp_signal.welch(
        signal,
        fs=sample_rate_hz,
        window="hann",
        nperseg=segment_len,
        noverlap=overlap,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    order = np.argsort(freq)
    freq, pxx = freq[order], pxx[order]
    peak = pxx.max()
    if peak <= 0:
        raise ValueError("signal has no spectral content")
    psd_dbr = 10.0 * np.log10(np.maximum(pxx, peak * 1e-30) / peak)
    return freq, psd_dbr


@dataclass(frozen=True)
class MaskTable:
    """Symmetric piecewise-linear emission limit vs |frequency offset|.

    breakpoints is a sequence of (offset_mhz, limit_dbr) pairs sorted by
    offset, anchored at 0 dBr for zero offset; limits are held constant
    beyond the last breakpoint.
    """

    breakpoints: tuple = (
        (0.0, 0.0),
        (9.0, 0.0),
        (11.0, -20.0),
        (20.0, -28.0),
        (30.0, -45.0),
    )

    def __post_init__(self):
        pts = tuple((float(o), float(l)) for o, l in self.breakpoints)
        if not pts or pts[0][0] != 0.0:
            raise ValueError("mask must start at zero offset")
        if pts[0][1] != 0.0:
            raise ValueError("mask limit at zero offset must be 0 dBr")
        offs = [o for o, _ in pts]
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise ValueError("mask offsets must be strictly increasing")
        object.__setattr__(self, "breakpoints", pts)

    @property
    def max_offset_hz(self) -> float:
        return self.breakpoints[-1][0] * 1e6

    def limit_dbr(self, freq_hz) -> np.ndarray:
        """Interpolated limit at the given (possibly negative) frequencies."""
        offs = np.array([o for o, _ in self.breakpoints])
        lims = np.array([l for _, l in self.breakpoints])
        return np.interp(np.abs(np.asarray(freq_hz, dtype=float)) / 1e6, offs, lims)


def mask_compliance(psd, mask: MaskTable):
    """Check a normalized PSD against an emission mask.

    psd is the (freq_hz, psd_dbr) pair from psd_welch. Returns
    (compliant, worst_margin_db, worst_freq_hz) where the margin is
    min(limit - psd); compliance requires a non-negative margin everywhere.
    The PSD must cover the full mask extent on both sides.
    """
    freq, psd_dbr = np.asarray(psd[0], dtype=float), np.asarray(psd[1], dtype=float)
    if freq.size == 0:
        raise ValueError("empty PSD")
    if freq.min() > -mask.max_offset_hz or freq.max() < mask.max_offset_hz:
        raise ValueError("PSD frequency span does not cover the mask")
    margin = mask.limit_dbr(freq) - psd_dbr
    worst = int(np.argmin(margin))
    worst_margin = float(margin[worst])
    return worst_margin >= 0.0, worst_margin, float(freq[worst])
