"""Gray-mapped square QAM, multi-antenna OFDM synthesis, and peak statistics.

The subcarrier-to-antenna map routes each data subcarrier to exactly one
transmit antenna, so the per-antenna spectra have disjoint support and their
superposition reconstructs the full grid. Peak statistics are measured on
mid-spectrum zero-padded (oversampled) waveforms; Nyquist-rate sampling
understates the true envelope peaks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import idft_unitary

_SUPPORTED_QAM = (16, 64)


def _gray_tables(m_order: int):
    """(bits->level, level_index->bits) tables for one Gray-coded PAM axis."""
    bits_per_axis = int(np.log2(m_order)) // 2
    n_levels = 1 << bits_per_axis
    levels = 2 * np.arange(n_levels) - (n_levels - 1)
    gray = np.arange(n_levels) ^ (np.arange(n_levels) >> 1)
    bits_to_level = np.empty(n_levels, dtype=float)
    bits_to_level[gray] = levels
    return bits_to_level, gray


def qam_norm(m_order: int) -> float:
    """Amplitude normalization giving unit average symbol energy."""
    return np.sqrt(2.0 * (m_order - 1) / 3.0)


def qam_map(bits: np.ndarray, m_order: int) -> np.ndarray:
    """Map a bit vector onto Gray-labeled square QAM with unit mean energy.

    The first half of each symbol's bits selects the in-phase level, the
    second half the quadrature level; per axis, Gray labels run 00->-3,
    01->-1, 11->+1, 10->+3 (and the analogous 3-bit sequence for 64-QAM).
    """
    if m_order not in _SUPPORTED_QAM:
        raise ValueError(f"unsupported modulation order {m_order}")
    bits = np.asarray(bits).astype(np.int64).reshape(-1)
    b = int(np.log2(m_order))
    if bits.size % b:
        raise ValueError(f"bit count must be divisible by {b}")
    bits_to_level, _ = _gray_tables(m_order)
    half = b // 2
    grouped = bits.reshape(-1, b)
    weights = 1 << np.arange(half - 1, -1, -1)
    i_idx = grouped[:, :half] @ weights
    q_idx = grouped[:, half:] @ weights
    return (bits_to_level[i_idx] + 1j * bits_to_level[q_idx]) / qam_norm(m_order)


def qam_demap(rx: np.ndarray, m_order: int) -> np.ndarray:
    """Hard-decision demapping to the same Gray constellation.

    Per-axis nearest-level quantization, which for square QAM coincides with
    the minimum-Euclidean-distance decision.
    """
    if m_order not in _SUPPORTED_QAM:
        raise ValueError(f"unsupported modulation order {m_order}")
    rx = np.asarray(rx).reshape(-1) * qam_norm(m_order)
    b = int(np.log2(m_order))
    half = b // 2
    n_levels = 1 << half
    _, gray = _gray_tables(m_order)

    def axis_bits(vals):
        idx = np.clip(np.rint((vals + (n_levels - 1)) / 2.0), 0, n_levels - 1)
        labels = gray[idx.astype(np.int64)]
        shifts = np.arange(half - 1, -1, -1)
        return (labels[:, None] >> shifts) & 1

    out = np.empty((rx.size, b), dtype=np.int64)
    out[:, :half] = axis_bits(rx.real)
    out[:, half:] = axis_bits(rx.imag)
    return out.reshape(-1)


@dataclass
class OfdmGrid:
    """Frequency-domain symbols (n_c, n_syms) plus framing parameters."""

    symbols: np.ndarray
    m_order: int = 16
    n_cp: int = 32
    oversample: int = 1

    def __post_init__(self):
        self.symbols = np.atleast_2d(np.asarray(self.symbols, dtype=complex))
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")
        if not 0 <= self.n_cp < self.n_c:
            raise ValueError("n_cp must lie in [0, n_c)")

    @property
    def n_c(self) -> int:
        return self.symbols.shape[0]

    @property
    def n_syms(self) -> int:
        return self.symbols.shape[1]


@dataclass
class PerAntennaWaveform:
    """Time-domain samples per antenna, shaped (n_t, n_syms, symbol_len).

    Antenna j carries exactly the subcarriers mapped to it; symbol_len is
    (n_c + n_cp) * oversample with the cyclic prefix occupying the first
    n_cp * oversample samples of each symbol.
    """

    samples: np.ndarray
    n_c: int
    n_cp: int
    oversample: int
    sample_rate_hz: float = 1.0

    @property
    def n_t(self) -> int:
        return self.samples.shape[0]

    @property
    def cp_samples(self) -> int:
        return self.n_cp * self.oversample

    def useful(self) -> np.ndarray:
        """Samples with the cyclic prefix stripped."""
        return self.samples[:, :, self.cp_samples:]


def oversample_spectrum(spectrum: np.ndarray, factor: int, axis: int = -1) -> np.ndarray:
    """Zero-pad a spectrum mid-band so its IDFT is interpolated by `factor`."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    spectrum = np.asarray(spectrum)
    if factor == 1:
        return spectrum
    spectrum = np.moveaxis(spectrum, axis, -1)
    n = spectrum.shape[-1]
    lo = (n + 1) // 2
    padded = np.zeros(spectrum.shape[:-1] + (n * factor,), dtype=complex)
    padded[..., :lo] = spectrum[..., :lo]
    padded[..., n * factor - (n - lo):] = spectrum[..., lo:]
    return np.moveaxis(padded, -1, axis)


def ofdm_modulate(
    grid: OfdmGrid,
    sel_map: np.ndarray,
    n_t: int | None = None,
    sample_rate_hz: float = 1.0,
) -> PerAntennaWaveform:
    """Synthesize the per-antenna OFDM waveforms for one selection map.

    Antenna j's spectrum holds the grid symbols on subcarriers with
    sel_map == j (antenna indices are 1-based) and zeros elsewhere. Each
    spectrum is mid-band zero-padded by the grid's oversampling factor,
    transformed with the unitary IDFT, and prefixed cyclically.
    """
    sel_map = np.asarray(sel_map, dtype=np.int64).reshape(-1)
    if sel_map.size != grid.n_c:
        raise ValueError("selection map length must equal n_c")
    if n_t is None:
        n_t = int(sel_map.max()) if sel_map.size else 1
    if sel_map.min() < 1 or sel_map.max() > n_t:
        raise ValueError(f"antenna indices must lie in [1, {n_t}]")

    antennas = np.arange(1, n_t + 1)
    masks = sel_map[None, :] == antennas[:, None]
    spectra = masks[:, :, None] * grid.symbols[None, :, :]

    padded = oversample_spectrum(spectra, grid.oversample, axis=1)
    time = idft_unitary(padded, axis=1)
    time = np.moveaxis(time, 1, 2)

    cp = grid.n_cp * grid.oversample
    if cp:
        time = np.concatenate([time[:, :, -cp:], time], axis=2)
    return PerAntennaWaveform(
        samples=time,
        n_c=grid.n_c,
        n_cp=grid.n_cp,
        oversample=grid.oversample,
        sample_rate_hz=sample_rate_hz,
    )


def per_antenna_spectra(wave: PerAntennaWaveform) -> np.ndarray:
    """Recover each antenna's data-bin spectrum, shaped (n_t, n_c, n_syms)."""
    useful = wave.useful()
    n_fft = useful.shape[2]
    spec = np.fft.fft(useful, axis=2) / np.sqrt(n_fft)
    n = wave.n_c
    lo = (n + 1) // 2
    out = np.concatenate([spec[:, :, :lo], spec[:, :, n_fft - (n - lo):]], axis=2)
    return np.moveaxis(out, 1, 2)


def ofdm_demodulate(wave: PerAntennaWaveform) -> np.ndarray:
    """Superpose the antenna spectra back into the (n_c, n_syms) grid."""
    return per_antenna_spectra(wave).sum(axis=0)


def papr_db(signal: np.ndarray, axis: int = -1):
    """Peak-to-average power ratio in dB along the given axis.

    Measure on an oversampled waveform (factor >= 4) whenever the result
    stands in for continuous-time peak behavior.
    """
    p = np.abs(np.asarray(signal)) ** 2
    if p.shape == () or p.shape[axis] == 0:
        raise ValueError("signal must be non-empty")
    mean = p.mean(axis=axis)
    if np.any(mean == 0):
        raise ValueError("signal has zero mean power")
    return 10.0 * np.log10(p.max(axis=axis) / mean)


def ccdf(samples_db: np.ndarray, thresholds_db: np.ndarray) -> np.ndarray:
    """P(sample > threshold) for each threshold; non-increasing in the threshold."""
    samples_db = np.asarray(samples_db, dtype=float).reshape(-1)
    if samples_db.size == 0:
        raise ValueError("samples must be non-empty")
    thresholds_db = np.atleast_1d(np.asarray(thresholds_db, dtype=float))
    return (samples_db[None, :] > thresholds_db[:, None]).mean(axis=1)
