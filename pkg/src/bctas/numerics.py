"""Shared numeric primitives: dB conversion, unitary DFTs, seeded RNG streams.

All power quantities are carried in linear units inside the library; dB enters
and leaves only through :func:`db_to_linear` / :func:`linear_to_db`. Both DFT
directions use the unitary 1/sqrt(N) normalization so spectral and temporal
energies match exactly.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def db_to_linear(x_db):
    """Convert dB to a linear power ratio, 10^(x/10)."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a positive linear power ratio to dB, 10*log10(x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("linear_to_db requires strictly positive input")
    return 10.0 * np.log10(x)


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent counter-based random stream keyed by (seed, stream).

    Streams built from the same key reproduce the same sequence regardless
    of process, thread, or call order; distinct keys are statistically
    independent. Every stochastic routine in the library draws from a
    Generator produced here, which is what makes parallel Monte Carlo
    campaigns bit-reproducible.
    """
    key = [int(seed) & _MASK64, int(stream) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_complex(rng: np.random.Generator, variance: float, size=None):
    """Circularly symmetric complex Gaussian samples with E[|x|^2] = variance.

    Parameters
    ----------
    rng : np.random.Generator
    variance : float
        Mean power of each sample, >= 0. Zero variance returns exact zeros.
    size : int or tuple, optional
        None returns a scalar.
    """
    if variance < 0:
        raise ValueError("variance must be non-negative")
    if variance == 0:
        return np.zeros(size, dtype=complex) if size is not None else 0j
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) * scale


def dft_unitary(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Forward DFT with 1/sqrt(N) scaling (energy preserving)."""
    x = np.asarray(x)
    n = x.shape[axis]
    if n < 1:
        raise ValueError("dft_unitary requires a non-empty input")
    return np.fft.fft(x, axis=axis) / np.sqrt(n)


def idft_unitary(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Inverse DFT with 1/sqrt(N) scaling; exact inverse of dft_unitary."""
    x = np.asarray(x)
    n = x.shape[axis]
    if n < 1:
        raise ValueError("idft_unitary requires a non-empty input")
    return np.fft.ifft(x, axis=axis) * np.sqrt(n)
