"""Per-subcarrier antenna selection policies and the multiplexing detector.

The central policy scores every (antenna, subcarrier) pair with a three-term
cost — reciprocal desired-link gain, squared deviation of the tag's incident
power from its band average (field flattening), and victim-link power
(spatial nulling) — and picks the per-subcarrier minimizer. Baselines cover
per-subcarrier max-gain search, wideband norm selection, and uniform random
selection. Antenna indices in all selection maps are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .tracking import KalmanParams, kalman_smooth_track


@dataclass(frozen=True)
class MofsWeights:
    """Cost weights: tag flattening lambda_t, victim nulling lambda_v,
    regularizer epsilon, and the transmit-power scale on the link term."""

    lambda_t: float = 0.0
    lambda_v: float = 0.0
    epsilon: float = 1e-6
    p_tx: float = 1.0

    def __post_init__(self):
        if self.lambda_t < 0 or self.lambda_v < 0:
            raise ValueError("weights must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def _power_matrix(h: np.ndarray) -> np.ndarray:
    """(n_t, n_c) combined power from a (n_t, n_c) or (n_t, n_r, n_c) array."""
    h = np.asarray(h)
    p = np.abs(h) ** 2
    return p.sum(axis=1) if h.ndim == 3 else p


def target_gain(h_t_est: np.ndarray) -> float:
    """Band-average incident tag power, the flattening reference level."""
    h = np.asarray(h_t_est)
    if h.size == 0:
        raise ValueError("empty channel matrix")
    return float(np.mean(np.abs(h) ** 2))


def mofs_cost(g_l_smooth, p_t, p_v, weights: MofsWeights, h_bar_t: float):
    """Selection cost p_tx/(g + eps) + lambda_t (p_t - mean)^2 + lambda_v p_v.

    All arguments are linear powers; broadcasting applies, so full
    (antenna, subcarrier) grids evaluate in one call.
    """
    g_l_smooth = np.asarray(g_l_smooth, dtype=float)
    link = weights.p_tx / (g_l_smooth + weights.epsilon)
    flatten = weights.lambda_t * (np.asarray(p_t, dtype=float) - h_bar_t) ** 2
    nulling = weights.lambda_v * np.asarray(p_v, dtype=float)
    return link + flatten + nulling


def bctas_select(
    chans: ChannelSet,
    weights: MofsWeights,
    kalman: KalmanParams | None = None,
    kalman_mode: str = "legit",
) -> np.ndarray:
    """Greedy per-subcarrier cost minimization over the estimated links.

    One cost evaluation per (antenna, subcarrier); ties resolve to the lowest
    antenna index. When Kalman parameters are supplied the desired-link power
    tracks are smoothed across the subcarrier index before entering the cost
    ("legit" mode); "all" mode additionally smooths the tag and victim power
    tracks.
    """
    if kalman is not None and kalman_mode not in ("legit", "all"):
        raise ValueError("kalman_mode must be 'legit' or 'all'")

    g = chans.legit_power(estimated=True)
    p_t = np.abs(chans.h_t_est) ** 2
    p_v = np.abs(chans.h_v_est) ** 2

    if kalman is not None:
        g = kalman_smooth_track(g, kalman)
        if kalman_mode == "all":
            p_t = kalman_smooth_track(p_t, kalman)
            p_v = kalman_smooth_track(p_v, kalman)

    h_bar = float(np.mean(p_t))
    cost = mofs_cost(g, p_t, p_v, weights, h_bar)
    return np.argmin(cost, axis=0).astype(np.int64) + 1


def maxgain_select(h_l_est: np.ndarray) -> np.ndarray:
    """Per-subcarrier maximum desired-link power, ties to the lowest index."""
    power = _power_matrix(h_l_est)
    return np.argmax(power, axis=0).astype(np.int64) + 1


def nbas_select(h_l_est: np.ndarray) -> np.ndarray:
    """Single antenna with the largest wideband norm, used on all subcarriers."""
    power = _power_matrix(h_l_est)
    best = int(np.argmax(power.sum(axis=1)))
    return np.full(power.shape[1], best + 1, dtype=np.int64)


def random_select(n_c: int, n_t: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform i.i.d. antenna choice per subcarrier."""
    return rng.integers(1, n_t + 1, size=n_c, dtype=np.int64)


def mmse_detect(y: np.ndarray, h: np.ndarray, noise_var: float) -> np.ndarray:
    """Linear MMSE estimate (H^H H + noise_var I)^-1 H^H y per subcarrier.

    y has shape (..., n_r), h has shape (..., n_r, n_t); the leading axes
    batch over subcarriers/symbols. noise_var must be positive, which keeps
    the regularized Gram matrix invertible.
    """
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    hh = np.conj(np.swapaxes(h, -1, -2))
    gram = hh @ h
    n_t = gram.shape[-1]
    gram = gram + noise_var * np.eye(n_t)
    rhs = (hh @ y[..., None])[..., 0]
    return np.linalg.solve(gram, rhs[..., None])[..., 0]
