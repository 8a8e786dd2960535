"""Recursive scalar Kalman smoothing of channel power gains.

The latent state is the slowly varying power gain of one antenna link,
tracked across the subcarrier index under a random-walk model with process
noise q and measurement noise r. Smoothing the noisy power estimates keeps
the per-subcarrier antenna choice from chasing estimation noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KalmanParams:
    """Filter constants: process noise q >= 0, measurement noise r > 0."""

    q: float = 1e-4
    r: float = 1e-2

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be non-negative")
        if self.r <= 0:
            raise ValueError("r must be positive")


@dataclass
class KalmanState:
    """Posterior estimate x_hat, covariance p, and the last applied gain k."""

    x_hat: float = 0.0
    p: float = 1.0
    k: float = 0.0


def kalman_step(state: KalmanState, z: float, params: KalmanParams) -> KalmanState:
    """One predict/correct update of the random-walk filter.

    Predict: x- = x, p- = p + q. Correct: k = p-/(p- + r),
    x' = x- + k (z - x-), p' = (1 - k) p-. Negative measurements are
    admitted; they are just noisy power readings.
    """
    p_pred = state.p + params.q
    k = p_pred / (p_pred + params.r)
    x_hat = state.x_hat + k * (z - state.x_hat)
    return KalmanState(x_hat=x_hat, p=(1.0 - k) * p_pred, k=k)


def kalman_smooth_track(z_track: np.ndarray, params: KalmanParams) -> np.ndarray:
    """Causal forward pass over one measurement track.

    The state is seeded from the first measurement with covariance r (one
    observation's worth of uncertainty), which avoids a startup transient
    at the low subcarrier indices. Accepts a 1-D track or a stack of
    independent tracks along the last axis of a 2-D array.
    """
    z = np.asarray(z_track, dtype=float)
    if z.size == 0:
        raise ValueError("z_track must be non-empty")
    squeeze = z.ndim == 1
    z2 = z[None, :] if squeeze else z

    out = np.empty_like(z2)
    x = z2[:, 0].copy()
    p = np.full(x.shape, params.r)
    out[:, 0] = x
    for k_idx in range(1, z2.shape[1]):
        p_pred = p + params.q
        gain = p_pred / (p_pred + params.r)
        x = x + gain * (z2[:, k_idx] - x)
        p = (1.0 - gain) * p_pred
        out[:, k_idx] = x
    return out[0] if squeeze else out


def steady_state_gain(params: KalmanParams) -> float:
    """Limiting Kalman gain of the random-walk filter.

    The posterior covariance converges to the positive root of
    p = (p + q) r / (p + q + r); the gain follows as (p + q)/(p + q + r).
    """
    q, r = params.q, params.r
    p_inf = 0.5 * (-q + np.sqrt(q * q + 4.0 * q * r))
    return (p_inf + q) / (p_inf + q + r)
