"""Three-link channel generation: desired receiver, energy-harvesting tag,
and a coexisting victim receiver.

Each link is an independent Rayleigh tapped-delay-line realization with an
exponential power-delay profile, converted to per-subcarrier frequency
responses, scaled by log-distance path loss, and optionally correlated across
the transmit array. Estimated copies of all links model CSI acquisition
error with a power-preserving mixture.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import gaussian_complex

# Indoor model presets: RMS delay spread in seconds per dispersion class.
# These are exponential-profile approximations of the usual indoor classes,
# not tap-exact reproductions of any standard table.
TGN_RMS_DELAY_SPREAD_S = {
    "TGN_A": 0.0,
    "TGN_B": 15e-9,
    "TGN_C": 30e-9,
    "TGN_D": 50e-9,
    "TGN_E": 100e-9,
    "TGN_F": 150e-9,
}

# Residual tail power at which the exponential profile is truncated.
_PDP_TAIL_FRACTION = 1e-3


@dataclass(frozen=True)
class ChannelProfile:
    """Propagation description shared by all three links.

    model is one of:
      * "flat" - single tap, identical gain on every subcarrier
      * "iid"  - independent fading per subcarrier (infinite delay spread)
      * "pdp"  - exponential power-delay profile with the given RMS spread
    plus the "TGN_A".."TGN_F" aliases resolving to "flat"/"pdp" presets.
    """

    model: str = "flat"
    rms_delay_spread_s: float = 0.0
    tx_correlation: float = 0.0
    path_exponent: float = 2.5
    d_ref_m: float = 10.0
    d_l_m: float = 10.0
    d_t_m: float = 2.0
    d_v_m: float = 5.0
    bandwidth_hz: float = 17.5e6

    def __post_init__(self):
        model, rms = _resolve_model(self.model, self.rms_delay_spread_s)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "rms_delay_spread_s", rms)
        if not 0.0 <= self.tx_correlation < 1.0:
            raise ValueError("tx_correlation must lie in [0, 1)")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    def link_power(self, d_m: float) -> float:
        """Mean channel power of a link at distance d_m."""
        return path_loss_gain(d_m, self.path_exponent, self.d_ref_m)


@dataclass
class ChannelSet:
    """One realization of the desired / tag / victim links.

    h_l has shape (n_t, n_r, n_c); h_t and h_v are (n_t, n_c) since the tag
    and the victim are single-antenna nodes. The *_est arrays are the
    estimates available to the selector and equal the true values until
    corrupt_csi replaces them.
    """

    h_l: np.ndarray
    h_t: np.ndarray
    h_v: np.ndarray
    h_l_est: np.ndarray
    h_t_est: np.ndarray
    h_v_est: np.ndarray
    link_power_l: float = 1.0
    link_power_t: float = 1.0
    link_power_v: float = 1.0

    @property
    def n_t(self) -> int:
        return self.h_l.shape[0]

    @property
    def n_r(self) -> int:
        return self.h_l.shape[1]

    @property
    def n_c(self) -> int:
        return self.h_l.shape[2]

    def legit_power(self, estimated: bool = False) -> np.ndarray:
        """Per-(antenna, subcarrier) desired-link power, combined over n_r."""
        h = self.h_l_est if estimated else self.h_l
        return np.sum(np.abs(h) ** 2, axis=1)


def _resolve_model(model: str, rms_s: float):
    tag = model.upper()
    if tag in TGN_RMS_DELAY_SPREAD_S:
        rms = TGN_RMS_DELAY_SPREAD_S[tag]
        return ("flat", 0.0) if rms == 0.0 else ("pdp", rms)
    tag = tag.lower()
    if tag == "flat":
        return "flat", 0.0
    if tag == "iid":
        return "iid", float("inf")
    if tag == "pdp":
        if rms_s < 0:
            raise ValueError("rms_delay_spread_s must be non-negative")
        return ("pdp", rms_s) if rms_s > 0 else ("flat", 0.0)
    raise ValueError(f"unknown channel model '{model}'")


def path_loss_gain(d_m: float, exponent: float, d_ref_m: float) -> float:
    """Log-distance path gain (d_ref/d)^exponent, normalized to 1 at d_ref."""
    if d_m <= 0 or d_ref_m <= 0:
        raise ValueError("distances must be positive")
    return (d_ref_m / d_m) ** exponent


def pdp_mean_powers(rms_delay_spread_s: float, sample_period_s: float) -> np.ndarray:
    """Mean tap powers of a truncated, normalized exponential delay profile.

    Taps are spaced by sample_period_s with mean power proportional to
    exp(-l*Ts/rms); the profile is cut where the residual tail holds less
    than 0.1% of the total power and rescaled to unit total power. Zero
    delay spread degenerates to a single unit-power tap.
    """
    if sample_period_s <= 0:
        raise ValueError("sample_period_s must be positive")
    if rms_delay_spread_s < 0:
        raise ValueError("rms_delay_spread_s must be non-negative")
    if rms_delay_spread_s == 0:
        return np.ones(1)
    decay = sample_period_s / rms_delay_spread_s
    n_taps = int(np.ceil(-np.log(_PDP_TAIL_FRACTION) / decay))
    powers = np.exp(-decay * np.arange(max(n_taps, 1)))
    return powers / powers.sum()


def pdp_taps(
    rms_delay_spread_s: float,
    sample_period_s: float,
    rng: np.random.Generator,
    size=None,
) -> np.ndarray:
    """Draw Rayleigh-faded taps on the exponential profile.

    With size=None the result is a 1-D tap vector; otherwise taps occupy the
    last axis of an array of the given leading shape.
    """
    powers = pdp_mean_powers(rms_delay_spread_s, sample_period_s)
    shape = powers.shape if size is None else tuple(np.atleast_1d(size)) + powers.shape
    taps = gaussian_complex(rng, 1.0, size=shape)
    return taps * np.sqrt(powers)


def freq_response(taps: np.ndarray, n_c: int) -> np.ndarray:
    """Per-subcarrier response of a tap vector: n_c-point DFT over the last axis.

    The plain (unnormalized) DFT keeps the mean per-subcarrier power equal to
    the total tap energy. Tap vectors longer than n_c would break the
    circular-prefix assumption and are rejected.
    """
    taps = np.asarray(taps)
    if taps.shape[-1] == 0:
        raise ValueError("taps must be non-empty")
    if taps.shape[-1] > n_c:
        raise ValueError("more taps than subcarriers")
    return np.fft.fft(taps, n=n_c, axis=-1)


def apply_tx_correlation(h: np.ndarray, rho: float) -> np.ndarray:
    """Impose exponential transmit-side correlation rho^|i-j| across axis 0.

    Mixes the antenna dimension with the Cholesky factor of the correlation
    matrix; the unit diagonal preserves per-antenna mean power. rho = 0 is an
    exact pass-through.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if rho == 0.0:
        return h
    n_t = h.shape[0]
    idx = np.arange(n_t)
    r_tx = rho ** np.abs(idx[:, None] - idx[None, :])
    factor = np.linalg.cholesky(r_tx)
    return np.einsum("ij,j...->i...", factor, h)


def _link_response(profile: ChannelProfile, shape, n_c: int, rng) -> np.ndarray:
    """Frequency response array of i.i.d. links for the given leading shape."""
    if profile.model == "iid":
        return gaussian_complex(rng, 1.0, size=tuple(shape) + (n_c,))
    taps = pdp_taps(
        profile.rms_delay_spread_s, profile.sample_period_s, rng, size=shape
    )
    return freq_response(taps, n_c)


def gen_channel_set(profile: ChannelProfile, dims, rng: np.random.Generator) -> ChannelSet:
    """Draw one joint realization of all three links.

    dims is (n_t, n_r, n_c). Every (antenna, link) pair fades independently;
    transmit correlation is applied across the antenna axis afterwards, and
    each link is scaled by the square root of its path gain. Estimated copies
    start out equal to the truth.
    """
    n_t, n_r, n_c = dims
    if min(n_t, n_r, n_c) < 1:
        raise ValueError("all dimensions must be >= 1")

    p_l = profile.link_power(profile.d_l_m)
    p_t = profile.link_power(profile.d_t_m)
    p_v = profile.link_power(profile.d_v_m)

    h_l = _link_response(profile, (n_t, n_r), n_c, rng) * np.sqrt(p_l)
    h_t = _link_response(profile, (n_t,), n_c, rng) * np.sqrt(p_t)
    h_v = _link_response(profile, (n_t,), n_c, rng) * np.sqrt(p_v)

    rho = profile.tx_correlation
    h_l = apply_tx_correlation(h_l, rho)
    h_t = apply_tx_correlation(h_t, rho)
    h_v = apply_tx_correlation(h_v, rho)

    return ChannelSet(
        h_l=h_l,
        h_t=h_t,
        h_v=h_v,
        h_l_est=h_l.copy(),
        h_t_est=h_t.copy(),
        h_v_est=h_v.copy(),
        link_power_l=p_l,
        link_power_t=p_t,
        link_power_v=p_v,
    )


def corrupt_csi(chans: ChannelSet, sigma_e: float, rng: np.random.Generator) -> ChannelSet:
    """Replace the estimated links with noisy, power-preserving copies.

    Each entry becomes sqrt(1 - sigma_e^2)*h + sigma_e*e with e drawn at the
    link's nominal mean power, so E[|h_est|^2] = E[|h|^2] for any sigma_e.
    sigma_e = 0 returns the set unchanged.
    """
    if not 0.0 <= sigma_e < 1.0:
        raise ValueError("sigma_e must lie in [0, 1)")
    if sigma_e == 0.0:
        return chans

    keep = np.sqrt(1.0 - sigma_e ** 2)

    def mix(h, power):
        e = gaussian_complex(rng, power, size=h.shape)
        return keep * h + sigma_e * e

    return replace(
        chans,
        h_l_est=mix(chans.h_l, chans.link_power_l),
        h_t_est=mix(chans.h_t, chans.link_power_t),
        h_v_est=mix(chans.h_v, chans.link_power_v),
    )
