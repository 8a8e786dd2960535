"""End-to-end link simulation and the sensing/communication metrics.

The transmit chain is: random bits -> Gray QAM grid -> per-subcarrier antenna
selection -> per-antenna OFDM synthesis (-> saturating amplifier) ->
per-subcarrier channel -> AWGN -> genie equalization with the true channel ->
hard demapping. Selection always operates on the estimated channels while all
metrics are computed from the true ones, so CSI error degrades decisions, not
measurements.

SNR convention: the grid value is the fading-averaged received symbol energy
of a single desired-link branch over the per-subcarrier noise variance, i.e.
noise_var = (branch mean power) / SNR_linear with unit-energy constellations.
This keeps the axis meaning identical for every scheme and matches the
single-branch outage references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .channel import ChannelSet, corrupt_csi, gen_channel_set
from .frontend import RappParams, rapp_amam
from .numerics import gaussian_complex, idft_unitary
from .selection import (
    MofsWeights,
    bctas_select,
    maxgain_select,
    nbas_select,
    random_select,
)
from .waveform import oversample_spectrum, qam_demap, qam_map

if TYPE_CHECKING:  # pragma: no cover
    from .config import ScenarioConfig

METRIC_NAMES = (
    "ber",
    "outage",
    "bcf_db",
    "papr_db_at_ccdf",
    "evm_pct",
    "delta_i_db",
    "sdr_db",
    "eta_h",
    "ee",
    "mask_margin_db",
)

AUX_KEYS = ("lambda_t", "lambda_v", "ibo_db", "n_t", "model_tag", "sigma_e", "rho", "kalman_mode")

_GAMMA_CAP = 1e30


@dataclass(frozen=True)
class PowerModel:
    """Per-RF-chain and selection-compute power draw in milliwatts."""

    p_chain_mw: float = 100.0
    p_sel_mw: float = 1.0

    def __post_init__(self):
        if self.p_chain_mw <= 0 or self.p_sel_mw < 0:
            raise ValueError("power draws must be positive (chain) / non-negative (selection)")


@dataclass
class MetricRecord:
    """One emitted result row: scheme, metric, value, and its provenance."""

    scheme: str
    metric: str
    value: float
    n_trials: int
    seed: int
    snr_db: float | None = None
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric '{self.metric}'")
        if self.n_trials <= 0:
            raise ValueError("n_trials must be positive")
        if not math.isfinite(self.value):
            raise ValueError("value must be finite")
        self.aux = {k: self.aux[k] for k in AUX_KEYS if k in self.aux}


def record_aux(cfg: "ScenarioConfig", scheme: str, **overrides) -> dict:
    """Standard aux columns for a record, overridable per experiment."""
    if scheme == "bctas":
        kalman_mode = cfg.csi.kalman.mode if cfg.csi.kalman.enabled else "off"
    else:
        kalman_mode = ""
    aux = {
        "lambda_t": cfg.weights.lambda_t,
        "lambda_v": cfg.weights.lambda_v,
        "ibo_db": cfg.pa.ibo_db if cfg.pa.enabled else None,
        "n_t": cfg.dims.n_t,
        "model_tag": cfg.channel_model_tag,
        "sigma_e": cfg.csi.sigma_e,
        "rho": cfg.channel.tx_correlation,
        "kalman_mode": kalman_mode,
    }
    aux.update(overrides)
    return aux


def make_channels(cfg: "ScenarioConfig", rng: np.random.Generator) -> ChannelSet:
    """One channel realization with the configured CSI corruption applied."""
    dims = (cfg.dims.n_t, cfg.dims.n_r, cfg.dims.n_c)
    chans = gen_channel_set(cfg.channel, dims, rng)
    if cfg.csi.sigma_e > 0:
        chans = corrupt_csi(chans, cfg.csi.sigma_e, rng)
    return chans


def scheme_selection(
    cfg: "ScenarioConfig", scheme: str, chans: ChannelSet, rng: np.random.Generator
) -> np.ndarray:
    """Selection map for one realization under the named scheme."""
    if scheme == "bctas":
        kalman = cfg.csi.kalman.params if cfg.csi.kalman.enabled else None
        return bctas_select(chans, cfg.weights, kalman=kalman, kalman_mode=cfg.csi.kalman.mode)
    if scheme == "maxgain":
        return maxgain_select(chans.h_l_est)
    if scheme == "nbas":
        return nbas_select(chans.h_l_est)
    if scheme == "random":
        return random_select(chans.n_c, chans.n_t, rng)
    if scheme == "siso":
        return np.ones(chans.n_c, dtype=np.int64)
    raise ValueError(f"scheme '{scheme}' has no selection map")


def link_along_map(h: np.ndarray, sel_map: np.ndarray) -> np.ndarray:
    """Gather the selected antenna's coefficients along the subcarrier axis.

    h is (n_t, n_c) or (n_t, n_r, n_c); the antenna axis is consumed.
    """
    h = np.asarray(h)
    j = np.asarray(sel_map, dtype=np.int64) - 1
    k = np.arange(h.shape[-1])
    if h.ndim == 2:
        return h[j, k]
    return np.moveaxis(h[j, :, k], 0, -1)


def noise_variance(cfg: "ScenarioConfig", snr_db: float) -> float:
    """Per-subcarrier AWGN variance realizing the branch-average SNR."""
    snr_lin = 10.0 ** (float(snr_db) / 10.0)
    return cfg.channel.link_power(cfg.channel.d_l_m) / snr_lin


def _random_grid(cfg: "ScenarioConfig", n_streams: int, n_syms: int, rng):
    """(bits, grid) with grid shaped (n_streams, n_c, n_syms), unit energy."""
    b = int(np.log2(cfg.modulation_order))
    n_c = cfg.dims.n_c
    bits = rng.integers(0, 2, size=n_streams * n_syms * n_c * b, dtype=np.int64)
    syms = qam_map(bits, cfg.modulation_order)
    grid = syms.reshape(n_streams, n_syms, n_c).transpose(0, 2, 1)
    return bits, grid


def _demap_grid(grid_est: np.ndarray, m_order: int) -> np.ndarray:
    """Invert _random_grid's layout back to a flat decided-bit vector."""
    flat = np.asarray(grid_est).transpose(0, 2, 1).reshape(-1)
    return qam_demap(flat, m_order)


def _nonlinear_spectra(
    spectra: np.ndarray, ibo_db: float, params: RappParams, oversample: int
) -> np.ndarray:
    """Push per-antenna spectra through the amplifier, back-off applied jointly.

    One common scale sets the across-antenna average input power ibo_db below
    saturation, preserving the power split the selection produced; each sample
    then passes the AM/AM curve with phase kept. The returned spectra are
    rescaled by one common factor so total symbol energy matches the input,
    which keeps the SNR calibration of the surrounding chain.
    """
    spectra = np.asarray(spectra, dtype=complex)
    padded = oversample_spectrum(spectra, oversample, axis=1)
    time = idft_unitary(padded, axis=1)

    mean_power = np.mean(np.abs(time) ** 2)
    if mean_power == 0:
        return spectra.copy()
    target = params.sat_input_power / 10.0 ** (ibo_db / 10.0)
    scaled = time * np.sqrt(target / mean_power)
    amp = np.abs(scaled)
    gain = np.divide(
        rapp_amam(amp, params), amp, out=np.full(amp.shape, params.gain), where=amp > 0
    )
    distorted = scaled * gain / params.gain

    spec = np.fft.fft(distorted, axis=1) / np.sqrt(distorted.shape[1])
    n_c = spectra.shape[1]
    lo = (n_c + 1) // 2
    out = np.concatenate([spec[:, :lo], spec[:, spec.shape[1] - (n_c - lo):]], axis=1)

    in_energy = np.sum(np.abs(spectra) ** 2)
    out_energy = np.sum(np.abs(out) ** 2)
    if out_energy > 0:
        out = out * np.sqrt(in_energy / out_energy)
    return out


def _tas_tx_spectra(cfg, grid: np.ndarray, sel_map: np.ndarray) -> np.ndarray:
    """Per-antenna transmit spectra (n_t, n_c, n_syms) for a selection map."""
    antennas = np.arange(1, cfg.dims.n_t + 1)
    masks = sel_map[None, :] == antennas[:, None]
    spectra = masks[:, :, None] * grid[None, :, :]
    if cfg.pa.enabled:
        spectra = _nonlinear_spectra(
            spectra, cfg.pa.ibo_db, cfg.pa.params, max(cfg.dims.oversample, 1)
        )
    return spectra


def _receive(chans: ChannelSet, spectra: np.ndarray) -> np.ndarray:
    """Noiseless received grid (n_r, n_c, n_syms) from per-antenna spectra."""
    return np.einsum("jrk,jks->rks", chans.h_l, spectra)


def ber_trial(
    cfg: "ScenarioConfig",
    scheme: str,
    snr_grid_db,
    rng: np.random.Generator,
    n_syms: int = 1,
):
    """Bit errors for one channel realization across the whole SNR grid.

    Returns (errors, total_bits) with errors shaped like the grid. The same
    realization, symbols, and unit-variance noise draw serve every SNR point.
    """
    snr_grid_db = np.atleast_1d(np.asarray(snr_grid_db, dtype=float))
    chans = make_channels(cfg, rng)
    m_order = cfg.modulation_order

    if scheme == "mmse_mimo":
        bits, grid = _random_grid(cfg, cfg.dims.n_t, n_syms, rng)
        spectra = grid / np.sqrt(cfg.dims.n_t)
        if cfg.pa.enabled:
            spectra = _nonlinear_spectra(
                spectra, cfg.pa.ibo_db, cfg.pa.params, max(cfg.dims.oversample, 1)
            )
        rx = _receive(chans, spectra)
        noise_unit = gaussian_complex(rng, 1.0, size=rx.shape)
        g = np.moveaxis(chans.h_l, 2, 0) / np.sqrt(cfg.dims.n_t)  # (n_c, n_r, n_t)
        gh = np.conj(np.swapaxes(g, -1, -2))
        gram = gh @ g
        eye = np.eye(cfg.dims.n_t)

        errors = np.zeros(snr_grid_db.shape, dtype=np.int64)
        for i, snr_db in enumerate(snr_grid_db):
            nv = noise_variance(cfg, snr_db)
            y = rx + np.sqrt(nv) * noise_unit  # (n_r, n_c, n_syms)
            yk = np.moveaxis(y, 1, 0)  # (n_c, n_r, n_syms)
            reg = np.linalg.solve(gram + nv * eye, np.concatenate([gh @ yk, gh @ g], axis=2))
            est, bias_full = reg[:, :, :n_syms], reg[:, :, n_syms:]
            bias = np.maximum(np.real(np.einsum("kjj->kj", bias_full)), 1e-12)
            x_hat = np.moveaxis(est / bias[:, :, None], 0, 1)  # (n_t, n_c, n_syms)
            decided = _demap_grid(x_hat, m_order)
            errors[i] = int(np.count_nonzero(decided != bits))
        return errors, bits.size

    sel = scheme_selection(cfg, scheme, chans, rng)
    bits, grid = _random_grid(cfg, 1, n_syms, rng)
    grid = grid[0]
    spectra = _tas_tx_spectra(cfg, grid, sel)
    rx = _receive(chans, spectra)
    noise_unit = gaussian_complex(rng, 1.0, size=rx.shape)

    h_sel = link_along_map(chans.h_l, sel)  # (n_r, n_c)
    den = np.sum(np.abs(h_sel) ** 2, axis=0) + 1e-300

    errors = np.zeros(snr_grid_db.shape, dtype=np.int64)
    for i, snr_db in enumerate(snr_grid_db):
        nv = noise_variance(cfg, snr_db)
        y = rx + np.sqrt(nv) * noise_unit
        x_hat = np.einsum("rk,rks->ks", np.conj(h_sel), y) / den[:, None]
        decided = _demap_grid(x_hat[None, :, :], m_order)
        errors[i] = int(np.count_nonzero(decided != bits))
    return errors, bits.size


def simulate_ber(
    cfg: "ScenarioConfig",
    scheme: str,
    snr_grid_db=None,
    rng: np.random.Generator | None = None,
    n_syms: int = 1,
) -> list[MetricRecord]:
    """Monte Carlo BER curve for one scheme; one record per SNR point."""
    from .numerics import rng_stream

    snr_grid_db = tuple(cfg.snr_grid_db if snr_grid_db is None else snr_grid_db)
    rng = rng_stream(cfg.seed) if rng is None else rng
    errors = np.zeros(len(snr_grid_db), dtype=np.int64)
    total_bits = 0
    for trial_rng in rng.spawn(cfg.trials):
        err, nbits = ber_trial(cfg, scheme, snr_grid_db, trial_rng, n_syms=n_syms)
        errors += err
        total_bits += nbits
    return [
        MetricRecord(
            scheme=scheme,
            metric="ber",
            snr_db=snr,
            value=errors[i] / total_bits,
            n_trials=cfg.trials,
            seed=cfg.seed,
            aux=record_aux(cfg, scheme),
        )
        for i, snr in enumerate(snr_grid_db)
    ]


def sinr_trial(
    cfg: "ScenarioConfig", scheme: str, snr_db: float, rng: np.random.Generator
) -> np.ndarray:
    """Post-selection per-subcarrier SNR samples for one realization."""
    chans = make_channels(cfg, rng)
    sel = scheme_selection(cfg, scheme, chans, rng)
    h_sel = link_along_map(chans.h_l, sel)
    power = np.sum(np.abs(h_sel) ** 2, axis=0)
    nv = noise_variance(cfg, snr_db)
    with np.errstate(divide="ignore", over="ignore"):
        gamma = cfg.weights.p_tx * power / max(nv, 0.0) if nv > 0 else np.full(
            power.shape, np.inf
        )
    return np.minimum(gamma, _GAMMA_CAP)


def sinr_samples(
    cfg: "ScenarioConfig",
    scheme: str,
    snr_db: float,
    n_trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Pooled per-(trial, subcarrier) post-selection SNR samples, linear."""
    chunks = [sinr_trial(cfg, scheme, snr_db, r) for r in rng.spawn(n_trials)]
    return np.concatenate(chunks)


def outage_probability(samples: np.ndarray, gamma_th_db: float) -> float:
    """Fraction of linear SNR samples below the dB threshold."""
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    return float(np.mean(samples < 10.0 ** (gamma_th_db / 10.0)))


def tag_time_signal(
    sel_map: np.ndarray, h_t_true: np.ndarray, x, oversample: int = 4
) -> np.ndarray:
    """Noiseless incident waveform at the tag for a selection map.

    Synthesizes (1/sqrt(n_c)) * sum_k h_t[J_k, k] X_k exp(j 2 pi k t) on an
    oversampled time grid, so the per-sample amplitude matches the underlying
    continuous waveform regardless of the oversampling factor. x may be a
    single (n_c,) symbol or an (n_c, n_syms) batch; symbols index the leading
    axis of the result.
    """
    x = np.asarray(x, dtype=complex)
    squeeze = x.ndim == 1
    grid = x[:, None] if squeeze else x
    incident = link_along_map(h_t_true, sel_map)[:, None] * grid  # (n_c, n_syms)
    n_c = incident.shape[0]
    padded = oversample_spectrum(incident.T, oversample, axis=-1)
    time = np.fft.ifft(padded, axis=-1) * oversample * np.sqrt(n_c)
    return time[0] if squeeze else time


def bcf(
    sel_map: np.ndarray, h_t_true: np.ndarray, x_batch, oversample: int = 4
) -> np.ndarray:
    """Per-symbol crest factor of the incident tag waveform, linear ratio.

    Peak instantaneous power over mean power of each symbol's incident
    signal; use oversample >= 4 so continuous-time peaks are represented.
    """
    time = np.atleast_2d(tag_time_signal(sel_map, h_t_true, x_batch, oversample))
    power = np.abs(time) ** 2
    mean = power.mean(axis=1)
    if np.any(mean == 0):
        raise ValueError("zero-energy symbol in batch")
    return power.max(axis=1) / mean


def sdr_db(p_saw: float, sigma_n2: float, p_b: float) -> float:
    """Sensing dynamic range: reflection power over noise-plus-fluctuation floor."""
    if p_saw < 0 or sigma_n2 < 0 or p_b < 0:
        raise ValueError("powers must be non-negative")
    denom = sigma_n2 + p_b
    if denom <= 0:
        raise ValueError("noise-plus-fluctuation floor must be positive")
    return float(10.0 * np.log10(p_saw / denom))


def harvesting_efficiency(incident_powers: np.ndarray, p_th: float) -> float:
    """Fraction of per-subcarrier incident powers meeting the activation threshold."""
    p = np.asarray(incident_powers, dtype=float).reshape(-1)
    if p.size == 0:
        raise ValueError("incident_powers must be non-empty")
    return float(np.mean(p >= p_th))


def interference_suppression(
    sel_test: np.ndarray, sel_ref: np.ndarray, h_v_true: np.ndarray
) -> float:
    """Victim-power reduction of one map against a reference map, in dB.

    10 log10(mean_k |h_v[ref_k, k]|^2 / mean_k |h_v[test_k, k]|^2); the usual
    reference is max-gain selection, which ignores the victim entirely.
    """
    p_ref = np.mean(np.abs(link_along_map(h_v_true, sel_ref)) ** 2)
    p_test = np.mean(np.abs(link_along_map(h_v_true, sel_test)) ** 2)
    if p_ref <= 0 or p_test <= 0:
        raise ValueError("victim powers must be positive")
    return float(10.0 * np.log10(p_ref / p_test))


def energy_efficiency(spectral_eff: float, n_chains: int, pm: PowerModel) -> float:
    """Spectral efficiency per milliwatt of chain plus selection power."""
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    return spectral_eff / (n_chains * pm.p_chain_mw + pm.p_sel_mw)
