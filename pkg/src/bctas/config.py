"""Scenario configuration: schema, strict loader, defaults, and hashing.

A scenario is a single JSON document. Unknown keys are rejected and every
constraint violation is reported with the offending dotted key, so a config
either loads completely or fails loudly. The canonical serialized form
round-trips exactly and feeds the campaign manifest hash.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .channel import TGN_RMS_DELAY_SPREAD_S, ChannelProfile
from .frontend import MaskTable, RappParams
from .metrics import PowerModel
from .selection import MofsWeights
from .tracking import KalmanParams

SCHEMES = ("bctas", "maxgain", "nbas", "random", "siso", "mmse_mimo")
CHANNEL_MODELS = ("FLAT", "IID", "PDP") + tuple(TGN_RMS_DELAY_SPREAD_S)
KALMAN_MODES = ("legit", "all")

DEFAULTS: dict = {
    "dims": {"n_t": 4, "n_r": 1, "n_c": 256, "n_cp": 32, "oversample": 1},
    "modulation_order": 16,
    "channel": {
        "model": "TGN_D",
        "rms_delay_spread_ns": 0.0,
        "tx_correlation": 0.0,
        "path_exponent": 2.5,
        "d_ref_m": 10.0,
        "d_l_m": 10.0,
        "d_t_m": 2.0,
        "d_v_m": 5.0,
        "bandwidth_hz": 17.5e6,
    },
    "csi": {
        "sigma_e": 0.0,
        "kalman": {"enabled": False, "q": 1e-4, "r": 1e-2, "mode": "legit"},
    },
    "weights": {"lambda_t": 0.0, "lambda_v": 0.0, "epsilon": 1e-6, "p_tx": 1.0},
    "pa": {
        "enabled": False,
        "smoothness": 2.0,
        "ibo_db": 10.0,
        "mask": [[0.0, 0.0], [9.0, 0.0], [11.0, -20.0], [20.0, -28.0], [30.0, -45.0]],
    },
    "snr_grid_db": [0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0, 28.0],
    "gamma_th_db": 7.0,
    "trials": 1000,
    "seed": 1,
    "schemes": ["bctas", "maxgain", "random"],
    "power_model": {"p_chain_mw": 100.0, "p_sel_mw": 1.0},
    "tag": {"p_th": 10.0, "rho_refl": 0.01, "sigma_n2": 1e-3},
}


class ConfigError(ValueError):
    """Raised when a scenario document violates the schema."""


@dataclass(frozen=True)
class Dims:
    n_t: int = 4
    n_r: int = 1
    n_c: int = 256
    n_cp: int = 32
    oversample: int = 1


@dataclass(frozen=True)
class KalmanConfig:
    enabled: bool = False
    params: KalmanParams = field(default_factory=KalmanParams)
    mode: str = "legit"


@dataclass(frozen=True)
class CsiConfig:
    sigma_e: float = 0.0
    kalman: KalmanConfig = field(default_factory=KalmanConfig)


@dataclass(frozen=True)
class PaConfig:
    enabled: bool = False
    params: RappParams = field(default_factory=RappParams)
    ibo_db: float = 10.0
    mask: MaskTable = field(default_factory=MaskTable)


@dataclass(frozen=True)
class TagConfig:
    p_th: float = 10.0
    rho_refl: float = 0.01
    sigma_n2: float = 1e-3


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; construct through load_config."""

    dims: Dims
    modulation_order: int
    channel_model_tag: str
    channel: ChannelProfile
    csi: CsiConfig
    weights: MofsWeights
    pa: PaConfig
    snr_grid_db: tuple
    gamma_th_db: float
    trials: int
    seed: int
    schemes: tuple
    power_model: PowerModel
    tag: TagConfig

    @property
    def sample_rate_hz(self) -> float:
        """Oversampled waveform rate: occupied bandwidth times oversampling."""
        return self.channel.bandwidth_hz * self.dims.oversample

    def to_dict(self) -> dict:
        """Canonical fully populated document; load_config inverts this."""
        return {
            "dims": {
                "n_t": self.dims.n_t,
                "n_r": self.dims.n_r,
                "n_c": self.dims.n_c,
                "n_cp": self.dims.n_cp,
                "oversample": self.dims.oversample,
            },
            "modulation_order": self.modulation_order,
            "channel": {
                "model": self.channel_model_tag,
                "rms_delay_spread_ns": (
                    0.0
                    if not math.isfinite(self.channel.rms_delay_spread_s)
                    else self.channel.rms_delay_spread_s * 1e9
                ),
                "tx_correlation": self.channel.tx_correlation,
                "path_exponent": self.channel.path_exponent,
                "d_ref_m": self.channel.d_ref_m,
                "d_l_m": self.channel.d_l_m,
                "d_t_m": self.channel.d_t_m,
                "d_v_m": self.channel.d_v_m,
                "bandwidth_hz": self.channel.bandwidth_hz,
            },
            "csi": {
                "sigma_e": self.csi.sigma_e,
                "kalman": {
                    "enabled": self.csi.kalman.enabled,
                    "q": self.csi.kalman.params.q,
                    "r": self.csi.kalman.params.r,
                    "mode": self.csi.kalman.mode,
                },
            },
            "weights": {
                "lambda_t": self.weights.lambda_t,
                "lambda_v": self.weights.lambda_v,
                "epsilon": self.weights.epsilon,
                "p_tx": self.weights.p_tx,
            },
            "pa": {
                "enabled": self.pa.enabled,
                "smoothness": self.pa.params.p,
                "ibo_db": self.pa.ibo_db,
                "mask": [[o, l] for o, l in self.pa.mask.breakpoints],
            },
            "snr_grid_db": list(self.snr_grid_db),
            "gamma_th_db": self.gamma_th_db,
            "trials": self.trials,
            "seed": self.seed,
            "schemes": list(self.schemes),
            "power_model": {
                "p_chain_mw": self.power_model.p_chain_mw,
                "p_sel_mw": self.power_model.p_sel_mw,
            },
            "tag": {
                "p_th": self.tag.p_th,
                "rho_refl": self.tag.rho_refl,
                "sigma_n2": self.tag.sigma_n2,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def config_hash(self) -> str:
        """Digest of the canonical document; changes iff any field changes."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _fail(key: str, why: str):
    raise ConfigError(f"config key '{key}': {why}")


def _require(cond: bool, key: str, why: str):
    if not cond:
        _fail(key, why)


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(key, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        _fail(key, "must be finite")
    return float(value)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(key, f"expected an integer, got {type(value).__name__}")
    return value


def _as_bool(value, key: str) -> bool:
    if not isinstance(value, bool):
        _fail(key, f"expected a boolean, got {type(value).__name__}")
    return value


def _merge(defaults: dict, user: dict, prefix: str = "") -> dict:
    out = {}
    for key, default in defaults.items():
        path = f"{prefix}{key}"
        if key in user:
            value = user[key]
            if isinstance(default, dict):
                if not isinstance(value, dict):
                    _fail(path, "expected an object")
                out[key] = _merge(default, value, prefix=f"{path}.")
            else:
                out[key] = value
        else:
            out[key] = json.loads(json.dumps(default)) if isinstance(default, dict) else default
    for key in user:
        if key not in defaults:
            _fail(f"{prefix}{key}", "unknown key")
    return out


def load_config(source) -> ScenarioConfig:
    """Build a validated scenario from a path, JSON text, or mapping.

    Missing keys take the documented defaults; unknown keys and constraint
    violations raise ConfigError naming the dotted key.
    """
    if isinstance(source, ScenarioConfig):
        return source
    if isinstance(source, (str, Path)):
        text = Path(source).read_text() if Path(str(source)).is_file() else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON: {exc}") from exc
    elif isinstance(source, dict):
        raw = source
    else:
        raise ConfigError(f"unsupported config source type {type(source).__name__}")
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")

    doc = _merge(DEFAULTS, raw)

    d = doc["dims"]
    dims = Dims(
        n_t=_as_int(d["n_t"], "dims.n_t"),
        n_r=_as_int(d["n_r"], "dims.n_r"),
        n_c=_as_int(d["n_c"], "dims.n_c"),
        n_cp=_as_int(d["n_cp"], "dims.n_cp"),
        oversample=_as_int(d["oversample"], "dims.oversample"),
    )
    _require(dims.n_t >= 1, "dims.n_t", "must be >= 1")
    _require(dims.n_r >= 1, "dims.n_r", "must be >= 1")
    _require(dims.n_c >= 1, "dims.n_c", "must be >= 1")
    _require(0 <= dims.n_cp < dims.n_c, "dims.n_cp", "must lie in [0, n_c)")
    _require(dims.oversample >= 1, "dims.oversample", "must be >= 1")

    m_order = _as_int(doc["modulation_order"], "modulation_order")
    _require(m_order in (16, 64), "modulation_order", "must be 16 or 64")

    ch = doc["channel"]
    tag = str(ch["model"]).upper()
    _require(tag in CHANNEL_MODELS, "channel.model", f"must be one of {CHANNEL_MODELS}")
    rms_ns = _as_number(ch["rms_delay_spread_ns"], "channel.rms_delay_spread_ns")
    _require(rms_ns >= 0, "channel.rms_delay_spread_ns", "must be non-negative")
    rho = _as_number(ch["tx_correlation"], "channel.tx_correlation")
    _require(0 <= rho < 1, "channel.tx_correlation", "must lie in [0, 1)")
    exponent = _as_number(ch["path_exponent"], "channel.path_exponent")
    _require(exponent >= 0, "channel.path_exponent", "must be non-negative")
    dists = {}
    for name in ("d_ref_m", "d_l_m", "d_t_m", "d_v_m"):
        dists[name] = _as_number(ch[name], f"channel.{name}")
        _require(dists[name] > 0, f"channel.{name}", "must be positive")
    bw = _as_number(ch["bandwidth_hz"], "channel.bandwidth_hz")
    _require(bw > 0, "channel.bandwidth_hz", "must be positive")
    profile = ChannelProfile(
        model=tag if tag != "PDP" else "pdp",
        rms_delay_spread_s=rms_ns * 1e-9,
        tx_correlation=rho,
        path_exponent=exponent,
        bandwidth_hz=bw,
        **dists,
    )

    csi_doc = doc["csi"]
    sigma_e = _as_number(csi_doc["sigma_e"], "csi.sigma_e")
    _require(0 <= sigma_e < 1, "csi.sigma_e", "must lie in [0, 1)")
    k = csi_doc["kalman"]
    k_enabled = _as_bool(k["enabled"], "csi.kalman.enabled")
    k_q = _as_number(k["q"], "csi.kalman.q")
    _require(k_q >= 0, "csi.kalman.q", "must be non-negative")
    k_r = _as_number(k["r"], "csi.kalman.r")
    _require(k_r > 0, "csi.kalman.r", "must be positive")
    k_mode = str(k["mode"])
    _require(k_mode in KALMAN_MODES, "csi.kalman.mode", f"must be one of {KALMAN_MODES}")
    csi = CsiConfig(
        sigma_e=sigma_e,
        kalman=KalmanConfig(enabled=k_enabled, params=KalmanParams(q=k_q, r=k_r), mode=k_mode),
    )

    w = doc["weights"]
    lam_t = _as_number(w["lambda_t"], "weights.lambda_t")
    _require(lam_t >= 0, "weights.lambda_t", "must be non-negative")
    lam_v = _as_number(w["lambda_v"], "weights.lambda_v")
    _require(lam_v >= 0, "weights.lambda_v", "must be non-negative")
    eps = _as_number(w["epsilon"], "weights.epsilon")
    _require(eps > 0, "weights.epsilon", "must be positive")
    p_tx = _as_number(w["p_tx"], "weights.p_tx")
    _require(p_tx > 0, "weights.p_tx", "must be positive")
    weights = MofsWeights(lambda_t=lam_t, lambda_v=lam_v, epsilon=eps, p_tx=p_tx)

    pa_doc = doc["pa"]
    pa_enabled = _as_bool(pa_doc["enabled"], "pa.enabled")
    smooth = _as_number(pa_doc["smoothness"], "pa.smoothness")
    _require(smooth > 0, "pa.smoothness", "must be positive")
    ibo = _as_number(pa_doc["ibo_db"], "pa.ibo_db")
    mask_raw = pa_doc["mask"]
    if not isinstance(mask_raw, list) or not all(
        isinstance(p, (list, tuple)) and len(p) == 2 for p in mask_raw
    ):
        _fail("pa.mask", "expected a list of [offset_mhz, limit_dbr] pairs")
    try:
        mask = MaskTable(tuple((float(o), float(l)) for o, l in mask_raw))
    except ValueError as exc:
        _fail("pa.mask", str(exc))
    pa = PaConfig(enabled=pa_enabled, params=RappParams(p=smooth), ibo_db=ibo, mask=mask)

    grid = doc["snr_grid_db"]
    if not isinstance(grid, list) or not grid:
        _fail("snr_grid_db", "expected a non-empty list")
    snr_grid = tuple(_as_number(v, "snr_grid_db") for v in grid)

    gamma_th = _as_number(doc["gamma_th_db"], "gamma_th_db")

    trials = _as_int(doc["trials"], "trials")
    _require(trials >= 1, "trials", "must be >= 1")
    seed = _as_int(doc["seed"], "seed")

    schemes_raw = doc["schemes"]
    if not isinstance(schemes_raw, list) or not schemes_raw:
        _fail("schemes", "expected a non-empty list")
    for s in schemes_raw:
        _require(s in SCHEMES, "schemes", f"'{s}' is not one of {SCHEMES}")
    schemes = tuple(schemes_raw)

    pm = doc["power_model"]
    p_chain = _as_number(pm["p_chain_mw"], "power_model.p_chain_mw")
    _require(p_chain > 0, "power_model.p_chain_mw", "must be positive")
    p_sel = _as_number(pm["p_sel_mw"], "power_model.p_sel_mw")
    _require(p_sel >= 0, "power_model.p_sel_mw", "must be non-negative")
    power_model = PowerModel(p_chain_mw=p_chain, p_sel_mw=p_sel)

    tag_doc = doc["tag"]
    p_th = _as_number(tag_doc["p_th"], "tag.p_th")
    _require(p_th >= 0, "tag.p_th", "must be non-negative")
    rho_refl = _as_number(tag_doc["rho_refl"], "tag.rho_refl")
    _require(0 < rho_refl <= 1, "tag.rho_refl", "must lie in (0, 1]")
    sigma_n2 = _as_number(tag_doc["sigma_n2"], "tag.sigma_n2")
    _require(sigma_n2 >= 0, "tag.sigma_n2", "must be non-negative")
    tag_cfg = TagConfig(p_th=p_th, rho_refl=rho_refl, sigma_n2=sigma_n2)

    return ScenarioConfig(
        dims=dims,
        modulation_order=m_order,
        channel_model_tag=tag,
        channel=profile,
        csi=csi,
        weights=weights,
        pa=pa,
        snr_grid_db=snr_grid,
        gamma_th_db=gamma_th,
        trials=trials,
        seed=seed,
        schemes=schemes,
        power_model=power_model,
        tag=tag_cfg,
    )
