"""Run configuration: an INI document with four sections mapping onto
the attention, model and metrics knobs plus the RNG seed.

Unknown sections or keys are rejected rather than ignored, so a typo in
a config file fails loudly. `defaults_text()` emits the canonical
document with every supported key and its default.
"""

import configparser
import os
from dataclasses import dataclass

from .attention import AttentionConfig
from .errors import InputFormatError
from .metrics import RateBand
from .network import ConvBlockSpec, ModelConfig

ENV_CONFIG_PATH = "PHYSFACTOR_CONFIG"

_DEFAULTS = {
    "attention": {
        "variant": "fsam",
        "rank": "8",
        "iterations": "4",
        "epsilon": "1e-06",
        "grbf_sigma": "2.0",
        "grbf_delta_t": "4",
    },
    "model": {
        "resolution": "72",
        "channels": "3",
        "bvp_channels": "8,12,12,8",
        "rsp_channels": "8,12,12,8",
        "temporal_kernel": "3",
        "spatial_kernel": "3",
        "rsp_temporal_strides": "2,2,1,1",
        "attention_index": "2",
        "use_attention": "true",
    },
    "metrics": {
        "window_s": "30.0",
        "pad_factor": "8",
        "max_lag_s": "auto",
        "hr_lo_hz": "0.6",
        "hr_hi_hz": "3.3",
        "rr_lo_hz": "0.1",
        "rr_hi_hz": "0.5",
    },
    "rng": {
        "seed": "0",
    },
}


def defaults_text():
    """The canonical INI document with all defaults."""
    chunks = []
    for section, keys in _DEFAULTS.items():
        chunks.append(f"[{section}]")
        for key, value in keys.items():
            chunks.append(f"{key} = {value}")
        chunks.append("")
    return "\n".join(chunks)


def _parse_scalar(section, key, raw, kind):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is bool:
            if raw.lower() in ("true", "yes", "on", "1"):
                return True
            if raw.lower() in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise InputFormatError(
            f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}"
        ) from None


def _parse_int_list(section, key, raw):
    try:
        return tuple(int(tok.strip()) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise InputFormatError(f"[{section}] {key}: cannot parse {raw!r} as an integer list") from None


@dataclass(frozen=True)
class RunConfig:
    variant: str
    rank: int
    iterations: int
    epsilon: float
    grbf_sigma: float
    grbf_delta_t: int
    resolution: int
    channels: int
    bvp_channels: tuple
    rsp_channels: tuple
    temporal_kernel: int
    spatial_kernel: int
    rsp_temporal_strides: tuple
    attention_index: int
    use_attention: bool
    window_s: float
    pad_factor: int
    max_lag_s: float | None
    hr_band: RateBand
    rr_band: RateBand
    seed: int

    def band(self, kind):
        if kind == "hr":
            return self.hr_band
        if kind == "rr":
            return self.rr_band
        raise InputFormatError(f"unknown band kind {kind!r}")

    def attention_config(self, variant=None):
        return AttentionConfig(
            variant=variant or self.variant,
            rank=self.rank,
            iterations=self.iterations,
            epsilon=self.epsilon,
            grbf_sigma=self.grbf_sigma,
            grbf_delta_t=self.grbf_delta_t,
            seed=self.seed,
        )

    def model_config(self, omit_attention=False):
        att = None
        if self.use_attention and not omit_attention:
            att = self.attention_config()
        upsample = 1
        for s in self.rsp_temporal_strides:
            upsample *= s
        bvp = tuple(
            ConvBlockSpec(c, self.temporal_kernel, self.spatial_kernel, 1, 2)
            for c in self.bvp_channels
        )
        rsp = tuple(
            ConvBlockSpec(c, self.temporal_kernel, self.spatial_kernel, s, 2)
            for c, s in zip(self.rsp_channels, self.rsp_temporal_strides)
        )
        return ModelConfig(
            input_resolution=self.resolution,
            input_channels=self.channels,
            bvp_blocks=bvp,
            rsp_blocks=rsp,
            rsp_upsample_factor=upsample,
            attention_index=self.attention_index,
            bvp_attention=att,
            rsp_attention=att,
            seed=self.seed,
        )


def _build(values, seed_override=None):
    get = lambda s, k: values[s][k]
    max_lag_raw = get("metrics", "max_lag_s")
    max_lag = None if max_lag_raw == "auto" else _parse_scalar("metrics", "max_lag_s", max_lag_raw, float)
    seed = _parse_scalar("rng", "seed", get("rng", "seed"), int)
    if seed_override is not None:
        seed = int(seed_override)
    if len(values["model"]["rsp_channels"].split(",")) != len(
        values["model"]["rsp_temporal_strides"].split(",")
    ):
        raise InputFormatError("[model] rsp_channels and rsp_temporal_strides must have equal length")
    return RunConfig(
        variant=get("attention", "variant"),
        rank=_parse_scalar("attention", "rank", get("attention", "rank"), int),
        iterations=_parse_scalar("attention", "iterations", get("attention", "iterations"), int),
        epsilon=_parse_scalar("attention", "epsilon", get("attention", "epsilon"), float),
        grbf_sigma=_parse_scalar("attention", "grbf_sigma", get("attention", "grbf_sigma"), float),
        grbf_delta_t=_parse_scalar("attention", "grbf_delta_t", get("attention", "grbf_delta_t"), int),
        resolution=_parse_scalar("model", "resolution", get("model", "resolution"), int),
        channels=_parse_scalar("model", "channels", get("model", "channels"), int),
        bvp_channels=_parse_int_list("model", "bvp_channels", get("model", "bvp_channels")),
        rsp_channels=_parse_int_list("model", "rsp_channels", get("model", "rsp_channels")),
        temporal_kernel=_parse_scalar("model", "temporal_kernel", get("model", "temporal_kernel"), int),
        spatial_kernel=_parse_scalar("model", "spatial_kernel", get("model", "spatial_kernel"), int),
        rsp_temporal_strides=_parse_int_list(
            "model", "rsp_temporal_strides", get("model", "rsp_temporal_strides")
        ),
        attention_index=_parse_scalar("model", "attention_index", get("model", "attention_index"), int),
        use_attention=_parse_scalar("model", "use_attention", get("model", "use_attention"), bool),
        window_s=_parse_scalar("metrics", "window_s", get("metrics", "window_s"), float),
        pad_factor=_parse_scalar("metrics", "pad_factor", get("metrics", "pad_factor"), int),
        max_lag_s=max_lag,
        hr_band=RateBand(
            _parse_scalar("metrics", "hr_lo_hz", get("metrics", "hr_lo_hz"), float),
            _parse_scalar("metrics", "hr_hi_hz", get("metrics", "hr_hi_hz"), float),
            "hr",
        ),
        rr_band=RateBand(
            _parse_scalar("metrics", "rr_lo_hz", get("metrics", "rr_lo_hz"), float),
            _parse_scalar("metrics", "rr_hi_hz", get("metrics", "rr_hi_hz"), float),
            "rr",
        ),
        seed=seed,
    )


def load_run_config(path=None, seed_override=None):
    """Load a RunConfig from an INI file, the environment-pointed file,
    or pure defaults when neither is given.

    Unknown sections or keys raise InputFormatError.
    """
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH) or None

    values = {s: dict(keys) for s, keys in _DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise InputFormatError(f"{path}: {exc}") from None
        for section in parser.sections():
            if section not in _DEFAULTS:
                raise InputFormatError(f"{path}: unknown section [{section}]")
            for key, raw in parser[section].items():
                if key not in _DEFAULTS[section]:
                    raise InputFormatError(f"{path}: unknown key {key!r} in [{section}]")
                values[section][key] = raw
    return _build(values, seed_override)
