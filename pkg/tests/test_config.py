import numpy as np
import pytest

from physfactor.config import defaults_text, load_run_config
from physfactor.errors import InputFormatError


def test_defaults_load_without_file():
    cfg = load_run_config()
    assert cfg.variant == "fsam"
    assert cfg.rank == 8
    assert cfg.iterations == 4
    assert cfg.resolution == 72
    assert cfg.channels == 3
    assert cfg.window_s == 30.0
    assert cfg.pad_factor == 8
    assert cfg.max_lag_s is None
    assert cfg.seed == 0
    assert cfg.hr_band.lo_hz == 0.6 and cfg.hr_band.hi_hz == 3.3
    assert cfg.rr_band.lo_hz == 0.1 and cfg.rr_band.hi_hz == 0.5


def test_defaults_text_round_trips(tmp_path):
    path = tmp_path / "defaults.ini"
    path.write_text(defaults_text())
    assert load_run_config(str(path)) == load_run_config()


def test_partial_override(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[attention]\nvariant = tsfm\nrank = 4\n\n[rng]\nseed = 9\n")
    cfg = load_run_config(str(path))
    assert cfg.variant == "tsfm" and cfg.rank == 4 and cfg.seed == 9
    assert cfg.resolution == 72  # untouched default


def test_unknown_keys_rejected(tmp_path):
    bad_key = tmp_path / "bad_key.ini"
    bad_key.write_text("[attention]\nvariannt = tsfm\n")
    with pytest.raises(InputFormatError, match="variannt"):
        load_run_config(str(bad_key))

    bad_section = tmp_path / "bad_section.ini"
    bad_section.write_text("[attenshun]\nvariant = tsfm\n")
    with pytest.raises(InputFormatError, match="attenshun"):
        load_run_config(str(bad_section))


def test_bad_values_rejected(tmp_path):
    path = tmp_path / "bad_value.ini"
    path.write_text("[attention]\nrank = eight\n")
    with pytest.raises(InputFormatError, match="rank"):
        load_run_config(str(path))

    path.write_text("[model]\nrsp_channels = 8,12\n")
    with pytest.raises(InputFormatError, match="rsp_channels"):
        load_run_config(str(path))


def test_env_var_pickup(tmp_path, monkeypatch):
    path = tmp_path / "env.ini"
    path.write_text("[rng]\nseed = 123\n")
    monkeypatch.setenv("PHYSFACTOR_CONFIG", str(path))
    assert load_run_config().seed == 123


def test_seed_override():
    assert load_run_config(seed_override=42).seed == 42


def test_model_and_attention_construction():
    cfg = load_run_config()
    model = cfg.model_config()
    assert model.input_resolution == 72
    assert model.rsp_upsample_factor == 4
    assert model.bvp_attention is not None
    assert model.bvp_attention.variant == "fsam"

    bare = cfg.model_config(omit_attention=True)
    assert bare.bvp_attention is None and bare.rsp_attention is None

    att = cfg.attention_config("grbf")
    assert att.variant == "grbf"
    assert att.grbf_sigma == 2.0 and att.grbf_delta_t == 4


def test_max_lag_numeric(tmp_path):
    path = tmp_path / "lag.ini"
    path.write_text("[metrics]\nmax_lag_s = 2.5\n")
    assert load_run_config(str(path)).max_lag_s == 2.5


def test_use_attention_flag(tmp_path):
    path = tmp_path / "noatt.ini"
    path.write_text("[model]\nuse_attention = false\n")
    model = load_run_config(str(path)).model_config()
    assert model.bvp_attention is None
