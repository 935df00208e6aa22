import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flmob.core import (PURPOSES, ConfigError, SimConfig, config_from_mapping, dbm_to_linear_mw,
                        derive_stream, format_config, linear_mw_to_dbm, load_config, parse_config_text)


def test_stream_is_reproducible():
    a = derive_stream(1, "fading", 3).bytes(64)
    b = derive_stream(1, "fading", 3).bytes(64)
    assert a == b


def test_stream_purpose_and_seed_separation():
    base = derive_stream(1, "fading", 3).bytes(64)
    assert derive_stream(1, "mobility", 3).bytes(64) != base
    assert derive_stream(2, "fading", 3).bytes(64) != base
    assert derive_stream(1, "fading", 4).bytes(64) != base
    assert derive_stream(1, "fading", 3, 7).bytes(64) != base


def test_all_purposes_distinct():
    draws = {p: derive_stream(9, p, 0).bytes(16) for p in PURPOSES}
    assert len(set(draws.values())) == len(PURPOSES)


def test_unknown_purpose_rejected():
    with pytest.raises(ValueError):
        derive_stream(1, "weather", 0)


def test_large_seed_accepted():
    assert derive_stream(2**64 - 1, "datagen", 0).bytes(8) != derive_stream(2**63, "datagen", 0).bytes(8)


@pytest.mark.parametrize("dbm, mw", [(0.0, 1.0), (14.0, 25.118864315095795), (-114.0, 3.9810717055349695e-12)])
def test_dbm_to_linear(dbm, mw):
    assert dbm_to_linear_mw(dbm) == pytest.approx(mw, rel=1e-4)


@given(st.floats(min_value=-200, max_value=100, allow_nan=False))
def test_dbm_roundtrip(x):
    assert linear_mw_to_dbm(dbm_to_linear_mw(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


def test_defaults():
    cfg = SimConfig()
    assert (cfg.num_users, cfg.num_bs, cfg.area_side_m) == (50, 8, 1000.0)
    assert cfg.tx_psd_dbm_per_mhz == 14.0 and cfg.noise_psd_dbm_per_mhz == -114.0
    assert cfg.comp_latency_range_s == (0.10, 0.11)
    assert cfg.learning_rate == 0.01 and cfg.local_epochs == 10
    assert np.all(cfg.resolved_bs_bandwidth_mhz() == 1.0)


@pytest.mark.parametrize("changes", [
    {"area_side_m": 0}, {"num_users": 0}, {"num_bs": 0}, {"model_size_bits": 0},
    {"rho1": 1.5}, {"rho2": 0.0}, {"speed_mps": -1}, {"comp_latency_range_s": (0.2, 0.1)},
    {"bs_bandwidth_mhz": (1.0, 1.0)}, {"bs_bandwidth_mhz": (1.0,) * 7 + (0.0,)},
    {"mobility_dt_mode": "sometimes"},
])
def test_invalid_config(changes):
    with pytest.raises(ConfigError):
        SimConfig(**changes)


def test_heterogeneous_bandwidth_keeps_total():
    cfg = SimConfig(heterogeneous_bw=True, master_seed=3)
    bw = cfg.resolved_bs_bandwidth_mhz()
    assert bw.sum() == pytest.approx(cfg.num_bs)
    assert len(set(bw.round(9))) == cfg.num_bs
    np.testing.assert_array_equal(bw, SimConfig(heterogeneous_bw=True, master_seed=3).resolved_bs_bandwidth_mhz())


def test_config_file_env_and_override_precedence(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text("# test\nnum_users = 10\nspeed_mps = 5  # slow\nbs_bandwidth_mhz = 0.5, 1.5\nnum_bs = 2\n")
    cfg = load_config(path, environ={})
    assert (cfg.num_users, cfg.speed_mps, cfg.bs_bandwidth_mhz) == (10, 5.0, (0.5, 1.5))
    cfg = load_config(path, environ={"FLMOB_SPEED_MPS": "7", "OTHER": "x"})
    assert cfg.speed_mps == 7.0
    cfg = load_config(path, overrides={"speed_mps": "9"}, environ={"FLMOB_SPEED_MPS": "7"})
    assert cfg.speed_mps == 9.0


def test_config_text_errors():
    with pytest.raises(ConfigError):
        parse_config_text("no_equals_sign\n")
    with pytest.raises(ConfigError):
        parse_config_text("mystery = 1\n")
    with pytest.raises(ConfigError):
        config_from_mapping({"num_users": "lots"})


def test_format_roundtrip():
    cfg = SimConfig(num_users=12, rho1=0.25, bs_bandwidth_mhz=(1.0,) * 8, heterogeneous_bw=True)
    again = config_from_mapping(parse_config_text(format_config(cfg)))
    assert again == cfg
