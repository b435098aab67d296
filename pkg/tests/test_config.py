import pytest

from mecsim.config import (FADING_CONSTANT, SimConfig, load_config,
                           save_config, with_overrides)


def test_defaults_follow_reference_layout():
    cfg = SimConfig()
    assert cfg.n_ue == 10
    assert (cfg.n_uav, cfg.n_gv, cfg.n_gs) == (3, 1, 1)
    assert cfg.n_nodes == 5
    assert cfg.gs_positions == ((50.0, 50.0),)
    assert cfg.bandwidth == 1e6
    assert cfg.latency_limit == 2.0
    assert cfg.energy_coeff == 1e-27
    assert cfg.f_local_max == 1e9


def test_f_max_lookup_by_kind():
    cfg = SimConfig()
    assert cfg.f_max_for_kind("UAV") == 1e10
    assert cfg.f_max_for_kind("GV") == 1e11
    assert cfg.f_max_for_kind("GS") == 1e12
    with pytest.raises(KeyError):
        cfg.f_max_for_kind("SATELLITE")


@pytest.mark.parametrize("overrides", [
    {"n_ue": -1},
    {"tau": 1.0},
    {"tau": 0.5},
    {"fading": "rician"},
    {"local_policy": "turbo"},
    {"interference_weight": -0.1},
    {"n_gs": 2},  # keeps the single default GS position
])
def test_validation_rejects(overrides):
    with pytest.raises(ValueError):
        with_overrides(SimConfig(), **overrides)


def test_gs_positions_must_match_count():
    cfg = with_overrides(SimConfig(), n_gs=2,
                         gs_positions=((0.0, 0.0), (10.0, 10.0)))
    assert cfg.n_nodes == 6


def test_round_trip_through_file(tmp_path):
    cfg = with_overrides(SimConfig(), n_ue=42, fading=FADING_CONSTANT,
                         interference_weight=1e-6,
                         gs_positions=((-3.5, 7.25),), latency_limit=1.5)
    path = tmp_path / "sim.cfg"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_load_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("warp_factor = 9\n")
    with pytest.raises(ValueError, match="unknown config key"):
        load_config(path)


def test_load_rejects_missing_equals(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("n_ue 5\n")
    with pytest.raises(ValueError, match="expected"):
        load_config(path)


def test_load_ignores_comments_and_blanks(tmp_path):
    path = tmp_path / "sim.cfg"
    path.write_text("# comment\n\nn_ue = 7\n")
    assert load_config(path).n_ue == 7


def test_with_overrides_returns_new_object():
    cfg = SimConfig()
    other = with_overrides(cfg, n_ue=99)
    assert cfg.n_ue == 10
    assert other.n_ue == 99
