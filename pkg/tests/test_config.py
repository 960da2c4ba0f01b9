import pytest

from riverbed.cases import CASES
from riverbed.config import default_config, dump_config, from_dict, load_config, to_dict


@pytest.mark.parametrize("case_id", sorted(CASES))
def test_roundtrip_every_case(case_id, tmp_path):
    cfg = default_config(case_id)
    dump_config(cfg, tmp_path / "c.toml", {"command": "test", "best_j0": 0.5})
    assert load_config(tmp_path / "c.toml") == cfg


def test_defaults_for_case_a():
    cfg = default_config("a")
    assert (cfg.fine.n_cells, cfg.fine.degree) == (400, 3)
    assert (cfg.forward.n_cells, cfg.forward.degree) == (50, 2)
    assert (cfg.adjoint.n_cells, cfg.adjoint.degree) == (25, 1)
    assert cfg.learning_rate == 0.6 and cfg.relaxation == 1.0
    assert cfg.regularization.gamma_l == 1e-6 and cfg.regularization.gamma_h == 5e-8
    assert cfg.noise.eta_meas == 0.1 and cfg.noise.eta_p == 0.25


def test_shock_defaults_use_limiters():
    cfg = default_config("4a")
    assert cfg.fine.limiter == "minmod" and cfg.forward.limiter == "weno"
    assert cfg.final_time == pytest.approx(0.2)


def test_partial_file_overrides():
    d = {"case": "a", "n_iters": 7, "noise": {"eta_meas": 0.0, "eta_p": 0.0, "seed": 3},
         "mesh": {"forward": {"n_cells": 20}}}
    cfg = from_dict(d)
    assert cfg.n_iters == 7 and cfg.noise.seed == 3 and cfg.forward.n_cells == 20
    assert cfg.forward.degree == 2 and cfg.fine.n_cells == 400


@pytest.mark.parametrize("bad", [
    {"n_iters": 3},
    {"case": "a", "bogus": 1},
    {"case": "a", "noise": {"sigma": 1}},
    {"case": "a", "mesh": {"coarse": {}}},
    {"case": "a", "mesh": {"forward": {"cells": 3}}},
    {"case": "zz"},
])
def test_bad_config_rejected(bad):
    with pytest.raises((ValueError, KeyError)):
        from_dict(bad)


def test_to_dict_has_sections():
    d = to_dict(default_config("d"))
    assert set(d["mesh"]) == {"fine", "forward", "adjoint"}
    assert d["case"] == "d"


def test_shipped_configs_match_defaults():
    from pathlib import Path

    files = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))
    assert {f.stem for f in files} == set(CASES)
    for f in files:
        assert load_config(f) == default_config(f.stem)
