import subprocess
import sys

import pytest

from riverbed import cli
from riverbed.config import default_config, dump_config, load_config
from riverbed.errors import DryStateError
from riverbed.forward import read_trace_csv
from riverbed.objective import read_cost_history


@pytest.fixture
def small_config(tmp_path):
    cfg = default_config("a", n_iters=3, snapshot_every=1)
    cfg = cfg.with_(fine=cfg.fine.with_(n_cells=30, degree=2), forward=cfg.forward.with_(n_cells=16, degree=1),
                    adjoint=cfg.adjoint.with_(n_cells=8, degree=1), out_dir=str(tmp_path / "out"))
    path = tmp_path / "small.toml"
    dump_config(cfg, path)
    return path, cfg


def _run(*argv):
    return cli.main([str(a) for a in argv])


def test_generate_is_replayable(small_config, tmp_path):
    path, cfg = small_config
    assert _run("generate", "--config", path, "--out", tmp_path / "g1") == 0
    assert _run("generate", "--config", path, "--out", tmp_path / "g2") == 0
    a, b = (tmp_path / d / "measured.csv" for d in ("g1", "g2"))
    assert a.read_bytes() == b.read_bytes()
    meta = load_config(tmp_path / "g1" / "measured.meta.toml")
    assert meta.fine == cfg.fine
    assert "30 cells, P2" in (tmp_path / "g1" / "measured.meta.toml").read_text()


def test_generate_noise_free_flag(small_config, tmp_path):
    path, _ = small_config
    _run("generate", "--config", path, "--eta-meas", 0, "--out", tmp_path / "n0")
    _run("generate", "--config", path, "--eta-meas", 0, "--seed", 99, "--out", tmp_path / "n1")
    assert (tmp_path / "n0/measured.csv").read_bytes() == (tmp_path / "n1/measured.csv").read_bytes()


def test_invert_smoke_and_replay(small_config, tmp_path):
    path, _ = small_config
    assert _run("invert", "--config", path, "--iters", 1, "--out", tmp_path / "i1") == 0
    hist = read_cost_history(tmp_path / "i1" / "cost_history.csv")
    assert len(hist) == 1
    for name in ("recovered_p.csv", "snapshots.csv", "recovered_p.svg", "residue.svg", "run.meta.toml",
                 "measured.csv"):
        assert (tmp_path / "i1" / name).exists(), name
    _run("invert", "--config", path, "--iters", 1, "--out", tmp_path / "i2")
    for name in ("cost_history.csv", "recovered_p.csv", "recovered_p.svg"):
        assert (tmp_path / "i1" / name).read_bytes() == (tmp_path / "i2" / name).read_bytes(), name


def test_invert_with_data_file(small_config, tmp_path):
    path, _ = small_config
    _run("generate", "--config", path, "--out", tmp_path / "g")
    assert _run("invert", "--config", path, "--data", tmp_path / "g" / "measured.csv", "--no-plots",
                "--iters", 2, "--out", tmp_path / "i") == 0
    assert len(read_cost_history(tmp_path / "i" / "cost_history.csv")) == 2
    assert not (tmp_path / "i" / "residue.svg").exists()
    assert not (tmp_path / "i" / "measured.csv").exists()
    assert read_trace_csv(tmp_path / "g" / "measured.csv").times[0] == 0.0


def test_accuracy_command(tmp_path, capsys):
    assert _run("accuracy", "--degrees", 1, "--cells", 10, 20, "--out", tmp_path / "acc") == 0
    lines = (tmp_path / "acc" / "accuracy.csv").read_text().splitlines()
    assert lines[0] == "degree,n_cells,err_h,order_h,err_hu,order_hu" and len(lines) == 3
    assert "L1 err h" in capsys.readouterr().out


def test_taylor_command(small_config, tmp_path, capsys):
    path, _ = small_config
    code = _run("taylor", "--config", path, "--halvings", 2, "--direction", "constant", "--out", tmp_path / "t")
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith(("PASS", "FAIL"))
    assert len((tmp_path / "t" / "taylor.csv").read_text().splitlines()) == 1 + 3 + 1


def test_lcurve_command(small_config, tmp_path):
    path, _ = small_config
    assert _run("lcurve", "--config", path, "--exponents", 0, 2, "--iters", 2, "--out", tmp_path / "l") == 0
    rows = (tmp_path / "l" / "lcurve.csv").read_text().splitlines()
    assert len(rows) == 4
    assert "corner_gamma_hat" in (tmp_path / "l" / "lcurve.meta.toml").read_text()


@pytest.mark.parametrize("argv", [
    ["generate", "--case", "zz"],
    ["generate", "--config", "/nonexistent.toml"],
    ["invert", "--iters", "0"],
    ["taylor", "--halvings", "0"],
    ["lcurve", "--exponents", "3", "1"],
])
def test_usage_errors_exit_1(argv, tmp_path):
    assert cli.main(argv + ["--out", str(tmp_path)]) == 1


def test_argparse_errors_exit_code(capsys):
    for argv in ([], ["bogus"], ["invert", "--iters", "x"]):
        with pytest.raises(SystemExit) as info:
            cli.main(argv)
        assert info.value.code == 1


def test_case_conflict(small_config):
    path, _ = small_config
    assert _run("generate", "--config", path, "--case", "b") == 1


def test_numerical_failure_exit_2(small_config, monkeypatch, capsys):
    path, _ = small_config

    def dry(cfg):
        raise DryStateError("negative height", cell=3)

    monkeypatch.setattr(cli.ex, "measured_data", dry)
    assert _run("generate", "--config", path) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "riverbed.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "generate" in r.stdout
