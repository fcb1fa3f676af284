import json

import numpy as np
import pytest

from tensorvar.cli import load_config, main
from tensorvar.errors import ConfigError
from tensorvar.io import read_npz, write_npz


@pytest.fixture
def toy_csv(tmp_path, rng):
    Y = np.zeros((60, 3))
    for t in range(1, 60):
        Y[t] = 0.4 * Y[t - 1] + rng.normal(size=3)
    path = tmp_path / "toy.csv"
    np.savetxt(path, Y, delimiter=",", header="a,b,c", comments="")
    return path


def write_cfg(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def fit_cfg(tmp_path, data, burn=1, draws=1):
    return write_cfg(tmp_path, f"data: {data}\nP: 1\nchain:\n  burn_in: {burn}\n  draws: {draws}\n"
                               "adapt:\n  enabled: false\n  R_init: 2\n")


def test_fit_single_draw(tmp_path, toy_csv):
    assert main(["fit", "--config", str(fit_cfg(tmp_path, toy_csv)), "--out", str(tmp_path / "o")]) == 0
    ch = read_npz(tmp_path / "o" / "chain.npz")
    assert ch["B"].shape[0] == 1
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["n_draws"] == 1 and len(man["config_hash"]) > 8
    assert (tmp_path / "o" / "rank_trajectory.csv").read_text().startswith("iteration,rank")


def test_same_seed_byte_identical(tmp_path, toy_csv):
    cfg = str(fit_cfg(tmp_path, toy_csv, burn=20, draws=10))
    for d in ("a", "b"):
        assert main(["fit", "--config", cfg, "--out", str(tmp_path / d), "--seed", "3"]) == 0
    for f in ("chain.npz", "manifest.json", "rank_trajectory.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_simulate_ten_datasets(tmp_path):
    cfg = write_cfg(tmp_path, "simulate:\n  N: 10\n  R_true: 3\n  T: 50\n  datasets: 10\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")]) == 0
    files = sorted(p.name for p in (tmp_path / "sim").iterdir())
    assert len([f for f in files if f.endswith(".csv")]) == 10
    assert len([f for f in files if f.endswith("_truth.json")]) == 10


def test_pipeline(tmp_path):
    sim = tmp_path / "sim"
    cfg = write_cfg(tmp_path, f"simulate:\n  N: 3\n  R_true: 2\n  T: 80\n  datasets: 1\n"
                              f"data: {sim / 'dataset_01.csv'}\nchain:\n  burn_in: 30\n  draws: 20\n"
                              f"adapt:\n  R_init: 3\n  m_tilde: 10\n"
                              f"postprocess:\n  chain: {tmp_path / 'fit'}\n"
                              f"diagnose:\n  chain: {tmp_path / 'fit'}\n  truth: {sim / 'dataset_01_truth.json'}\n")
    for mode, out in (("simulate", sim), ("fit", tmp_path / "fit"), ("postprocess", tmp_path / "pp"),
                      ("diagnose", tmp_path / "diag")):
        assert main([mode, "--config", str(cfg), "--out", str(out)]) == 0, mode
    assert "final_rank" in json.loads((tmp_path / "pp" / "manifest.json").read_text())
    assert "coeff_mse" in json.loads((tmp_path / "diag" / "diagnostics.json").read_text())
    assert (tmp_path / "diag" / "if_ess.csv").exists()


def test_config_errors_cite_lines(tmp_path):
    cfg = write_cfg(tmp_path, "P: 2\nchain:\n  draws: 0\n")
    with pytest.raises(ConfigError, match=r"cfg.yaml:3"):
        load_config(cfg)
    cfg = write_cfg(tmp_path, "P: 2\nbogus: 1\n")
    with pytest.raises(ConfigError, match=r"cfg.yaml:2.*bogus"):
        load_config(cfg)


def test_exit_codes(tmp_path, capsys):
    bad = write_cfg(tmp_path, "model: nonsense\n")
    assert main(["fit", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    missing = write_cfg(tmp_path, f"data: {tmp_path / 'nope.csv'}\n", "m.yaml")
    assert main(["fit", "--config", str(missing), "--out", str(tmp_path / "y")]) == 3
    assert not (tmp_path / "y").exists()
    assert "error:" in capsys.readouterr().err


def test_npz_round_trip(tmp_path, rng):
    arrays = {"B": rng.normal(size=(3, 4, 2)), "N": np.array(2)}
    write_npz(tmp_path / "a.npz", arrays)
    write_npz(tmp_path / "b.npz", read_npz(tmp_path / "a.npz"))
    assert (tmp_path / "a.npz").read_bytes() == (tmp_path / "b.npz").read_bytes()
