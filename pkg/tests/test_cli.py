import csv
import json
import os

import numpy as np
import pytest

from uqpde import femlite
from uqpde.cli import main, validate_config
from uqpde.exceptions import ConfigError

FAST = ["--samples", "300", "--burn", "100", "--quiet"]


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.reader(fh))


def _files(root):
    out = {}
    for d, _, names in os.walk(root):
        for n in names:
            p = os.path.join(d, n)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = fh.read()
    return out


def test_heat_defaults():
    cfg = validate_config("heat1d", "")
    o = cfg.problem_options
    assert (o["n_grid"], o["n_tau"], o["tau_max"]) == (100, 225, 0.01)
    assert cfg.sampler == "cwmh" and cfg.n_samples == 50000
    assert o["noise_level"] == 0.1


def test_precedence_flags_over_config():
    cfg = validate_config("heat1d", '{"sampler.seed": 3, "sampler.n_samples": 10}',
                          {"sampler.seed": 4})
    assert cfg.seed == 4 and cfg.n_samples == 10


@pytest.mark.parametrize("raw,match", [
    ({"problem.noise_level": -0.1}, "noise_level must be ≥ 0"),
    ({"sampler.name": "nuts"}, r"supported samplers: \['cwmh', 'mh', 'pcn'\]"),
    ({"problem.colour": 1}, "unknown config key"),
    ({"sampler.n_samples": "many"}, "sampler.n_samples"),
    ({"sampler.chains": 0}, "sampler.chains"),
])
def test_validation_errors(raw, match):
    with pytest.raises(ConfigError, match=match):
        validate_config("heat1d", raw)


def test_output_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv("UQPDE_OUTPUT_DIR", str(tmp_path))
    assert validate_config("pat").output_dir == os.path.join(str(tmp_path), "pat")


def test_exit_codes(tmp_path, capsys):
    assert main(["heat1d", "--noise", "-0.1", "--output-dir", str(tmp_path / "a")]) == 1
    assert "noise_level must be ≥ 0" in capsys.readouterr().err
    assert main(["heat1d", "--sampler", "nuts"]) == 1
    assert main(["nonsense"]) == 1
    # zero noise leaves no posterior to sample
    assert main(["heat1d", "--noise", "0", "--output-dir", str(tmp_path / "b")] + FAST) == 1
    assert not (tmp_path / "b").exists()


def test_refuses_foreign_directory(tmp_path):
    (tmp_path / "keep.txt").write_text("x")
    assert main(["heat1d", "--output-dir", str(tmp_path)] + FAST) == 1
    assert os.listdir(tmp_path) == ["keep.txt"]


@pytest.fixture(scope="module")
def heat_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "heat"
    assert main(["heat1d", "--seed", "1", "--output-dir", str(out)] + FAST) == 0
    return out


def test_artifacts(heat_run):
    names = set(os.listdir(heat_run))
    assert {"samples.csv", "stats.csv", "data.csv", "meta.json", "plots"} <= names
    plots = set(os.listdir(heat_run / "plots"))
    assert {"coefficients_ci.svg", "ci_band.svg", "data_1.svg"} <= plots
    samples = _read(heat_run / "samples.csv")
    assert samples[0] == ["x_1", "x_2", "x_3"] and len(samples) == 301
    stats = _read(heat_run / "stats.csv")
    assert stats[0][:3] == ["dim", "mean", "variance"]
    assert len(stats) == 1 + 3 + 100
    data = _read(heat_run / "data.csv")
    assert data[0] == ["quantity", "dataset", "index", "value"]
    kinds = [r[0] for r in data[1:]]
    assert kinds.count("truth_field") == 100 and kinds.count("y_obs") == 100
    meta = json.loads((heat_run / "meta.json").read_text())
    for key in ("config", "s_noise", "acceptance_rate", "ess", "runtime", "rng", "kernel_backend"):
        assert key in meta
    assert meta["config"]["sampler.seed"] == 1


def test_determinism_and_config_round_trip(heat_run, tmp_path):
    again = tmp_path / "again"
    assert main(["heat1d", "--seed", "1", "--output-dir", str(again)] + FAST) == 0
    a, b = _files(heat_run), _files(again)
    a.pop("meta.json"), b.pop("meta.json")
    assert a == b

    echo = json.loads((heat_run / "meta.json").read_text())["config"]
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({k: v for k, v in echo.items() if v is not None}))
    replay = tmp_path / "replay"
    assert main(["heat1d", "--config", str(cfg_file), "--output-dir", str(replay), "--quiet"]) == 0
    c = _files(replay)
    c.pop("meta.json")
    assert a == c


def test_rerun_overwrites_previous_run(heat_run):
    assert main(["heat1d", "--seed", "2", "--output-dir", str(heat_run)] + FAST) == 0
    meta = json.loads((heat_run / "meta.json").read_text())
    assert meta["seed"] == 2
    assert not [n for n in os.listdir(heat_run.parent) if n.startswith(".uqpde-partial")]


def test_plot_subcommand(heat_run):
    os.remove(heat_run / "plots" / "ci_band.svg")
    assert main(["plot", str(heat_run), "--quiet"]) == 0
    assert (heat_run / "plots" / "ci_band.svg").read_text().startswith("<svg")
    assert main(["plot", str(heat_run / "missing")]) == 1


def test_chains(tmp_path):
    out = tmp_path / "chains"
    assert main(["heat1d", "--chains", "2", "--seed", "5", "--output-dir", str(out)] + FAST) == 0
    assert len(_read(out / "samples.csv")) == 601
    for k in range(2):
        meta = json.loads((out / f"chain_{k}" / "meta.json").read_text())
        assert meta["seed"] == 5 + k
    # same data (problem seed 5) sampled with chain 1's seed reproduces chain 1
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem.seed": 5}))
    single = tmp_path / "single"
    assert main(["heat1d", "--config", str(cfg), "--seed", "6", "--output-dir", str(single),
                 "--no-plots"] + FAST) == 0
    a = np.loadtxt(out / "chain_1" / "samples.csv", delimiter=",", skiprows=1)
    b = np.loadtxt(single / "samples.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(a, b)


def test_mesh_problem_and_dump(tmp_path):
    out, mesh_file = tmp_path / "eit", tmp_path / "disk.mesh"
    argv = ["eit", "--n-rings", "3", "--n-sectors", "20", "--n-kl", "8", "--samples", "50",
            "--burn", "10", "--quiet", "--output-dir", str(out), "--dump-mesh", str(mesh_file)]
    assert main(argv) == 0
    assert {"truth.svg", "mean.svg", "variance.svg", "data_4.svg"} <= set(os.listdir(out / "plots"))
    mesh = femlite.load_mesh(str(mesh_file))
    assert mesh.n_nodes == 1 + 3 * 20
    data = _read(out / "data.csv")
    assert {r[1] for r in data[1:] if r[0] == "y_obs"} == {"1", "2", "3", "4"}
    assert main(["pat", "--dump-mesh", str(tmp_path / "x"), "--output-dir", str(tmp_path / "p")] + FAST) == 1


def test_burn_defaults():
    assert validate_config("pat").n_burn == 200000
    assert validate_config("pat", {"sampler.n_burn": 0}).n_burn == 0
    assert validate_config("heat1d").n_burn is None
