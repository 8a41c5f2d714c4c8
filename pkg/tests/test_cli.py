import json
import math

import pytest

from twinmz.cli import main
from twinmz.config import ConfigError, RunConfig, load_config


def run_json(capsys, argv):
    code = main(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main(["run", "--out", str(out)])
    return code, out


def test_run_default(default_run):
    code, out = default_run
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["schema"] == 1 and rep["passed"]
    for k, v in {"0": 0.0, "1": 1.0, "2": 0.5}.items():
        assert rep["extraction"]["N_hat"][k] == pytest.approx(v, abs=0.05)
    for name in ("s0.csv", "s1.csv", "s2.csv", "s3.csv", "figure2.svg"):
        assert (out / name).exists()


def test_run_is_byte_identical(default_run, tmp_path):
    _, first = default_run
    assert main(["run", "--out", str(tmp_path)]) == 0
    for name in ("report.json", "s0.csv", "s1.csv", "s2.csv", "s3.csv", "figure2.svg"):
        assert (tmp_path / name).read_bytes() == (first / name).read_bytes(), name


def test_config_round_trip(default_run, tmp_path):
    # the echoed config reproduces the run
    _, first = default_run
    echo = json.loads((first / "report.json").read_text())["config"]
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(echo))
    out = tmp_path / "again"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert (out / "report.json").read_bytes() == (first / "report.json").read_bytes()


def test_forced_identical_classes_fail(tmp_path, capsys):
    cfg = RunConfig().to_dict()
    cfg["analysis"]["presets"] = [1, 1, 2]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) != 0


def test_unknown_key_rejected(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"stage": {"gian": 1.5}}))
    with pytest.raises(ConfigError, match="stage.gian"):
        load_config(path)
    assert main(["run", "--config", str(path)]) == 2
    assert "stage.gian" in capsys.readouterr().err


def test_bad_json_location(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text('{\n  "seed": 1,\n}')
    assert main(["run", "--config", str(path)]) == 2
    assert ":3:" in capsys.readouterr().err


def test_config_dict_round_trip():
    cfg = RunConfig()
    assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_weakvalue_class2(capsys):
    code, data = run_json(capsys, ["weakvalue", "--class", "2", "--gamma", "30"])
    assert code == 0
    assert data["weak_value"]["re"] == pytest.approx(0.5, abs=1e-12)
    assert data["centroid_um"] == pytest.approx(15.0, abs=1e-9)
    assert data["validity"]["is_weak"] is True


def test_weakvalue_class1_zero(capsys):
    code, data = run_json(capsys, ["weakvalue", "--class", "1", "--gamma", "0"])
    assert code == 0 and data["centroid_um"] == pytest.approx(0.0, abs=1e-12)


def test_weakvalue_orthogonal_post(capsys):
    assert main(["weakvalue", "--class", "0", "--gamma", "30", "--post", "1", "1j"]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "Traceback" not in err


def test_modular_uncertainty_single(capsys):
    code, data = run_json(capsys, ["modular", "uncertainty", "--single-packet"])
    assert code == 0 and data["is_completely_uncertain"] is True


def test_modular_expectation_alpha(capsys):
    code, data = run_json(capsys, ["modular", "expectation", "--alpha", "1.0"])
    assert code == 0 and data["arg"] == pytest.approx(1.0, abs=1e-3)
    assert data["abs"] == pytest.approx(0.5, abs=1e-4)


def test_modular_expectation_zero_distance(capsys):
    code, data = run_json(capsys, ["modular", "expectation", "--distance", "0"])
    assert code == 0 and data["re"] == 1.0 and data["im"] == 0.0


def test_modular_outputs(tmp_path, capsys):
    assert main(["modular", "distribution", "--out", str(tmp_path)]) == 0
    assert main(["modular", "screen", "--close", "left", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "modular_distribution.csv").exists()
    assert (tmp_path / "screen_pattern.csv").exists()
    data = json.loads((tmp_path / "modular_screen.json").read_text())
    assert math.isclose(data["mass"], 1.0, abs_tol=1e-9)


def test_modular_domain_error(capsys):
    assert main(["modular", "screen", "--t", "100000"]) == 2


def test_calibrate(tmp_path, capsys):
    code, data = run_json(capsys, ["calibrate", "--out", str(tmp_path)])
    assert code == 0
    assert data["calibration"]["slope_px_per_um"] == pytest.approx(-1.5 / 7.4, rel=0.02)
    assert (tmp_path / "s3.csv").exists() and (tmp_path / "calibration.json").exists()


def test_figure2_from_csv(default_run, tmp_path, capsys):
    _, out = default_run
    dest = tmp_path / "f.svg"
    assert main(["figure2", "--in", str(out), "--out", str(dest)]) == 0
    assert dest.read_text() == (out / "figure2.svg").read_text()


def test_figure2_missing_input(tmp_path, capsys):
    assert main(["figure2", "--in", str(tmp_path / "nope")]) == 2
