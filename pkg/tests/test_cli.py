import json

import numpy as np
import pytest

from beamforming.field import PlaneSpec, PowerField
from cli import build_parser, main, resolve_config


def last_json(text):
    lines = [line for line in text.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


class TestCheckCommand:
    def test_selected_checks(self, capsys):
        assert main(["check", "--only", "tiling", "fresnel"]) == 0
        assert last_json(capsys.readouterr().out) == {"fresnel": "ok", "tiling": "ok"}


class TestKnnDump:
    def test_neighbors_and_bruteforce(self, capsys):
        assert main(["knn-dump", "--indices", "1,1", "--bits", "2", "--k", "4", "--brute"]) == 0
        data = last_json(capsys.readouterr().out)
        assert data["returned"] == 4 and not data["exhausted"]
        found = {tuple(n["indices"]) for n in data["neighbors"]}
        brute = {tuple(n["indices"]) for n in data["bruteforce"]["neighbors"]}
        assert found == brute == {(0, 1), (2, 1), (1, 0), (1, 2)}

    def test_index_outside_codebook(self, capsys):
        assert main(["knn-dump", "--indices", "0,9", "--bits", "2"]) == 2
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "BeamformingError"


class TestBfrCommand:
    def test_bfr_on_saved_map(self, tmp_path, capsys):
        plane = PlaneSpec(np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        values = np.zeros((3, 3))
        values[1, 1] = 1e-3
        path = PowerField(plane, np.linspace(-0.1, 0.1, 3), np.linspace(-0.1, 0.1, 3), values).to_csv(tmp_path / "m.csv")

        assert main(["bfr", "--map", path, "--log-level", "DEBUG"]) == 0
        metrics = last_json(capsys.readouterr().out)
        assert metrics["bfr_m"] == 0.0
        assert metrics["peak_xyz"] == pytest.approx([0.0, 1.0, 0.0])

    def test_bfr_without_log_level(self, tmp_path, capsys):
        plane = PlaneSpec(np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        path = PowerField(plane, np.linspace(-0.1, 0.1, 3), np.linspace(-0.1, 0.1, 3), np.ones((3, 3))).to_csv(tmp_path / "m.csv")
        assert main(["bfr", "--map", path, "--eta", "1.0"]) == 0
        assert last_json(capsys.readouterr().out)["bfr_m"] == pytest.approx(np.hypot(0.1, 0.1))


class TestExperimentCommands:
    def test_oracle_then_bfr(self, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["oracle", "--config", str(config_file), "--out", str(out)]) == 0
        assert (out / "summary.json").exists()
        assert (out / "run.log").stat().st_size > 0
        capsys.readouterr()

        assert main(["bfr", "--map", str(out / "maps" / "focal_plane.csv")]) == 0
        metrics = last_json(capsys.readouterr().out)
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert abs(metrics["bfr_m"] - summary["bfr_m"]) < 1e-9

    def test_train_and_map(self, config_file, tmp_path, capsys):
        out = tmp_path / "train"
        args = ["train", "--config", str(config_file), "--out", str(out), "--max-steps", "8", "--parallel", "off"]
        assert main(args) == 0
        assert (out / "curves" / "module_0.csv").exists()

        assert main(["map", "--config", str(config_file), "--out", str(tmp_path / "map"),
                     "--vector", str(out / "beam_vector.json")]) == 0
        assert "bfr_m" in last_json(capsys.readouterr().out)

    def test_invalid_override_is_domain_error(self, config_file, tmp_path, capsys):
        code = main(["oracle", "--config", str(config_file), "--out", str(tmp_path), "--override", "bits=0"])
        assert code == 2
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "ConfigValidationError"


class TestResolveConfig:
    def test_max_steps_shrinks_window(self, config_file):
        args = build_parser().parse_args(["train", "--config", str(config_file), "--max-steps", "8"])
        config = resolve_config(args)
        assert config.schedule.max_steps == 8
        assert config.schedule.window == 4

    def test_flags_map_to_config(self, config_file, tmp_path):
        args = build_parser().parse_args([
            "compare", "--config", str(config_file), "--seed", "99", "--variant", "ddpg",
            "--parallel", "on", "--out", str(tmp_path / "x"),
        ])
        config = resolve_config(args)
        assert config.seed == 99
        assert config.agent.variant == "ddpg"
        assert config.schedule.parallel is True
        assert config.output_dir == str(tmp_path / "x")
