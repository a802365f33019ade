import json

import numpy as np
import pytest

from masolver import cli, experiment
from masolver.config import (
    canonical_json,
    config_hash,
    load_config,
    validate_config,
    with_method_param,
)
from masolver.exceptions import ConfigError, SolverAbortError


def base_config(out_dir, **overrides):
    cfg = {
        "name": "toy-inpaint",
        "image": {"channels": 1, "height": 8, "width": 8},
        "task": {
            "operator": {
                "kind": "mask_box",
                "box": {"top": 2, "left": 2, "height": 4, "width": 4},
            },
            "corruption": {"kind": "none"},
        },
        "prior": {"kind": "template_bank", "components": 4, "tau": 0.05},
        "schedule": {"steps": 6},
        "methods": [
            {"name": "mas", "eta1": 0.0, "eta2": 0.0,
             "policy": {"kind": "noise_free"}},
            {"name": "ddnm"},
        ],
        "seeds": [0, 1],
        "output_dir": str(out_dir),
    }
    cfg.update(overrides)
    return cfg


class TestSchemaValidation:
    def test_valid_config_passes(self, tmp_path):
        validate_config(base_config(tmp_path))

    def test_unknown_key_rejected_with_path(self, tmp_path):
        cfg = base_config(tmp_path)
        cfg["extra_knob"] = 1
        with pytest.raises(ConfigError, match="extra_knob"):
            validate_config(cfg)

    def test_unknown_method_name_rejected(self, tmp_path):
        cfg = base_config(tmp_path)
        cfg["methods"][0]["name"] = "magic"
        with pytest.raises(ConfigError, match="methods"):
            validate_config(cfg)

    def test_round_trip_identity(self, tmp_path):
        cfg = base_config(tmp_path)
        again = json.loads(canonical_json(cfg))
        assert again == cfg
        assert canonical_json(again) == canonical_json(cfg)
        assert config_hash(again) == config_hash(cfg)

    def test_load_config_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(path)


class TestRunExperiment:
    def test_noise_free_inpainting_is_measurement_consistent(self, tmp_path):
        cfg = base_config(tmp_path / "out")
        metrics = experiment.run_experiment(cfg, quiet=True)
        mas = metrics["methods"]["mas"]
        assert mas["measurement_residual_mean"] <= 1e-6
        out = tmp_path / "out"
        for seed in (0, 1):
            assert (out / f"truth_seed{seed}.pgm").exists()
            assert (out / f"measurement_seed{seed}.pgm").exists()
            assert (out / f"restored_mas_seed{seed}.pgm").exists()
            assert (out / f"trajectory_ddnm_seed{seed}.json").exists()
        assert (out / "metrics.json").exists()

    def test_manifest_hashes_match_files(self, tmp_path):
        import hashlib

        cfg = base_config(tmp_path / "out")
        experiment.run_experiment(cfg, quiet=True)
        out = tmp_path / "out"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest
        for name, digest in manifest.items():
            actual = hashlib.sha256((out / name).read_bytes()).hexdigest()
            assert actual == digest, name

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg_a = base_config(tmp_path / "a")
        cfg_b = base_config(tmp_path / "a")  # same config hash
        experiment.run_experiment(cfg_a, out_dir=tmp_path / "a", quiet=True)
        experiment.run_experiment(cfg_b, out_dir=tmp_path / "b", quiet=True)
        a = (tmp_path / "a" / "metrics.json").read_bytes()
        b = (tmp_path / "b" / "metrics.json").read_bytes()
        assert a == b

    def test_seed_override_runs_single_seed(self, tmp_path):
        cfg = base_config(tmp_path / "out")
        metrics = experiment.run_experiment(cfg, seed_override=5, quiet=True)
        assert list(metrics["methods"]["mas"]["per_seed"]) == ["5"]

    def test_threaded_run_matches_serial(self, tmp_path, monkeypatch):
        cfg = base_config(tmp_path / "s")
        experiment.run_experiment(cfg, out_dir=tmp_path / "s", quiet=True)
        monkeypatch.setenv("MASOLVER_THREADS", "4")
        experiment.run_experiment(cfg, out_dir=tmp_path / "t", quiet=True)
        a = (tmp_path / "s" / "metrics.json").read_bytes()
        b = (tmp_path / "t" / "metrics.json").read_bytes()
        assert a == b


class TestSweep:
    def test_single_point_grid_row_count(self, tmp_path):
        cfg = base_config(tmp_path / "out")
        rows = experiment.sweep(cfg, "eta2", [0.1], quiet=True)
        ok = [r for r in rows if r["status"] == "ok"]
        assert len(ok) == len(cfg["seeds"])

    def test_ablation_axes(self, tmp_path):
        # the reported comparison axes: eta2 = 0 with eta1 in {-0.45, 0}
        cfg = base_config(tmp_path / "out")
        rows = experiment.sweep(cfg, "eta1", [-0.45, 0.0], quiet=True)
        values = {r["value"] for r in rows}
        assert values == {-0.45, 0.0}
        assert all(r["status"] == "ok" for r in rows)

    def test_unstable_grid_point_becomes_failed_row(self, tmp_path):
        cfg = base_config(tmp_path / "out")
        rows = experiment.sweep(cfg, "eta1", [-2.0], quiet=True)
        assert rows
        assert all(r["status"].startswith("unstable") for r in rows)

    def test_toy_trajectory_limit(self, tmp_path):
        point = experiment.toy_2d_point(1e8, 0.0)
        assert np.abs(point - experiment.TOY_M0T).max() <= 1e-3
        cfg = base_config(tmp_path / "out")
        experiment.sweep(cfg, "eta1", [0.0, 1.0], quiet=True)
        assert (tmp_path / "out" / "sweep_toy2d.csv").exists()
        assert (tmp_path / "out" / "sweep.csv").exists()

    def test_with_method_param_k(self, tmp_path):
        cfg = base_config(tmp_path / "out")
        swept = with_method_param(cfg, "k", 0.5)
        assert swept["methods"][0]["policy"]["k"] == 0.5


class TestCliExitCodes:
    def test_solve_success(self, tmp_path):
        cfg = base_config(tmp_path / "out", seeds=[0])
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["solve", str(path), "--quiet"]) == 0

    def test_config_error_exit_code(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"name": "x"}))
        assert cli.main(["solve", str(path)]) == 1

    def test_missing_file_exit_code(self, tmp_path):
        assert cli.main(["solve", str(tmp_path / "nope.json")]) == 1

    def test_solver_abort_exit_code(self, tmp_path, monkeypatch):
        cfg = base_config(tmp_path / "out", seeds=[0])
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))

        def boom(*args, **kwargs):
            raise SolverAbortError(7)

        monkeypatch.setattr(experiment, "run_experiment", boom)
        assert cli.main(["solve", str(path)]) == 2

    def test_sweep_cli(self, tmp_path):
        cfg = base_config(tmp_path / "out", seeds=[0])
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        code = cli.main(["sweep", str(path), "--param", "eta2",
                         "--grid", "0.0,0.1", "--quiet"])
        assert code == 0
        assert (tmp_path / "out" / "sweep.csv").exists()

    def test_bad_grid_is_config_error(self, tmp_path):
        cfg = base_config(tmp_path / "out", seeds=[0])
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["sweep", str(path), "--param", "eta2",
                         "--grid", "a,b"]) == 1


class TestOperatorBuilders:
    def test_all_operator_kinds_build(self, tmp_path):
        from masolver.config import build_operator

        shapes = {
            "identity": {},
            "mask_random": {"masked_fraction": 0.7, "mask_seed": 3},
            "block_downsample": {"factor": 2},
            "circular_blur": {"kernel_size": 3},
        }
        for kind, extra in shapes.items():
            cfg = base_config(tmp_path / "out")
            cfg["task"]["operator"] = {"kind": kind, **extra}
            assert build_operator(cfg).in_dim == 64

    def test_channel_average_needs_rgb_image(self, tmp_path):
        from masolver.config import build_operator

        cfg = base_config(tmp_path / "out")
        cfg["image"]["channels"] = 3
        cfg["task"]["operator"] = {"kind": "channel_average"}
        op = build_operator(cfg)
        assert op.in_dim == 192 and op.out_dim == 64
