import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ringcav.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_REGIME, main
from ringcav.config import STOCHASTIC, parse_config
from ringcav.errors import ConfigError
from ringcav.experiments import SUMMARY_KEYS, fmt
from ringcav.recipes import RECIPES, get_recipe, list_recipes

EXPECTED_RECIPES = {"fig2-desk", "fig4-ensemble", "fig5-herald", "fig6-gauss", "fig6-herald", "fig7-transient",
                    "toy-demo"}


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def recipe_dict(name, **numerics):
    d = get_recipe(name).build().to_dict()
    d["numerics"].update(numerics)
    return d


def read_summary(directory):
    return json.loads((Path(directory) / "summary.json").read_text())


def tree_bytes(directory):
    root = Path(directory)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestConfig:
    def test_unknown_key_rejected(self):
        d = recipe_dict("fig6-gauss")
        d["numerics"]["stepsize"] = 0.1
        with pytest.raises(ConfigError, match="stepsize"):
            parse_config(d)

    def test_no_type_coercion(self):
        d = recipe_dict("fig6-gauss")
        d["model"]["omega"] = "200"
        with pytest.raises(ConfigError):
            parse_config(d)

    def test_model_kind_must_match(self):
        d = recipe_dict("fig6-gauss")
        d["experiment"] = "ring-ensemble"
        with pytest.raises(ConfigError, match="ring"):
            parse_config(d)

    def test_stochastic_needs_seed(self):
        d = recipe_dict("toy-demo")
        d["numerics"]["base_seed"] = None
        with pytest.raises(ConfigError, match="base_seed"):
            parse_config(d)

    def test_overrides(self):
        cfg = get_recipe("toy-demo").build().with_overrides(seed=5, out="x", n_traj=3)
        assert (cfg.numerics.base_seed, cfg.outputs.directory, cfg.numerics.n_traj) == (5, "x", 3)

    def test_grid_order(self):
        with pytest.raises(ConfigError):
            parse_config(recipe_dict("fig6-gauss", t_start=2.0, t_end=1.0))


class TestRecipes:
    def test_catalog(self):
        assert EXPECTED_RECIPES <= set(RECIPES)
        assert [r.name for r in list_recipes()] == sorted(RECIPES)

    @pytest.mark.parametrize("name", sorted(RECIPES))
    def test_round_trip(self, name):
        cfg = get_recipe(name).build()
        assert parse_config(json.loads(json.dumps(cfg.to_dict()))) == cfg

    @pytest.mark.parametrize("name", sorted(RECIPES))
    def test_stochastic_seeded(self, name):
        cfg = get_recipe(name).build()
        if cfg.experiment in STOCHASTIC:
            assert cfg.numerics.base_seed is not None

    def test_listing(self, capsys):
        assert main(["recipes"]) == EXIT_OK
        out = capsys.readouterr().out
        for name in EXPECTED_RECIPES:
            assert name in out
        assert "alpha_c=150" in out and "Figure 6" in out

    def test_show(self, capsys):
        assert main(["recipes", "--show", "fig6-gauss"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["experiment"] == "gaussian-evolve"

    def test_unknown_recipe(self):
        assert main(["run", "recipe:nope"]) == EXIT_CONFIG


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["validate", str(p)]) == EXIT_CONFIG

    def test_unknown_key(self, tmp_path, capsys):
        d = recipe_dict("fig6-gauss")
        d["extra"] = 1
        assert main(["validate", write_config(tmp_path, d)]) == EXIT_CONFIG
        assert "extra" in capsys.readouterr().err

    def test_regime_error(self, tmp_path):
        d = recipe_dict("fig2-desk")
        d["model"]["delta_c"] = 10.0
        assert main(["validate", write_config(tmp_path, d)]) == EXIT_REGIME

    def test_heating_regime_steady_state(self, tmp_path):
        d = recipe_dict("fig6-gauss")
        d["experiment"] = "gaussian-steady"
        d["model"]["delta_c"] = 20.0
        d["outputs"]["directory"] = str(tmp_path / "out")
        assert main(["run", write_config(tmp_path, d)]) == EXIT_REGIME

    def test_numerical_error(self, tmp_path):
        # dense master equation beyond its dimension limit
        d = recipe_dict("fig6-herald", particle_cutoff=20, field_cutoff=12)
        d["outputs"]["directory"] = str(tmp_path / "out")
        assert main(["run", write_config(tmp_path, d)]) == EXIT_NUMERICAL

    def test_validate_ok(self, capsys):
        assert main(["validate", "recipe:fig6-gauss"]) == EXIT_OK
        assert "ok" in capsys.readouterr().out

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "ringcav.cli", "validate", "recipe:toy-demo"],
                              capture_output=True, text=True)
        assert proc.returncode == 0


class TestRun:
    def test_gaussian_recipe(self, tmp_path):
        out = tmp_path / "g"
        assert main(["run", "recipe:fig6-gauss", "--out", str(out)]) == EXIT_OK
        s = read_summary(out)
        assert s["results"]["steady_cp"] == pytest.approx(0.726, abs=5e-4)
        assert set(s["results"]) == set(SUMMARY_KEYS)
        assert sorted(s["files"]) == sorted(["config.json", "summary.json", "timeseries.csv"])
        data = np.genfromtxt(out / "timeseries.csv", delimiter=",", names=True)
        assert data["t"][-1] == pytest.approx(1200.0)

    def test_ring_trajectory_outputs(self, tmp_path):
        d = recipe_dict("fig2-desk", t_end=40.0, n_steps=8, momentum_cutoff=10, fock_cutoff=3)
        d["outputs"]["directory"] = str(tmp_path / "r")
        assert main(["run", write_config(tmp_path, d)]) == EXIT_OK
        header = (tmp_path / "r" / "timeseries.csv").read_text().splitlines()[0].split(",")
        for col in ("t", "n_photon", "cp", "en"):
            assert col in header
        assert (tmp_path / "r" / "jumps.csv").read_text().startswith("trajectory,t")

    def test_seed_override_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["run", "recipe:toy-demo", "--out", str(a), "--n-traj", "3"])
        main(["run", "recipe:toy-demo", "--out", str(b), "--n-traj", "3", "--seed", "99"])
        assert read_summary(b)["config"]["numerics"]["base_seed"] == 99
        assert tree_bytes(a)["jumps.csv"] != tree_bytes(b)["jumps.csv"]

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["run", "recipe:toy-demo", "--out", str(a), "--n-traj", "4"])
        main(["run", "recipe:toy-demo", "--out", str(b), "--n-traj", "4"])
        assert tree_bytes(a) == tree_bytes(b)

    def test_parallel_width_independent(self, tmp_path):
        d = recipe_dict("fig7-unravel", n_traj=40, compare_master_equation=False)
        paths = []
        for w in (1, 2):
            d["numerics"]["workers"] = w
            d["outputs"]["directory"] = str(tmp_path / f"w{w}")
            assert main(["run", write_config(tmp_path, d, f"w{w}.json")]) == EXIT_OK
            paths.append(tmp_path / f"w{w}")
        assert tree_bytes(paths[0]) == tree_bytes(paths[1])


class TestFormatting:
    def test_round_trip_exact(self):
        for x in (0.1, 1 / 3, 2.0**-40, 123456.789):
            assert float(fmt(x)) == x

    def test_undefined(self):
        assert fmt(float("nan")) == "undefined"
