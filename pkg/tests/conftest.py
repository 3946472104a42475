"""Shared fixtures for the expensive runs, computed once per session."""

import json
from pathlib import Path

import pytest

from ringcav.cli import EXIT_OK, main
from ringcav.experiments import linearized_steady_results
from ringcav.recipes import get_recipe

# acceptance verdicts, printed together at the end of the session
VERDICTS = []


@pytest.fixture(scope="session")
def herald_steady():
    """Linearized-model steady state at Fock cutoffs (6, 6, 4) and its heralded state."""
    summary, rho_p, rho_jp, rho = linearized_steady_results(get_recipe("fig6-herald").build())
    return {"summary": summary, "rho_p": rho_p, "rho_jp": rho_jp, "rho": rho}


class RecipeRuns:
    """Runs recipes through the command line once per (name, workers) and caches the output directory."""

    def __init__(self, root: Path):
        self.root = root
        self.cache = {}

    def __call__(self, name: str, workers: int = 1) -> Path:
        key = (name, workers)
        if key not in self.cache:
            d = get_recipe(name).build().to_dict()
            d["numerics"]["workers"] = workers
            out = self.root / f"{name}-w{workers}"
            d["outputs"]["directory"] = str(out)
            cfg = self.root / f"{name}-w{workers}.json"
            cfg.write_text(json.dumps(d))
            code = main(["run", str(cfg)])
            if code != EXIT_OK:
                raise RuntimeError(f"recipe {name} exited with {code}")
            self.cache[key] = out
        return self.cache[key]


@pytest.fixture(scope="session")
def recipe_run(tmp_path_factory):
    return RecipeRuns(tmp_path_factory.mktemp("recipes"))


@pytest.fixture
def verdict():
    """Record and print a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(criterion: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
