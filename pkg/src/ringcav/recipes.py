"""Built-in experiment presets at desk scale."""

from __future__ import annotations

import copy
from dataclasses import dataclass

from .config import ExperimentConfig, parse_config

# pumped ring cavity with kappa = 10 and delta_c = -kappa
_RING = {"kind": "ring", "alpha_c": 150.0, "U0": -1.0 / 150.0, "delta_c": -10.0, "kappa": 10.0}
# deep-trap linearized regime
_DEEP = {"kind": "oscillator", "omega": 200.0, "g": 5.0, "delta_c": -20.0, "kappa": 100.0}
# transient-entanglement regime, delta_c = -(omega - kappa)
_TRANSIENT = {"kind": "oscillator", "omega": 30.0, "g": 5.0, "delta_c": -25.0, "kappa": 5.0}


@dataclass(frozen=True)
class Recipe:
    name: str
    figure: str
    description: str
    runtime: str
    config: dict

    def build(self) -> ExperimentConfig:
        cfg = copy.deepcopy(self.config)
        cfg.setdefault("outputs", {}).setdefault("directory", f"out/{self.name}")
        return parse_config(cfg)


RECIPES = {r.name: r for r in [
    Recipe(
        "fig2-desk", "Figure 2",
        "single ring-cavity trajectory: photon number, C_p and particle entanglement with jump times",
        "~2 min",
        {"experiment": "ring-trajectory", "model": _RING,
         "numerics": {"momentum_cutoff": 12, "fock_cutoff": 6, "t_end": 3000.0, "n_steps": 300,
                      "method": "spectral", "base_seed": 2}},
    ),
    Recipe(
        "fig4-ensemble", "Figure 4",
        "ring-cavity ensemble: averaged C_p, photon number and the two-particle momentum distribution",
        "~8 min",
        {"experiment": "ring-ensemble", "model": _RING,
         "numerics": {"momentum_cutoff": 12, "fock_cutoff": 6, "t_end": 3000.0, "n_steps": 60,
                      "method": "spectral", "n_traj": 100, "base_seed": 4},
         "outputs": {"snapshot_times": [3000.0]}},
    ),
    Recipe(
        "fig5-herald", "Figure 5",
        "ring-cavity ensemble heralded on a detection: conditional C_p over time and conditional momentum "
        "distributions in the second half of the run",
        "~8 min",
        {"experiment": "ring-ensemble", "model": _RING,
         "numerics": {"momentum_cutoff": 12, "fock_cutoff": 6, "t_end": 3000.0, "n_steps": 60,
                      "method": "spectral", "n_traj": 100, "base_seed": 4},
         "outputs": {"snapshot_times": [1500.0, 2250.0, 3000.0]}},
    ),
    Recipe(
        "fig6-gauss", "Figure 6",
        "covariance evolution of the linearized model from vacuum into the deep-trap steady state",
        "~1 s",
        {"experiment": "gaussian-evolve", "model": _DEEP,
         "numerics": {"t_end": 1200.0, "n_steps": 1200, "method": "exact"}},
    ),
    Recipe(
        "fig6-herald", "Figure 6",
        "master-equation steady state of the linearized model and the state heralded by a detection "
        "(Fock cutoffs 6, 6, 4)",
        "~1 min",
        {"experiment": "herald", "model": _DEEP,
         "numerics": {"particle_cutoff": 6, "field_cutoff": 4, "method": "implicit"}},
    ),
    Recipe(
        "fig7-transient", "Figure 7",
        "transient entanglement and momentum variance from the covariance equation, starting in vacuum",
        "~1 s",
        {"experiment": "gaussian-evolve", "model": _TRANSIENT,
         "numerics": {"t_end": 3.0, "n_steps": 60, "method": "rk"}},
    ),
    Recipe(
        "fig7-unravel", "Figure 7",
        "500 quantum-jump trajectories of the linearized model against the direct master-equation solution",
        "~5 s",
        {"experiment": "linearized-ensemble", "model": _TRANSIENT,
         "numerics": {"particle_cutoff": 4, "field_cutoff": 4, "t_end": 2.0, "n_steps": 20,
                      "method": "spectral", "n_traj": 500, "base_seed": 1, "compare_master_equation": True}},
    ),
    Recipe(
        "toy-demo", "toy model",
        "adiabatic toy model in the scattering basis: post-jump Bell state and photon-number jump",
        "~10 s",
        {"experiment": "toy-trajectory", "model": _DEEP,
         "numerics": {"toy_cutoff": 4, "t_end": 10.0, "n_steps": 100, "method": "spectral", "n_traj": 20,
                      "base_seed": 3}},
    ),
]}


def list_recipes() -> list:
    return [RECIPES[k] for k in sorted(RECIPES)]


def get_recipe(name: str) -> Recipe:
    try:
        return RECIPES[name]
    except KeyError:
        raise KeyError(f"unknown recipe {name!r}; available: {', '.join(sorted(RECIPES))}") from None
