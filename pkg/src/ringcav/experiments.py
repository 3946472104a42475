"""Experiment runners behind the command line.

Each runner turns a validated :class:`ExperimentConfig` into a
:class:`RunResult`; :func:`write_result` serializes it. Outputs are a pure
function of the configuration, so reruns are byte-identical.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import analysis, gaussian, mcwf, models
from .config import SCHEMA_VERSION, ExperimentConfig
from .errors import ConfigError, RegimeError
from .hilbert import (
    DensityMatrix,
    SparseOperator,
    StateVector,
    annihilation_operator,
    boundary_leakage,
    embed,
    partial_trace,
)

SUMMARY_KEYS = (
    "steady_cp",
    "steady_cp_stderr",
    "steady_cp_lyapunov",
    "steady_cp_analytic",
    "steady_en",
    "heralded_cp",
    "heralded_cp_stderr",
    "heralded_cp_spread",
    "heralded_en",
    "g2_zero",
    "n_photon_steady",
    "gamma_plus",
    "gamma_minus",
    "tau",
    "upsilon",
    "max_en",
    "t_max_en",
    "first_jump_time",
    "first_jump_en",
    "first_jump_cp",
    "photon_factor",
    "n_jumps_mean",
    "max_leakage",
    "leakage_ok",
    "max_abs_z",
)


@dataclass
class RunResult:
    """Everything a run writes, before formatting."""

    timeseries: Dict[str, np.ndarray] = field(default_factory=dict)
    stderr: Dict[str, np.ndarray] = field(default_factory=dict)
    jumps: Optional[List[dict]] = None
    snapshots: Dict[str, np.ndarray] = field(default_factory=dict)
    tables: Dict[str, tuple] = field(default_factory=dict)
    summary: Dict[str, object] = field(default_factory=dict)


def fmt(x) -> str:
    """17 significant digits; NaN (an undefined quantity) is written as 'undefined'."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "undefined"
    return format(x, ".17g")


def _json_value(x):
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not np.isfinite(x):
        return None
    return float(format(x, ".17g"))


def time_grid(cfg: ExperimentConfig) -> np.ndarray:
    n = cfg.numerics
    return np.linspace(n.t_start, n.t_end, n.n_steps + 1)


def _model_kwargs(cfg: ExperimentConfig) -> dict:
    d = cfg.model.model_dump()
    d.pop("kind")
    return d


def ring_params(cfg: ExperimentConfig) -> models.RingParams:
    return models.RingParams(**_model_kwargs(cfg))


def oscillator_params(cfg: ExperimentConfig) -> models.OscillatorParams:
    return models.OscillatorParams(**_model_kwargs(cfg))


def _rates(p: models.OscillatorParams, summary: dict):
    summary["upsilon"] = gaussian.effective_coupling_upsilon(p)
    summary["steady_cp_analytic"] = gaussian.analytic_cp(p.omega, p.kappa, p.delta_c)
    try:
        gp, gm, tau = gaussian.stokes_rates(p)
    except RegimeError:
        return None
    summary.update(gamma_plus=gp, gamma_minus=gm, tau=tau)
    return tau


def _select(available: Dict[str, Callable], requested: List[str], default: List[str]) -> List[str]:
    names = requested or default
    unknown = [n for n in names if n not in available]
    if unknown:
        raise ConfigError(f"unknown observables {unknown}; available: {sorted(available)}")
    return names


# ---------------------------------------------------------------- ring model

def _ring_setup(cfg: ExperimentConfig):
    n = cfg.numerics
    params = ring_params(cfg)
    space = models.ring_space(n.momentum_cutoff, n.fock_cutoff)
    H = models.build_ring_hamiltonian(params, space)
    channels = [mcwf.cavity_decay(space, params.kappa)]
    psi0 = models.initial_state_two_wells(params, space, n.well_offset)
    return params, space, H, channels, psi0


def _leakage(psi: StateVector) -> float:
    return max(boundary_leakage(psi))


def _trajectory_cp(psi: StateVector) -> float:
    cp = analysis.momentum_correlation(psi).cp
    return np.nan if cp is None else cp


def _particle_en(psi: StateVector) -> float:
    return analysis.particle_log_negativity(psi)


def _moment_observables(space, jump: Optional[SparseOperator]) -> dict:
    a = embed(annihilation_operator(space.factors[-1]), space, len(space) - 1)
    ad = a.dag()
    moments = analysis.momentum_moment_operators(space)
    obs = {"n_photon": ad @ a, "n2_photon": ad @ ad @ a @ a}
    obs.update(moments)
    if jump is not None:
        her = analysis.heralded_moment_operators(moments, jump)
        her.pop("weight")
        obs.update({f"herald_{k}": v for k, v in her.items()})
    return obs, a


def _snapshot_name(prefix: str, t: float) -> str:
    return f"{prefix}_t{fmt(t)}"


def run_ring_trajectory(cfg: ExperimentConfig) -> RunResult:
    n = cfg.numerics
    _, space, H, channels, psi0 = _ring_setup(cfg)
    a = embed(annihilation_operator(space.factors[2]), space, 2)
    available = {"n_photon": a.dag() @ a, "cp": _trajectory_cp, "en": _particle_en, "leakage": _leakage}
    names = _select(available, cfg.outputs.observables, ["n_photon", "cp", "en", "leakage"])
    obs = {k: available[k] for k in names}
    if "leakage" not in obs:
        obs["leakage"] = _leakage
    grid = time_grid(cfg)
    snaps = {"rho": mcwf.reduced_state_snapshot((0, 1))} if cfg.outputs.snapshot_times else None
    seed = mcwf.derive_seed(n.base_seed, 0)
    rec = mcwf.evolve_trajectory(H, channels, psi0, grid, seed, observables=obs, snapshots=snaps,
                                 snapshot_times=cfg.outputs.snapshot_times, method=n.method, rtol=n.rtol,
                                 atol=n.atol, jump_observables={"n_photon": available["n_photon"],
                                                                "cp": _trajectory_cp, "en": _particle_en})
    res = RunResult()
    for k in names:
        res.timeseries[k] = rec.observables[k]
        res.stderr[k] = np.zeros_like(grid)
    res.jumps = [dict(trajectory=0, t=t, **{k: rec.jump_observables[k][j] for k in ("n_photon", "cp", "en")})
                 for j, t in enumerate(rec.jump_times)]
    sub = space.subspace((0, 1))
    for s, t in enumerate(rec.snapshot_times):
        res.snapshots[_snapshot_name("trajectory", t)] = analysis.momentum_distribution(
            DensityMatrix(sub, rec.snapshots["rho"][s], validate=False))
    leak = float(rec.observables["leakage"].max())
    s = res.summary
    s.update(max_leakage=leak, leakage_ok=leak < n.leakage_threshold, n_jumps_mean=rec.n_jumps)
    if "en" in rec.observables:
        k = int(np.argmax(rec.observables["en"]))
        s.update(max_en=rec.observables["en"][k], t_max_en=grid[k])
    if rec.n_jumps:
        s.update(first_jump_time=rec.jump_times[0], first_jump_en=rec.jump_observables["en"][0],
                 first_jump_cp=rec.jump_observables["cp"][0])
    return res


def ring_ensemble_record(cfg: ExperimentConfig):
    """Run the ring-model ensemble of a config and return the raw record.

    Observables per trajectory: photon number and its second factorial
    moment, momentum moments, heralded momentum moments and boundary
    leakage. Jumps additionally record the trajectory's C_p and particle
    entanglement right after each detection.
    """
    n = cfg.numerics
    _, space, H, channels, psi0 = _ring_setup(cfg)
    obs, a = _moment_observables(space, None)
    her, _ = _moment_observables(space, embed(annihilation_operator(space.factors[2]), space, 2))
    obs.update({k: v for k, v in her.items() if k.startswith("herald_")})
    obs["leakage"] = _leakage
    snaps = None
    if cfg.outputs.snapshot_times:
        snaps = {"rho": mcwf.reduced_state_snapshot((0, 1)), "herald": mcwf.heralded_snapshot(a, (0, 1))}
    grid = time_grid(cfg)
    rec = mcwf.run_ensemble(H, channels, psi0, grid, n.n_traj, n.base_seed, observables=obs, snapshots=snaps,
                            snapshot_times=cfg.outputs.snapshot_times, method=n.method, rtol=n.rtol,
                            atol=n.atol, workers=n.workers,
                            jump_observables={"cp": _trajectory_cp, "en": _particle_en})
    return rec, space


def _ratio(means):
    with np.errstate(invalid="ignore", divide="ignore"):
        return means[0] / means[1] ** 2


def run_ring_ensemble(cfg: ExperimentConfig) -> RunResult:
    rec, space = ring_ensemble_record(cfg)
    return summarize_ring_ensemble(cfg, rec, space)


def summarize_ring_ensemble(cfg: ExperimentConfig, rec, space) -> RunResult:
    n = cfg.numerics
    per = rec.per_trajectory
    grid = rec.times
    res = RunResult()
    cp, cp_err = analysis.ensemble_correlation(per)
    hcp, hcp_err = analysis.ensemble_correlation({k: per[f"herald_{k}"] for k in analysis.MOMENT_NAMES},
                                                 weight=per["n_photon"])
    g2, g2_err = analysis.jackknife(_ratio, [per["n2_photon"], per["n_photon"]])
    leak_max = per["leakage"].max(axis=0)
    columns = {
        "n_photon": (rec.mean["n_photon"], rec.stderr["n_photon"]),
        "cp": (cp, cp_err),
        "herald_cp": (hcp, hcp_err),
        "g2": (g2, g2_err),
        "leakage_max": (leak_max, np.zeros_like(leak_max)),
    }
    names = _select(columns, cfg.outputs.observables, list(columns))
    for k in names:
        res.timeseries[k], res.stderr[k] = columns[k]
    res.jumps = []
    for i, tr in enumerate(rec.trajectories):
        for j, t in enumerate(tr.jump_times):
            res.jumps.append(dict(trajectory=i, t=t, cp=tr.jump_observables["cp"][j],
                                  en=tr.jump_observables["en"][j]))
    sub = space.subspace((0, 1))
    s = res.summary
    for idx, t in enumerate(rec.snapshot_times):
        rho = rec.density_matrix("rho", idx, sub)
        res.snapshots[_snapshot_name("ensemble", t)] = analysis.momentum_distribution(rho)
        k = int(np.argmin(np.abs(grid - t)))
        num = rec.snapshots["herald"][idx]
        w = rec.mean["n_photon"][k]
        if w > analysis.HERALD_MIN_WEIGHT:
            m = num / w
            rho_j = DensityMatrix(sub, 0.5 * (m + m.conj().T))
            res.snapshots[_snapshot_name("heralded", t)] = analysis.momentum_distribution(rho_j)
            if idx == len(rec.snapshot_times) - 1:
                s["heralded_en"] = analysis.log_negativity(rho_j)
                s["steady_en"] = analysis.log_negativity(rho)
    late = grid >= 0.5 * (grid[0] + grid[-1])
    leak = float(per["leakage"].max())
    first_en = [tr.jump_observables["en"][0] for tr in rec.trajectories if tr.n_jumps]
    first_cp = [tr.jump_observables["cp"][0] for tr in rec.trajectories if tr.n_jumps]
    s.update(
        steady_cp=cp[-1], steady_cp_stderr=cp_err[-1],
        heralded_cp=hcp[-1], heralded_cp_stderr=hcp_err[-1],
        heralded_cp_spread=float(np.nanmax(hcp[late]) - np.nanmin(hcp[late])),
        g2_zero=g2[-1], n_photon_steady=rec.mean["n_photon"][-1],
        n_jumps_mean=float(np.mean([tr.n_jumps for tr in rec.trajectories])),
        max_leakage=leak, leakage_ok=leak < n.leakage_threshold,
    )
    if first_en:
        s.update(first_jump_en=float(np.mean(first_en)), first_jump_cp=float(np.nanmean(first_cp)),
                 first_jump_time=float(np.mean([tr.jump_times[0] for tr in rec.trajectories if tr.n_jumps])))
    return res


# ---------------------------------------------------------- linearized model

def _linearized_setup(cfg: ExperimentConfig):
    n = cfg.numerics
    p = oscillator_params(cfg)
    space = models.oscillator_space(n.particle_cutoff, n.field_cutoff)
    H = models.build_linearized_hamiltonian(p, space)
    channels = [mcwf.cavity_decay(space, p.kappa)]
    psi0 = StateVector.basis_state(space, [0, 0, 0])
    return p, space, H, channels, psi0


def master_equation_observables(rhos: List[DensityMatrix]) -> Dict[str, np.ndarray]:
    """Photon number and C_p along a list of density matrices."""
    space = rhos[0].space
    obs, _ = _moment_observables(space, None)
    vals = {k: np.array([(O.matrix.multiply(r.matrix.T)).sum().real for r in rhos]) for k, O in obs.items()}
    cp = analysis._cp_from_means([vals[k] for k in analysis.MOMENT_NAMES])
    return {"n_photon": vals["n_photon"], "cp": cp}


def run_linearized_ensemble(cfg: ExperimentConfig) -> RunResult:
    n = cfg.numerics
    p, space, H, channels, psi0 = _linearized_setup(cfg)
    obs, _ = _moment_observables(space, None)
    grid = time_grid(cfg)
    rec = mcwf.run_ensemble(H, channels, psi0, grid, n.n_traj, n.base_seed, observables=obs, method=n.method,
                            rtol=n.rtol, atol=n.atol, workers=n.workers)
    per = rec.per_trajectory
    cp, cp_err = analysis.ensemble_correlation(per)
    res = RunResult()
    res.timeseries["n_photon"], res.stderr["n_photon"] = rec.mean["n_photon"], rec.stderr["n_photon"]
    res.timeseries["cp"], res.stderr["cp"] = cp, cp_err
    res.jumps = [dict(trajectory=i, t=t) for i, tr in enumerate(rec.trajectories) for t in tr.jump_times]
    s = res.summary
    _rates(p, s)
    s.update(steady_cp=cp[-1], steady_cp_stderr=cp_err[-1], n_photon_steady=rec.mean["n_photon"][-1],
             n_jumps_mean=float(np.mean([tr.n_jumps for tr in rec.trajectories])))
    if n.compare_master_equation:
        me = master_equation_observables(
            mcwf.integrate_master_equation(H, channels, psi0.density_matrix(), grid, rtol=n.rtol, atol=n.atol))
        zmax = 0.0
        for k in ("n_photon", "cp"):
            res.timeseries[f"me_{k}"] = me[k]
            res.stderr[f"me_{k}"] = np.zeros_like(grid)
            z = z_scores(res.timeseries[k], res.stderr[k], me[k])
            zmax = max(zmax, float(np.nanmax(np.abs(z))))
        s["max_abs_z"] = zmax
    return res


def z_scores(mean: np.ndarray, stderr: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """(mean - reference)/stderr; points with zero error count as 0 if they agree exactly, else inf."""
    diff = np.asarray(mean) - np.asarray(reference)
    out = np.empty_like(diff)
    zero = stderr <= 0
    with np.errstate(invalid="ignore", divide="ignore"):
        out[~zero] = diff[~zero] / stderr[~zero]
    out[zero] = np.where(np.abs(diff[zero]) <= 1e-12, 0.0, np.inf)
    return out


def linearized_steady_results(cfg: ExperimentConfig):
    """Steady state of the linearized master equation and its heralded counterpart.

    Returns the summary, the particle states before and after a detection
    and the full steady state.
    """
    n = cfg.numerics
    p, space, H, channels, _ = _linearized_setup(cfg)
    summary: dict = {}
    tau = _rates(p, summary)
    if tau is None:
        raise RegimeError("no steady state in the heating regime")
    method = n.method if n.method in ("implicit", "rk") else "implicit"
    rho = mcwf.steady_state(H, channels, tau, method=method)
    a = embed(annihilation_operator(space.factors[2]), space, 2)
    rho_p = partial_trace(rho, (0, 1))
    rho_j = analysis.conditional_density_matrix(rho, a)
    rho_jp = partial_trace(rho_j, (0, 1))
    cov = gaussian.steady_state_covariance(gaussian.build_drift_diffusion(p))
    summary.update(
        steady_cp=analysis.momentum_correlation(rho_p).cp,
        steady_cp_lyapunov=cov.momentum_correlation(),
        steady_en=analysis.log_negativity(rho_p),
        n_photon_steady=(a.dag() @ a).matrix.multiply(rho.matrix.T).sum().real,
        g2_zero=analysis.g2_zero(rho, a),
        heralded_cp=analysis.momentum_correlation(rho_jp).cp,
        heralded_en=analysis.log_negativity(rho_jp),
    )
    return summary, rho_p, rho_jp, rho


def run_linearized_steady(cfg: ExperimentConfig, snapshots: bool = False) -> RunResult:
    summary, rho_p, rho_jp, _ = linearized_steady_results(cfg)
    res = RunResult(summary=summary)
    if snapshots:
        d = cfg.numerics.particle_cutoff
        res.snapshots["steady_fock"] = np.clip(np.real(np.diagonal(rho_p.matrix)), 0, None).reshape(d, d)
        res.snapshots["heralded_fock"] = np.clip(np.real(np.diagonal(rho_jp.matrix)), 0, None).reshape(d, d)
    return res


# ------------------------------------------------------------ Gaussian model

def _gaussian_method(cfg: ExperimentConfig) -> str:
    m = cfg.numerics.method
    if m not in ("rk", "exact"):
        raise ConfigError(f"gaussian experiments support methods 'rk' and 'exact', got {m!r}")
    return m


def run_gaussian_evolve(cfg: ExperimentConfig) -> RunResult:
    p = oscillator_params(cfg)
    dd = gaussian.build_drift_diffusion(p)
    grid = time_grid(cfg)
    states = gaussian.evolve_covariance(dd, gaussian.CovarianceState.vacuum(), grid, method=_gaussian_method(cfg))
    V = np.stack([s.V for s in states])
    en = np.array([gaussian.gaussian_log_negativity(s) for s in states])
    columns = {
        "cp": V[:, 1, 3] / np.sqrt(V[:, 1, 1] * V[:, 3, 3]),
        "var_p1": V[:, 1, 1],
        "cov_p12": V[:, 1, 3],
        "var_x1": V[:, 0, 0],
        "cov_x12": V[:, 0, 2],
        "n_photon": np.array([s.photon_number() for s in states]),
        "en": en,
        "simon": np.array([float(gaussian.simon_criterion(s)) for s in states]),
    }
    names = _select(columns, cfg.outputs.observables, list(columns))
    res = RunResult()
    for k in names:
        res.timeseries[k] = columns[k]
        res.stderr[k] = np.zeros_like(grid)
    s = res.summary
    _rates(p, s)
    k = int(np.argmax(en))
    s.update(max_en=en[k], t_max_en=grid[k], steady_cp=columns["cp"][-1])
    if dd.steady_state_exists:
        ss = gaussian.steady_state_covariance(dd)
        s.update(steady_cp_lyapunov=ss.momentum_correlation(), steady_en=gaussian.gaussian_log_negativity(ss),
                 n_photon_steady=ss.photon_number())
    return res


def run_gaussian_steady(cfg: ExperimentConfig) -> RunResult:
    p = oscillator_params(cfg)
    ss = gaussian.steady_state_covariance(gaussian.build_drift_diffusion(p))
    res = RunResult()
    labels = ["x1", "p1", "x2", "p2", "X", "P"]
    res.tables["covariance.csv"] = (["row"] + labels, [[labels[i]] + list(ss.V[i]) for i in range(6)])
    s = res.summary
    _rates(p, s)
    s.update(steady_cp_lyapunov=ss.momentum_correlation(), steady_en=gaussian.gaussian_log_negativity(ss),
             n_photon_steady=ss.photon_number())
    return res


def run_gaussian_sweep(cfg: ExperimentConfig) -> RunResult:
    sweep = cfg.numerics.sweep
    base = _model_kwargs(cfg)
    rows = []
    for v in sweep.values:
        p = models.OscillatorParams(**{**base, sweep.parameter: v})
        ss = gaussian.steady_state_covariance(gaussian.build_drift_diffusion(p))
        gp, gm, tau = gaussian.stokes_rates(p)
        rows.append([v, ss.momentum_correlation(), gaussian.analytic_cp(p.omega, p.kappa, p.delta_c), gp, gm, tau,
                     gaussian.effective_coupling_upsilon(p), gaussian.gaussian_log_negativity(ss),
                     ss.V[1, 3], ss.V[1, 1], ss.V[0, 2], ss.V[0, 0]])
    header = [sweep.parameter, "cp_lyapunov", "cp_analytic", "gamma_plus", "gamma_minus", "tau", "upsilon",
              "en", "cov_p12", "var_p1", "cov_x12", "var_x1"]
    res = RunResult()
    res.tables["sweep.csv"] = (header, rows)
    return res


# ---------------------------------------------------------------- toy model

def run_toy_trajectory(cfg: ExperimentConfig) -> RunResult:
    n = cfg.numerics
    p = oscillator_params(cfg)
    basis = models.scattering_basis(n.toy_cutoff)
    space = basis.space
    H = models.toy_hamiltonian(p, basis)
    L = models.toy_jump_operator(p, basis)
    channels = [mcwf.JumpChannel(L, name="toy")]
    psi0 = StateVector.basis_state(space, [0, 0])
    # radiated photon number |alpha|^2 <X^2> = <L^dagger L>/(2 kappa)
    n_ph = (L.dag() @ L) / (2.0 * p.kappa)

    def en(psi):
        return analysis.log_negativity(psi.density_matrix(), (0,))

    available = {"n_photon": n_ph, "cp": _trajectory_cp, "en": en}
    names = _select(available, cfg.outputs.observables, list(available))
    grid = time_grid(cfg)
    rec = mcwf.run_ensemble(H, channels, psi0, grid, n.n_traj, n.base_seed,
                            observables={k: available[k] for k in names}, method=n.method, rtol=n.rtol, atol=n.atol,
                            workers=n.workers, jump_observables=available)
    res = RunResult()
    for k in names:
        res.timeseries[k] = rec.mean[k]
        res.stderr[k] = rec.stderr[k]
    res.jumps = [dict(trajectory=i, t=t, **{k: tr.jump_observables[k][j] for k in available})
                 for i, tr in enumerate(rec.trajectories) for j, t in enumerate(tr.jump_times)]
    c0 = basis.from_fock(psi0.amplitudes)
    _, factor = analysis.toy_jump_state(basis, c0, models.toy_field_amplitude(p))
    s = res.summary
    _rates(p, s)
    s.update(photon_factor=factor, n_jumps_mean=float(np.mean([tr.n_jumps for tr in rec.trajectories])))
    first = rec.trajectories[0]
    if first.n_jumps:
        s.update(first_jump_time=first.jump_times[0], first_jump_en=first.jump_observables["en"][0],
                 first_jump_cp=first.jump_observables["cp"][0])
    return res


RUNNERS: Dict[str, Callable[[ExperimentConfig], RunResult]] = {
    "ring-trajectory": run_ring_trajectory,
    "ring-ensemble": run_ring_ensemble,
    "linearized-ensemble": run_linearized_ensemble,
    "linearized-steady": run_linearized_steady,
    "herald": lambda cfg: run_linearized_steady(cfg, snapshots=True),
    "gaussian-evolve": run_gaussian_evolve,
    "gaussian-steady": run_gaussian_steady,
    "gaussian-sweep": run_gaussian_sweep,
    "toy-trajectory": run_toy_trajectory,
}


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    return RUNNERS[cfg.experiment](cfg)


# ------------------------------------------------------------------ output

def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: List[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(x if isinstance(x, str) else fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def recorded_config(cfg: ExperimentConfig) -> dict:
    """Resolved config as written to disk.

    Output location and worker count do not affect results and are left
    out, so reruns elsewhere or at another parallel width are byte-identical.
    """
    d = cfg.to_dict()
    del d["numerics"]["workers"]
    del d["outputs"]["directory"]
    return d


def write_result(cfg: ExperimentConfig, res: RunResult, grid: Optional[np.ndarray] = None) -> List[str]:
    """Write all output files into the configured directory; returns their relative paths."""
    out = Path(cfg.outputs.directory)
    files = []

    def emit(rel: str, text: str):
        _atomic_write(out / rel, text)
        files.append(rel)

    recorded = recorded_config(cfg)
    emit("config.json", json.dumps(recorded, indent=2, sort_keys=True) + "\n")
    if res.timeseries:
        grid = time_grid(cfg) if grid is None else grid
        header = ["t"]
        cols = [grid]
        for k, v in res.timeseries.items():
            header += [k, f"{k}_stderr"]
            cols += [v, res.stderr.get(k, np.zeros_like(v))]
        emit("timeseries.csv", _csv(header, zip(*cols)))
    if res.jumps is not None:
        keys = ["trajectory", "t"] + sorted({k for j in res.jumps for k in j} - {"trajectory", "t"})
        emit("jumps.csv", _csv(keys, ([j.get(k, np.nan) for k in keys] for j in res.jumps)))
    for name, mat in sorted(res.snapshots.items()):
        emit(f"snapshots/{name}.csv", "\n".join(",".join(fmt(x) for x in row) for row in mat) + "\n")
    for name, (header, rows) in sorted(res.tables.items()):
        emit(name, _csv(header, rows))
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "results": {k: _json_value(res.summary.get(k)) for k in SUMMARY_KEYS},
        "files": sorted(files + ["summary.json"]),
        "config": recorded,
    }
    extra = set(res.summary) - set(SUMMARY_KEYS)
    if extra:
        raise AssertionError(f"undocumented summary keys {sorted(extra)}")
    emit("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return files
