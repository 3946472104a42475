"""Quantum-jump trajectories and direct master-equation integration.

The master equation is

    drho/dt = -i[H, rho] + sum_k (L_k rho L_k^dagger - 1/2 {L_k^dagger L_k, rho})

with a single cavity channel L = sqrt(2 kappa) a in the models of this
package. Trajectories follow the standard waiting-time protocol: draw r,
evolve the unnormalized state under H_eff = H - (i/2) sum L^dagger L until
the squared norm falls to r, jump, renormalize, redraw.
"""

from __future__ import annotations

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from ._propagate import make_propagator
from .errors import DimensionError, NumericalError, RingCavError
from .hilbert import (
    DensityMatrix,
    FockSpace,
    SpaceDescriptor,
    SparseOperator,
    StateVector,
    annihilation_operator,
    embed,
    number_operator,
)

log = logging.getLogger(__name__)

DRIFT_TOL = 1e-12
NORM_GROWTH_TOL = 1e-8
JUMP_BISECTION_RTOL = 1e-6
ME_MAX_DIM = 4096
TRACE_DRIFT_TOL = 1e-8

Observable = Union[SparseOperator, Callable[[StateVector], float]]


@dataclass(frozen=True, eq=False)
class JumpChannel:
    """Jump operator L and its non-Hermitian drift -(i/2) L^dagger L."""

    operator: SparseOperator
    drift: Optional[SparseOperator] = None
    name: str = "cavity"

    def __post_init__(self):
        L = self.operator
        expected = (-0.5j) * (L.dag() @ L).matrix
        if self.drift is None:
            object.__setattr__(self, "drift", SparseOperator(L.space, expected))
        else:
            if self.drift.space != L.space:
                raise ValueError("drift and jump operator act on different spaces")
            diff = (self.drift.matrix - expected).tocsr()
            dev = np.abs(diff.data).max() if diff.nnz else 0.0
            if dev > DRIFT_TOL:
                raise ValueError(f"drift inconsistent with jump operator (deviation {dev:.3e})")


def cavity_decay(space: SpaceDescriptor, kappa: float, field_index: int = -1) -> JumpChannel:
    """Photon leakage through the output mirror, L = sqrt(2 kappa) a."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    idx = field_index % len(space)
    f = space.factors[idx]
    if not isinstance(f, FockSpace):
        raise ValueError("the field factor must be a FockSpace")
    return JumpChannel(np.sqrt(2.0 * kappa) * embed(annihilation_operator(f), space, idx), name="cavity")


def photon_number(space: SpaceDescriptor, field_index: int = -1) -> SparseOperator:
    idx = field_index % len(space)
    return embed(number_operator(space.factors[idx]), space, idx)


def effective_hamiltonian(H: SparseOperator, channels: Sequence[JumpChannel]) -> sp.csr_matrix:
    m = H.matrix
    for ch in channels:
        if ch.operator.space != H.space:
            raise ValueError("jump channel and Hamiltonian act on different spaces")
        m = m + ch.drift.matrix
    return sp.csr_matrix(m)


def derive_seed(base_seed: int, index: int) -> int:
    """64-bit seed for trajectory ``index``, a pure function of both inputs.

    Uses numpy's SeedSequence hashing, so nearby (base_seed, index) pairs
    give decorrelated streams and no trajectory depends on scheduling.
    """
    if base_seed < 0 or index < 0:
        raise ValueError("seeds and trajectory indices must be non-negative")
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One quantum-jump trajectory.

    ``observables[name][k]`` is evaluated on the normalized state at
    ``times[k]``; ``jump_observables[name][j]`` right after jump j.
    ``snapshots[name][s]`` holds the array produced at ``snapshot_times[s]``.
    """

    times: np.ndarray
    observables: Dict[str, np.ndarray]
    jump_times: np.ndarray
    jump_channels: np.ndarray
    jump_observables: Dict[str, np.ndarray]
    seed: int
    final_state: Optional[StateVector]
    snapshot_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    snapshots: Dict[str, list] = field(default_factory=dict)

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        if jt.size:
            if np.any(np.diff(jt) <= 0):
                raise ValueError("jump times must be strictly increasing")
            if jt[0] < self.times[0] or jt[-1] > self.times[-1]:
                raise ValueError("jump times outside the time grid")
        for name, v in self.observables.items():
            if len(v) != len(self.times):
                raise ValueError(f"observable {name!r} does not align with the time grid")

    @property
    def n_jumps(self) -> int:
        return int(len(self.jump_times))


@dataclass(frozen=True, eq=False)
class EnsembleRecord:
    """Trajectory-averaged observables with standard errors.

    ``per_trajectory[name]`` is the (n_traj, n_times) array the means were
    reduced from, in trajectory-index order. Snapshot arrays are averaged
    over trajectories. ``trajectories`` keeps each record without its
    snapshot payload.
    """

    n_traj: int
    base_seed: int
    times: np.ndarray
    mean: Dict[str, np.ndarray]
    stderr: Dict[str, np.ndarray]
    per_trajectory: Dict[str, np.ndarray]
    snapshot_times: np.ndarray
    snapshots: Dict[str, list]
    trajectories: tuple

    @property
    def seeds(self) -> list:
        return [t.seed for t in self.trajectories]

    def density_matrix(self, name: str, index: int, space: SpaceDescriptor) -> DensityMatrix:
        """Averaged snapshot as a validated density matrix."""
        m = self.snapshots[name][index]
        return DensityMatrix(space, 0.5 * (m + m.conj().T))


def reduced_state_snapshot(keep: Sequence[int]) -> Callable[[StateVector], np.ndarray]:
    """Snapshot function returning the reduced density matrix over ``keep``."""
    from .hilbert import reduced_density_matrix

    keep = tuple(keep)

    def snap(psi: StateVector) -> np.ndarray:
        return np.array(reduced_density_matrix(psi, keep, validate=False).matrix)

    return snap


def heralded_snapshot(jump: SparseOperator, keep: Sequence[int]) -> Callable[[StateVector], np.ndarray]:
    """Snapshot of the unnormalized reduced state Tr_rest(L|psi><psi|L^dagger).

    Averaging this over trajectories and dividing by the averaged
    <L^dagger L> gives the heralded state of the ensemble.
    """
    from .hilbert import reduced_density_matrix

    keep = tuple(keep)

    def snap(psi: StateVector) -> np.ndarray:
        phi = StateVector(psi.space, jump.matrix @ psi.amplitudes)
        return np.array(reduced_density_matrix(phi, keep, validate=False).matrix)

    return snap


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("time grid must be a non-empty 1-D array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return grid


def _snapshot_indices(grid: np.ndarray, times) -> np.ndarray:
    times = np.asarray(times, dtype=float).reshape(-1)
    idx = np.searchsorted(grid, times)
    out = []
    for t, i in zip(times, idx):
        cand = [j for j in (i - 1, i) if 0 <= j < grid.size]
        j = min(cand, key=lambda j: abs(grid[j] - t))
        if abs(grid[j] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"snapshot time {t} is not on the time grid")
        out.append(j)
    return np.array(out, dtype=int)


def _default_observables(space: SpaceDescriptor) -> Dict[str, Observable]:
    if isinstance(space.factors[-1], FockSpace) and space.factors[-1].cutoff >= 2:
        return {"n_photon": photon_number(space)}
    return {}


class _ObservableSet:
    def __init__(self, space: SpaceDescriptor, observables: Mapping[str, Observable]):
        self.space = space
        self.names = list(observables)
        self.fns = []
        for name, obs in observables.items():
            if isinstance(obs, SparseOperator):
                if obs.space != space:
                    raise ValueError(f"observable {name!r} acts on a different space")
                m = obs.matrix
                self.fns.append(lambda psi, m=m: float(np.vdot(psi, m @ psi).real))
            elif callable(obs):
                self.fns.append(lambda psi, f=obs: float(f(StateVector(space, psi))))
            else:
                raise TypeError(f"observable {name!r} must be a SparseOperator or a callable")

    def __call__(self, psi: np.ndarray) -> list:
        return [f(psi) for f in self.fns]


def evolve_trajectory(
    H: SparseOperator,
    channels: Sequence[JumpChannel],
    psi0: StateVector,
    grid,
    seed: int,
    observables: Optional[Mapping[str, Observable]] = None,
    snapshots: Optional[Mapping[str, Callable[[StateVector], np.ndarray]]] = None,
    snapshot_times=(),
    method: str = "rk",
    rtol: float = 1e-8,
    atol: float = 1e-10,
    propagator=None,
    keep_final_state: bool = True,
    jump_observables: Optional[Mapping[str, Observable]] = None,
) -> TrajectoryRecord:
    """Evolve one quantum-jump trajectory.

    Parameters
    ----------
    H : Hermitian Hamiltonian.
    channels : jump channels; an empty list gives unitary evolution.
    psi0 : normalized initial state.
    grid : strictly increasing output times; the first entry is the start time.
    seed : seed for ``numpy.random.default_rng``.
    observables : name -> operator (expectation value) or callable on the
        normalized state. Defaults to the photon number of the last factor.
    snapshots : name -> callable returning an array, evaluated at
        ``snapshot_times`` (which must lie on the grid).
    method : ``"rk"`` (adaptive DOP853) or ``"spectral"`` (eigendecomposition).
    propagator : prebuilt propagator, shared across trajectories by
        :func:`run_ensemble`; overrides ``method``.
    jump_observables : evaluated on the renormalized state right after each
        jump; defaults to ``observables``.
    """
    if not H.hermitian:
        raise ValueError("Hamiltonian must be flagged hermitian")
    if psi0.space != H.space:
        raise ValueError("initial state and Hamiltonian act on different spaces")
    if abs(psi0.norm_squared() - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    grid = _check_grid(grid)
    space = H.space
    obs = _ObservableSet(space, _default_observables(space) if observables is None else observables)
    jobs = obs if jump_observables is None else _ObservableSet(space, jump_observables)
    snapshots = dict(snapshots or {})
    snap_idx = _snapshot_indices(grid, snapshot_times) if snapshots else np.zeros(0, dtype=int)
    snap_at = {}
    for s, k in enumerate(snap_idx):
        snap_at.setdefault(int(k), []).append(s)
    snap_out = {name: [None] * len(snap_idx) for name in snapshots}

    if propagator is None:
        H_eff = effective_hamiltonian(H, channels)
        e0 = float(np.vdot(psi0.amplitudes, H.matrix @ psi0.amplitudes).real)
        propagator = make_propagator(method, H_eff, rtol=rtol, atol=atol, energy_shift=e0)
    jump_ops = [ch.operator.matrix for ch in channels]

    rng = np.random.default_rng(seed)

    def draw():
        r = rng.random()
        while r == 0.0:
            r = rng.random()
        return r

    values = np.empty((len(obs.names), grid.size))
    jump_times, jump_channels, jump_values = [], [], []

    def record(k, psi_normed):
        values[:, k] = obs(psi_normed)
        for s in snap_at.get(k, ()):
            state = StateVector(space, psi_normed)
            for name, fn in snapshots.items():
                snap_out[name][s] = np.asarray(fn(state))

    psi = np.array(psi0.amplitudes, dtype=complex)
    t = grid[0]
    r = draw() if jump_ops else 0.0
    record(0, psi)

    for k in range(1, grid.size):
        target = grid[k]
        while t < target:
            propagator.start(t, psi, target)
            n_prev = float(np.vdot(psi, psi).real)
            jumped = False
            while True:
                t0, t1, psi1, interp = propagator.step()
                n1 = float(np.vdot(psi1, psi1).real)
                if n1 > n_prev * (1.0 + NORM_GROWTH_TOL):
                    raise NumericalError(
                        f"norm grew from {n_prev!r} to {n1!r} over [{t0:.6g}, {t1:.6g}]; "
                        "the generator is not dissipative")
                if n1 < r:
                    tj, psij = _locate_jump(interp, t0, t1, r)
                    psi, ch = _apply_jump(jump_ops, psij, rng)
                    t = tj
                    jump_times.append(tj)
                    jump_channels.append(ch)
                    jump_values.append(jobs(psi))
                    r = draw()
                    jumped = True
                    break
                psi, t, n_prev = psi1, t1, n1
                if t1 >= target:
                    break
            if jumped:
                continue
        t = target
        record(k, psi / np.sqrt(np.vdot(psi, psi).real))

    final = StateVector(space, psi / np.sqrt(np.vdot(psi, psi).real)) if keep_final_state else None
    jv = np.array(jump_values).reshape(len(jump_values), len(jobs.names))
    return TrajectoryRecord(
        times=grid,
        observables={name: values[i] for i, name in enumerate(obs.names)},
        jump_times=np.array(jump_times, dtype=float),
        jump_channels=np.array(jump_channels, dtype=int),
        jump_observables={name: jv[:, i] for i, name in enumerate(jobs.names)},
        seed=int(seed),
        final_state=final,
        snapshot_times=grid[snap_idx],
        snapshots=snap_out,
    )


def _locate_jump(interp, t0: float, t1: float, r: float):
    """Bisect for the time at which the squared norm equals r."""
    lo, hi = t0, t1
    psi_hi = interp(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        psi_mid = interp(mid)
        n_mid = float(np.vdot(psi_mid, psi_mid).real)
        if abs(n_mid - r) <= JUMP_BISECTION_RTOL * r:
            return mid, psi_mid
        if n_mid > r:
            lo = mid
        else:
            hi, psi_hi = mid, psi_mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(hi)):
            break
    n_hi = float(np.vdot(psi_hi, psi_hi).real)
    if abs(n_hi - r) > JUMP_BISECTION_RTOL * r:
        raise NumericalError(f"jump-time bisection did not converge near t={hi:.6g} (norm {n_hi!r}, target {r!r})")
    return hi, psi_hi


def _apply_jump(jump_ops, psi: np.ndarray, rng):
    phis = [L @ psi for L in jump_ops]
    weights = np.array([np.vdot(p, p).real for p in phis])
    total = weights.sum()
    if not total > 0:
        raise NumericalError("jump requested on a state with zero jump rate")
    ch = int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right"))
    ch = min(ch, len(phis) - 1)
    return phis[ch] / np.sqrt(weights[ch]), ch


_WORKER: dict = {}


def _worker_run(i: int):
    w = _WORKER
    seed = derive_seed(w["base_seed"], i)
    try:
        return evolve_trajectory(seed=seed, **w["kwargs"])
    except RingCavError as exc:
        err = type(exc)(f"trajectory {i} (seed {seed}): {exc}")
        err.trajectory_index = i
        raise err from exc


def run_ensemble(
    H: SparseOperator,
    channels: Sequence[JumpChannel],
    psi0: StateVector,
    grid,
    n_traj: int,
    base_seed: int,
    observables: Optional[Mapping[str, Observable]] = None,
    snapshots: Optional[Mapping[str, Callable[[StateVector], np.ndarray]]] = None,
    snapshot_times=(),
    method: str = "rk",
    rtol: float = 1e-8,
    atol: float = 1e-10,
    workers: int = 1,
    propagator=None,
    jump_observables: Optional[Mapping[str, Observable]] = None,
) -> EnsembleRecord:
    """Run ``n_traj`` trajectories and average them.

    Trajectory i is seeded with ``derive_seed(base_seed, i)``. Results are
    reduced in index order, so the record does not depend on ``workers``.
    Parallel runs use forked worker processes.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if propagator is None:
        H_eff = effective_hamiltonian(H, channels)
        e0 = float(np.vdot(psi0.amplitudes, H.matrix @ psi0.amplitudes).real)
        propagator = make_propagator(method, H_eff, rtol=rtol, atol=atol, energy_shift=e0)
    _WORKER.clear()
    _WORKER.update(base_seed=base_seed, kwargs=dict(
        H=H, channels=channels, psi0=psi0, grid=grid, observables=observables, snapshots=snapshots,
        snapshot_times=snapshot_times, propagator=propagator, jump_observables=jump_observables))

    if workers > 1 and n_traj > 1:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            records = _reduce(pool.map(_worker_run, range(n_traj)), n_traj)
    else:
        records = _reduce(map(_worker_run, range(n_traj)), n_traj)
    _WORKER.clear()
    kept, sums = records
    times = kept[0].times
    names = list(kept[0].observables)
    per = {name: np.vstack([rec.observables[name] for rec in kept]) for name in names}
    mean = {name: v.mean(axis=0) for name, v in per.items()}
    if n_traj > 1:
        stderr = {name: v.std(axis=0, ddof=1) / np.sqrt(n_traj) for name, v in per.items()}
    else:
        stderr = {name: np.zeros_like(v[0]) for name, v in per.items()}
    snaps = {name: [s / n_traj for s in lst] for name, lst in sums.items()}
    return EnsembleRecord(n_traj=n_traj, base_seed=int(base_seed), times=times, mean=mean, stderr=stderr,
                          per_trajectory=per, snapshot_times=kept[0].snapshot_times, snapshots=snaps,
                          trajectories=tuple(kept))


def _reduce(records, n_traj):
    kept = []
    sums: Dict[str, list] = {}
    every = max(1, n_traj // 10)
    for i, rec in enumerate(records):
        if (i + 1) % every == 0 or i + 1 == n_traj:
            log.info("trajectory %d/%d done (%d jumps)", i + 1, n_traj, rec.n_jumps)
        for name, lst in rec.snapshots.items():
            if name not in sums:
                sums[name] = [np.array(a, dtype=complex) for a in lst]
            else:
                for acc, a in zip(sums[name], lst):
                    acc += a
        kept.append(TrajectoryRecord(times=rec.times, observables=rec.observables, jump_times=rec.jump_times,
                                     jump_channels=rec.jump_channels, jump_observables=rec.jump_observables,
                                     seed=rec.seed, final_state=rec.final_state,
                                     snapshot_times=rec.snapshot_times, snapshots={}))
    return kept, sums


def _lindblad_rhs(H_eff: sp.csr_matrix, jump_ops: list, d: int):
    def rhs(t, y):
        rho = y.reshape(d, d)
        Y = -1j * (H_eff @ rho)
        out = Y + Y.conj().T
        for L in jump_ops:
            Z = L @ rho
            out += (L @ Z.conj().T).conj().T
        return out.reshape(-1)
    return rhs


def integrate_master_equation(
    H: SparseOperator,
    channels: Sequence[JumpChannel],
    rho0: DensityMatrix,
    grid,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_dim: int = ME_MAX_DIM,
) -> list:
    """Integrate the Lindblad equation with DOP853 and return rho on the grid.

    Output states are symmetrized; a trace drift above 1e-8 is renormalized
    away and logged as a warning.
    """
    if rho0.space != H.space:
        raise ValueError("initial state and Hamiltonian act on different spaces")
    d = H.space.total_dim
    if d > max_dim:
        raise DimensionError(f"dimension {d} exceeds the dense master-equation limit {max_dim}")
    grid = _check_grid(grid)
    H_eff = effective_hamiltonian(H, channels)
    jump_ops = [ch.operator.matrix for ch in channels]
    y0 = np.array(rho0.matrix, dtype=complex).reshape(-1)
    if grid.size == 1:
        return [rho0]
    sol = solve_ivp(_lindblad_rhs(H_eff, jump_ops, d), (grid[0], grid[-1]), y0, method="DOP853",
                    t_eval=grid, rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalError(f"master-equation integration failed: {sol.message}")
    out = []
    for k in range(grid.size):
        rho = sol.y[:, k].reshape(d, d)
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_DRIFT_TOL:
            log.warning("trace drift %.3e at t=%.6g renormalized", tr - 1.0, grid[k])
        out.append(DensityMatrix(H.space, rho / tr))
    return out


def vectorized_liouvillian(H: SparseOperator, channels: Sequence[JumpChannel]) -> sp.csr_matrix:
    """Superoperator acting on row-major vec(rho), using vec(A rho B) = (A kron B^T) vec(rho)."""
    d = H.space.total_dim
    eye = sp.identity(d, format="csr", dtype=complex)
    Hm = H.matrix
    Lv = -1j * (sp.kron(Hm, eye) - sp.kron(eye, Hm.T))
    for ch in channels:
        L = ch.operator.matrix
        K = (L.conj().T @ L).tocsr()
        Lv = Lv + sp.kron(L, L.conj()) - 0.5 * sp.kron(K, eye) - 0.5 * sp.kron(eye, K.T)
    return sp.csr_matrix(Lv)


def _trace_norm(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T))).sum())


def steady_state(
    H: SparseOperator,
    channels: Sequence[JumpChannel],
    tau: float,
    rho0: Optional[DensityMatrix] = None,
    method: str = "implicit",
    tol: float = 1e-6,
    min_time: float = 10.0,
    max_time: float = 50.0,
    max_dim: int = ME_MAX_DIM,
) -> DensityMatrix:
    """Relax the master equation to its stationary state.

    Time advances in steps of tau/10, where tau is the relaxation time (for
    the linearized model, from :func:`ringcav.gaussian.stokes_rates`).
    Convergence requires t >= min_time*tau and a trace-norm change below
    ``tol`` over the last step; reaching max_time*tau raises.

    ``method="implicit"`` takes backward-Euler steps with one sparse LU
    factorization. Its fixed point is exactly the null vector of the
    Liouvillian, so the step size affects only the approach, not the
    answer. ``method="rk"`` integrates with DOP853 instead.
    """
    if not tau > 0 or not np.isfinite(tau):
        raise ValueError("relaxation time tau must be positive and finite")
    d = H.space.total_dim
    if d > max_dim:
        raise DimensionError(f"dimension {d} exceeds the dense master-equation limit {max_dim}")
    if rho0 is None:
        vac = np.zeros((d, d), dtype=complex)
        vac[0, 0] = 1.0
        rho0 = DensityMatrix(H.space, vac)
    h = tau / 10.0
    n_min = int(round(min_time * 10))
    n_max = int(round(max_time * 10))
    rho = np.array(rho0.matrix, dtype=complex)

    if method == "implicit":
        Lv = vectorized_liouvillian(H, channels)
        # only matrix elements connected to the initial support ever get populated
        _, labels = connected_components(abs(Lv) + sp.identity(d * d), directed=False)
        seeds = np.flatnonzero(rho.reshape(-1))
        sub = np.flatnonzero(np.isin(labels, np.unique(labels[seeds])))
        A = (sp.identity(sub.size, format="csc") - h * Lv[sub][:, sub]).tocsc()
        lu = splu(A, permc_spec="MMD_AT_PLUS_A")

        def advance(r):
            x = np.zeros(d * d, dtype=complex)
            x[sub] = lu.solve(r.reshape(-1)[sub])
            return x.reshape(d, d)
    elif method == "rk":
        H_eff = effective_hamiltonian(H, channels)
        rhs = _lindblad_rhs(H_eff, [ch.operator.matrix for ch in channels], d)

        def advance(r):
            sol = solve_ivp(rhs, (0.0, h), r.reshape(-1), method="DOP853", rtol=1e-8, atol=1e-10)
            if not sol.success:
                raise NumericalError(f"master-equation integration failed: {sol.message}")
            return sol.y[:, -1].reshape(d, d)
    else:
        raise ValueError(f"unknown steady-state method {method!r}")

    diff = np.inf
    for step in range(1, n_max + 1):
        new = advance(rho)
        new = 0.5 * (new + new.conj().T)
        new /= np.trace(new).real
        diff = _trace_norm(new - rho)
        rho = new
        if step >= n_min and diff < tol:
            log.info("steady state reached at t=%.6g (change %.3e)", step * h, diff)
            return DensityMatrix(H.space, rho)
    raise NumericalError(f"no convergence to a steady state by t={max_time}*tau; last change {diff:.3e}")
