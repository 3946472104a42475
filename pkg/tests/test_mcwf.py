import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ringcav.analysis import log_negativity, momentum_correlation
from ringcav.errors import DimensionError
from ringcav.hilbert import (
    FockSpace,
    MomentumLattice,
    SpaceDescriptor,
    SparseOperator,
    StateVector,
    annihilation_operator,
    embed,
    expectation,
    number_operator,
)
from ringcav.mcwf import (
    JumpChannel,
    TrajectoryRecord,
    cavity_decay,
    derive_seed,
    effective_hamiltonian,
    evolve_trajectory,
    integrate_master_equation,
    photon_number,
    reduced_state_snapshot,
    run_ensemble,
    steady_state,
    vectorized_liouvillian,
)
from ringcav.models import (
    OscillatorParams,
    build_linearized_hamiltonian,
    build_toy_generator,
    oscillator_space,
    scattering_basis,
    toy_hamiltonian,
    toy_jump_operator,
)

KAPPA = 1.5
FIELD = SpaceDescriptor.of(FockSpace(3))
TRANSIENT = OscillatorParams(omega=30.0, g=5.0, delta_c=-25.0, kappa=5.0)


def zero_hamiltonian(space):
    return SparseOperator(space, np.zeros((space.total_dim,) * 2), hermitian=True)


def small_linearized(cutoffs=(3, 3, 3)):
    space = oscillator_space(cutoffs[0], cutoffs[2])
    H = build_linearized_hamiltonian(TRANSIENT, space)
    psi0 = StateVector.basis_state(space, [0, 0, 0])
    return space, H, [cavity_decay(space, TRANSIENT.kappa)], psi0


class TestChannels:
    def test_drift(self):
        ch = cavity_decay(FIELD, KAPPA)
        n = number_operator(FockSpace(3)).toarray()
        assert np.allclose(ch.drift.toarray(), -1j * KAPPA * n)

    def test_inconsistent_drift_rejected(self):
        ch = cavity_decay(FIELD, KAPPA)
        with pytest.raises(ValueError):
            JumpChannel(ch.operator, drift=2.0 * ch.drift)

    def test_field_must_be_fock(self):
        with pytest.raises(ValueError):
            cavity_decay(SpaceDescriptor.of(FockSpace(2), MomentumLattice(2)), 1.0)


class TestSeeds:
    def test_deterministic_and_distinct(self):
        seeds = [derive_seed(7, i) for i in range(200)]
        assert seeds == [derive_seed(7, i) for i in range(200)]
        assert len(set(seeds)) == 200
        assert derive_seed(7, 0) != derive_seed(8, 0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            derive_seed(-1, 0)


class TestTrajectory:
    def test_unitary_without_channels(self):
        space, H, _, psi0 = small_linearized()
        grid = np.linspace(0, 0.5, 11)
        for method in ("rk", "spectral"):
            rec = evolve_trajectory(H, [], psi0, grid, seed=0, method=method, rtol=1e-10, atol=1e-12)
            assert rec.n_jumps == 0
            exact = expm(-1j * H.toarray() * grid[-1]) @ psi0.amplitudes
            assert abs(np.linalg.norm(exact) - 1) < 1e-8
            assert np.allclose(rec.final_state.amplitudes, exact, atol=1e-8)

    def test_empty_cavity_survival(self):
        # the no-jump probability to t = 1/(2 kappa) is exp(-1)
        psi0 = StateVector.basis_state(FIELD, [1])
        grid = np.array([0.0, 0.5 / KAPPA])
        rec = run_ensemble(zero_hamiltonian(FIELD), [cavity_decay(FIELD, KAPPA)], psi0, grid, 2000, base_seed=11)
        survived = rec.per_trajectory["n_photon"][:, -1]
        assert set(np.round(survived, 12)) <= {0.0, 1.0}
        frac = survived.mean()
        err = survived.std(ddof=1) / np.sqrt(len(survived))
        assert abs(frac - np.exp(-1)) < 3 * err

    def test_jump_times_recorded(self):
        psi0 = StateVector.basis_state(FIELD, [2])
        rec = evolve_trajectory(zero_hamiltonian(FIELD), [cavity_decay(FIELD, KAPPA)], psi0,
                                np.linspace(0, 20, 5), seed=3)
        assert rec.n_jumps == 2
        assert np.all(np.diff(rec.jump_times) > 0)
        assert rec.observables["n_photon"][-1] == pytest.approx(0)

    def test_rk_matches_spectral(self):
        space, H, ch, psi0 = small_linearized()
        grid = np.linspace(0, 2, 21)
        a = evolve_trajectory(H, ch, psi0, grid, seed=5, method="rk", rtol=1e-10, atol=1e-12)
        b = evolve_trajectory(H, ch, psi0, grid, seed=5, method="spectral")
        assert a.n_jumps == b.n_jumps > 0
        assert np.allclose(a.jump_times, b.jump_times, rtol=1e-4)
        assert np.allclose(a.observables["n_photon"], b.observables["n_photon"], atol=1e-4)

    def test_record_validation(self):
        t = np.linspace(0, 1, 3)
        with pytest.raises(ValueError):
            TrajectoryRecord(t, {}, np.array([0.5, 0.2]), np.zeros(2, int), {}, 0, None)
        with pytest.raises(ValueError):
            TrajectoryRecord(t, {}, np.array([1.5]), np.zeros(1, int), {}, 0, None)
        with pytest.raises(ValueError):
            TrajectoryRecord(t, {"x": np.zeros(2)}, np.zeros(0), np.zeros(0, int), {}, 0, None)

    def test_non_hermitian_rejected(self):
        space, H, ch, psi0 = small_linearized()
        with pytest.raises(ValueError):
            evolve_trajectory(SparseOperator(space, H.matrix * 1j), ch, psi0, [0, 1], seed=0)

    def test_bad_grid(self):
        space, H, ch, psi0 = small_linearized()
        with pytest.raises(ValueError):
            evolve_trajectory(H, ch, psi0, [0, 1, 0.5], seed=0)


class TestToyJump:
    basis = scattering_basis(4)
    p = OscillatorParams(omega=200.0, g=5.0, delta_c=-20.0, kappa=100.0)

    def test_generator_is_unravelled(self):
        ch = JumpChannel(toy_jump_operator(self.p, self.basis))
        H = toy_hamiltonian(self.p, self.basis)
        G = effective_hamiltonian(H, [ch]).toarray()
        assert np.allclose(G, build_toy_generator(self.p, self.basis).toarray(), atol=1e-12)

    def test_first_jump_bell_state(self):
        L = toy_jump_operator(self.p, self.basis)
        psi0 = StateVector.basis_state(self.basis.space, [0, 0])
        post = (L @ psi0).normalize()
        bell = np.zeros((4, 4), dtype=complex)
        bell[0, 1] = bell[1, 0] = 1 / np.sqrt(2)
        assert abs(abs(np.vdot(bell.reshape(-1), post.amplitudes)) - 1) < 1e-12
        assert log_negativity(post.density_matrix()) == pytest.approx(1.0, abs=1e-10)
        assert momentum_correlation(post).cp == pytest.approx(0.5, abs=1e-10)

    def test_first_jump_on_trajectory(self):
        H = toy_hamiltonian(self.p, self.basis)
        ch = [JumpChannel(toy_jump_operator(self.p, self.basis))]
        psi0 = StateVector.basis_state(self.basis.space, [0, 0])
        jobs = {"en": lambda s: log_negativity(s.density_matrix()), "cp": lambda s: momentum_correlation(s).cp}
        rec = evolve_trajectory(H, ch, psi0, np.linspace(0, 10, 11), seed=1, method="spectral",
                                jump_observables=jobs)
        assert rec.n_jumps > 0
        # the no-jump evolution barely leaves |00> before the first click
        assert rec.jump_observables["en"][0] == pytest.approx(1.0, abs=1e-3)
        assert rec.jump_observables["cp"][0] == pytest.approx(0.5, abs=1e-3)


class TestEnsemble:
    def test_single_trajectory_matches(self):
        space, H, ch, psi0 = small_linearized()
        grid = np.linspace(0, 1, 11)
        ens = run_ensemble(H, ch, psi0, grid, 1, base_seed=4)
        one = evolve_trajectory(H, ch, psi0, grid, seed=derive_seed(4, 0))
        assert np.array_equal(ens.mean["n_photon"], one.observables["n_photon"])
        assert np.array_equal(ens.stderr["n_photon"], np.zeros_like(grid))
        assert np.array_equal(ens.trajectories[0].jump_times, one.jump_times)

    def test_damped_cavity(self):
        psi0 = StateVector.basis_state(FIELD, [2])
        grid = np.linspace(0, 1.0, 6)
        rec = run_ensemble(zero_hamiltonian(FIELD), [cavity_decay(FIELD, KAPPA)], psi0, grid, 1000, base_seed=2)
        expect = 2 * np.exp(-2 * KAPPA * grid)
        err = rec.stderr["n_photon"]
        assert rec.mean["n_photon"][0] == 2
        assert np.all(np.abs(rec.mean["n_photon"][1:] - expect[1:]) < 3 * err[1:])

    def test_deterministic(self):
        space, H, ch, psi0 = small_linearized()
        grid = np.linspace(0, 1, 6)
        a = run_ensemble(H, ch, psi0, grid, 20, base_seed=9, method="spectral")
        b = run_ensemble(H, ch, psi0, grid, 20, base_seed=9, method="spectral")
        c = run_ensemble(H, ch, psi0, grid, 20, base_seed=9, method="spectral", workers=2)
        for other in (b, c):
            assert other.seeds == a.seeds
            for k in a.mean:
                assert a.mean[k].tobytes() == other.mean[k].tobytes()
                assert a.per_trajectory[k].tobytes() == other.per_trajectory[k].tobytes()
            for x, y in zip(a.trajectories, other.trajectories):
                assert x.jump_times.tobytes() == y.jump_times.tobytes()

    def test_snapshots_average_to_density_matrix(self):
        space, H, ch, psi0 = small_linearized()
        grid = np.linspace(0, 1, 3)
        rec = run_ensemble(H, ch, psi0, grid, 10, base_seed=1, snapshots={"rho": reduced_state_snapshot((0, 1))},
                           snapshot_times=[1.0])
        rho = rec.density_matrix("rho", 0, space.subspace((0, 1)))
        assert abs(rho.trace() - 1) < 1e-10

    def test_unravelling_high_statistics(self):
        # many trajectories against the direct solution at a few early times
        space, H, ch, psi0 = small_linearized()
        grid = np.linspace(0, 0.4, 5)
        n_op = photon_number(space)
        rec = run_ensemble(H, ch, psi0, grid, 4000, base_seed=21, method="spectral")
        rhos = integrate_master_equation(H, ch, psi0.density_matrix(), grid)
        me = np.array([expectation(r, n_op).real for r in rhos])
        err = rec.stderr["n_photon"]
        assert np.all(np.abs(rec.mean["n_photon"][1:] - me[1:]) < 3 * err[1:])


class TestMasterEquation:
    def test_cavity_decay(self):
        rho0 = StateVector.basis_state(FIELD, [1]).density_matrix()
        grid = np.linspace(0, 1, 11)
        rhos = integrate_master_equation(zero_hamiltonian(FIELD), [cavity_decay(FIELD, KAPPA)], rho0, grid,
                                         rtol=1e-10, atol=1e-12)
        n = np.array([expectation(r, number_operator(FockSpace(3))).real for r in rhos])
        assert np.allclose(n, np.exp(-2 * KAPPA * grid), atol=1e-6)

    def test_vacuum_stationary(self):
        H = SparseOperator(FIELD, 2.0 * number_operator(FockSpace(3)).matrix, hermitian=True)
        rho0 = StateVector.basis_state(FIELD, [0]).density_matrix()
        rhos = integrate_master_equation(H, [cavity_decay(FIELD, KAPPA)], rho0, np.linspace(0, 5, 6))
        assert np.allclose(rhos[-1].matrix, rho0.matrix, atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_liouvillian_trace_preserving(self, seed):
        rng = np.random.default_rng(seed)
        space = SpaceDescriptor.of(FockSpace(2), FockSpace(3))
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        H = SparseOperator(space, m + m.conj().T, hermitian=True)
        L = vectorized_liouvillian(H, [cavity_decay(space, rng.uniform(0.1, 3))]).toarray()
        # row-major vec: d Tr(rho)/dt = sum over diagonal rows of L
        tr = np.eye(6).reshape(-1)
        assert np.allclose(tr @ L, 0, atol=1e-10)

    def test_dimension_limit(self):
        space, H, ch, psi0 = small_linearized()
        with pytest.raises(DimensionError):
            integrate_master_equation(H, ch, psi0.density_matrix(), [0, 1], max_dim=10)

    def test_decoupled_steady_state_is_vacuum(self):
        p = OscillatorParams(omega=30.0, g=0.0, delta_c=-25.0, kappa=5.0)
        space = oscillator_space(3, 3)
        H = build_linearized_hamiltonian(p, space)
        rho0 = StateVector.basis_state(space, [0, 0, 1]).density_matrix()
        rho = steady_state(H, [cavity_decay(space, p.kappa)], tau=1 / p.kappa, rho0=rho0)
        assert abs(rho.matrix[0, 0] - 1) < 1e-6

    def test_steady_photon_number_small_cutoffs(self):
        space, H, ch, psi0 = small_linearized()
        rho = steady_state(H, ch, tau=1.0)
        a = embed(annihilation_operator(space.factors[2]), space, 2)
        n = expectation(rho, a.dag() @ a).real
        assert 0 < n < 1
        assert abs(expectation(rho, a)) < 1e-8

    def test_rk_and_implicit_agree(self):
        space, H, ch, psi0 = small_linearized((2, 2, 2))
        a = steady_state(H, ch, tau=1.0, method="implicit")
        b = steady_state(H, ch, tau=1.0, method="rk")
        assert np.abs(a.matrix - b.matrix).max() < 1e-5


def test_steady_cp_matches_covariance_prediction(herald_steady):
    # truncated product basis at cutoffs (6, 6, 4); see README for the measured gap
    s = herald_steady["summary"]
    assert abs(s["steady_cp"] - s["steady_cp_lyapunov"]) <= 0.02


def test_steady_state_field_at_deep_trap(herald_steady):
    s = herald_steady["summary"]
    assert 0 < s["n_photon_steady"] < 1
