"""Hamiltonians for the ring cavity, its linearized limit and the toy model.

All builders return operators on spaces ordered (particle 1, particle 2,
field). Parameters are in recoil units (omega_R = 1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, RegimeError
from .hilbert import (
    FockSpace,
    MomentumLattice,
    SpaceDescriptor,
    SparseOperator,
    StateVector,
    annihilation_operator,
    kinetic_operator,
    number_operator,
    tensor,
    trig_operator,
)

ZERO_EIGENVALUE_TOL = 1e-8
K_XI0_CONSISTENCY_TOL = 1e-10


@dataclass(frozen=True)
class RingParams:
    """Ring-cavity parameters in recoil units.

    Attributes
    ----------
    alpha_c : pump amplitude of the trapping mode (dimensionless, > 0)
    U0 : light shift per photon (< 0)
    delta_c : pump-cavity detuning (< 0, red detuned)
    kappa : cavity field decay rate (> 0)
    allow_unstable : skip the sign checks on U0 and delta_c
    """

    alpha_c: float
    U0: float
    delta_c: float
    kappa: float
    allow_unstable: bool = False

    def __post_init__(self):
        if not self.alpha_c > 0:
            raise ConfigError(f"alpha_c must be positive, got {self.alpha_c!r}")
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa!r}")
        if not self.allow_unstable:
            if not self.U0 < 0:
                raise RegimeError(f"U0 must be negative (high-field-seeking particles), got {self.U0!r}")
            if not self.delta_c < 0:
                raise RegimeError(f"delta_c must be negative (red detuning), got {self.delta_c!r}")
        if self.alpha_c < 10:
            warnings.warn(f"alpha_c = {self.alpha_c} is not large; the classical pump picture is marginal",
                          stacklevel=2)


@dataclass(frozen=True)
class OscillatorParams:
    """Linearized-model parameters in recoil units.

    ``k_xi0`` defaults to sqrt(2/omega), the value implied by a harmonic
    optical trap.
    """

    omega: float
    g: float
    delta_c: float
    kappa: float
    k_xi0: Optional[float] = None

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigError(f"omega must be positive, got {self.omega!r}")
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa!r}")
        if self.k_xi0 is None:
            object.__setattr__(self, "k_xi0", float(np.sqrt(2.0 / self.omega)))
        elif not self.k_xi0 > 0:
            raise ConfigError(f"k_xi0 must be positive, got {self.k_xi0!r}")


def derive_effective_params(params: RingParams) -> OscillatorParams:
    """Map ring-cavity parameters onto the linearized oscillator model."""
    omega = float(np.sqrt(4.0 * abs(params.U0) * params.alpha_c**2))
    k_xi0 = float(np.sqrt(2.0 / omega))
    g = params.U0 * params.alpha_c * k_xi0 / np.sqrt(2.0)
    out = OscillatorParams(omega=omega, g=float(g), delta_c=params.delta_c, kappa=params.kappa, k_xi0=k_xi0)
    if abs(out.k_xi0**2 - 2.0 / out.omega) > K_XI0_CONSISTENCY_TOL:
        raise AssertionError("Lamb-Dicke parameter inconsistent with trap frequency")
    return out


def ring_space(momentum_cutoff: int, fock_cutoff: int) -> SpaceDescriptor:
    lat = MomentumLattice(momentum_cutoff)
    return SpaceDescriptor((lat, lat, FockSpace(fock_cutoff)))


def oscillator_space(particle_cutoff: int, field_cutoff: int) -> SpaceDescriptor:
    osc = FockSpace(particle_cutoff)
    return SpaceDescriptor((osc, osc, FockSpace(field_cutoff)))


def _require(space: SpaceDescriptor, kinds: tuple, what: str):
    if len(space.factors) != len(kinds) or not all(isinstance(f, k) for f, k in zip(space.factors, kinds)):
        names = ", ".join(k.__name__ for k in kinds)
        raise ValueError(f"{what} needs a space ({names}), got {space.factors}")


def build_ring_hamiltonian(params: RingParams, space: SpaceDescriptor) -> SparseOperator:
    """Two particles in the pumped ring cavity, with the sine mode quantized."""
    _require(space, (MomentumLattice, MomentumLattice, FockSpace), "ring Hamiltonian")
    lat1, lat2, field = space.factors
    a = annihilation_operator(field)
    n_a = number_operator(field)
    quad = a + a.dag()
    U0, ac = params.U0, params.alpha_c

    H = None
    for i, lat in enumerate((lat1, lat2)):
        def on_particle(op, field_op=None):
            parts = [lat1, lat2, field if field_op is None else field_op]
            parts[i] = op
            return tensor(parts)

        term = (on_particle(kinetic_operator(lat))
                + (U0 * ac**2) * on_particle(trig_operator(lat, "cos2_k"))
                + U0 * on_particle(trig_operator(lat, "sin2_k"), n_a)
                + (0.5 * U0 * ac) * on_particle(trig_operator(lat, "sin2k"), quad))
        H = term if H is None else H + term
    H = H + (-params.delta_c) * tensor([lat1, lat2, n_a])
    return SparseOperator(space, H.matrix, hermitian=True)


def build_linearized_hamiltonian(params: OscillatorParams, space: SpaceDescriptor) -> SparseOperator:
    """Two oscillators linearly coupled to a detuned cavity mode."""
    _require(space, (FockSpace, FockSpace, FockSpace), "linearized Hamiltonian")
    f1, f2, ff = space.factors
    b1, b2, a = (annihilation_operator(f) for f in space.factors)
    xa = a + a.dag()
    H = (params.omega * (tensor([number_operator(f1), f2, ff]) + tensor([f1, number_operator(f2), ff]))
         + (-params.delta_c) * tensor([f1, f2, number_operator(ff)])
         + params.g * (tensor([b1 + b1.dag(), f2, xa]) + tensor([f1, b2 + b2.dag(), xa])))
    return SparseOperator(space, H.matrix, hermitian=True)


def initial_state_two_wells(params: RingParams, space: SpaceDescriptor, well_offset: int = 1) -> StateVector:
    """Harmonic ground states in two potential minima, field in vacuum.

    Particle 1 sits at x = 0 and particle 2 at x = well_offset*pi. In
    momentum space that displacement is the phase (-1)**(n*well_offset).
    """
    _require(space, (MomentumLattice, MomentumLattice, FockSpace), "two-well initial state")
    lat, _, field = space.factors
    if space.factors[1] != lat:
        raise ValueError("both particles need the same momentum lattice")
    omega = derive_effective_params(params).omega
    sigma = np.sqrt(omega) / 2.0
    if 4.0 * sigma > lat.cutoff:
        raise ConfigError(f"lattice too small: momentum width {sigma:.3g} needs cutoff >= {int(np.ceil(4 * sigma))},"
                          f" got {lat.cutoff}")
    n = lat.momenta
    phi = np.exp(-(n.astype(float) ** 2) / (4.0 * sigma**2)).astype(complex)
    phi /= np.linalg.norm(phi)
    phi2 = phi * np.where((n * well_offset) % 2 == 0, 1.0, -1.0)
    vac = np.zeros(field.dim, dtype=complex)
    vac[0] = 1.0
    return StateVector.product(space, [phi, phi2, vac])


@dataclass(frozen=True, eq=False)
class ScatteringBasis:
    """Eigenbasis of x_1 + x_2 (with x = b + b^dagger) on two truncated oscillators.

    ``eigenvectors`` holds |e_i> as columns, in the Fock product basis
    |n_1, n_2>. Eigenvalues below the zero threshold are stored as exact
    zeros.
    """

    fock_cutoff: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float)
        vecs = np.array(self.eigenvectors, dtype=float)
        d = self.fock_cutoff**2
        if lam.shape != (d,) or vecs.shape != (d, d):
            raise ValueError("scattering basis shape does not match the Fock cutoff")
        if np.abs(vecs.T @ vecs - np.eye(d)).max() > 1e-10:
            raise ValueError("scattering eigenvectors are not orthonormal")
        nz = np.sort(lam[lam != 0.0])
        if nz.size and np.abs(nz + nz[::-1]).max() > ZERO_EIGENVALUE_TOL:
            raise ValueError("nonzero scattering eigenvalues are not paired with opposite signs")
        lam.flags.writeable = False
        vecs.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vecs)

    @property
    def dimension(self) -> int:
        return self.fock_cutoff**2

    @property
    def space(self) -> SpaceDescriptor:
        f = FockSpace(self.fock_cutoff)
        return SpaceDescriptor((f, f))

    @property
    def radiative(self) -> np.ndarray:
        return self.eigenvalues != 0.0

    def to_fock(self, coeffs: np.ndarray) -> np.ndarray:
        """Scattering-basis coefficients to Fock product amplitudes."""
        return self.eigenvectors @ np.asarray(coeffs)

    def from_fock(self, amplitudes: np.ndarray) -> np.ndarray:
        return self.eigenvectors.T @ np.asarray(amplitudes)


def scattering_basis(fock_cutoff: int) -> ScatteringBasis:
    """Diagonalize the two-particle scattering operator.

    A cutoff of 3 or more is needed for the post-jump photon number to
    behave as for untruncated oscillators; 2 is allowed as a minimal case.
    """
    if fock_cutoff < 2:
        raise ValueError(f"scattering basis needs Fock cutoff >= 2, got {fock_cutoff}")
    x = (annihilation_operator(FockSpace(fock_cutoff)).toarray()).real
    x = x + x.T
    eye = np.eye(fock_cutoff)
    lam, vecs = np.linalg.eigh(np.kron(x, eye) + np.kron(eye, x))
    lam = np.where(np.abs(lam) < ZERO_EIGENVALUE_TOL, 0.0, lam)
    return ScatteringBasis(fock_cutoff, lam, vecs)


def toy_field_amplitude(params: OscillatorParams) -> complex:
    """Field amplitude radiated per unit scattering eigenvalue, -ig/(kappa - i delta_c)."""
    return -1j * params.g / (params.kappa - 1j * params.delta_c)


def toy_hamiltonian(params: OscillatorParams, basis: ScatteringBasis) -> SparseOperator:
    """Hermitian part of the toy generator: omega times the total oscillator number."""
    f = FockSpace(basis.fock_cutoff)
    n = number_operator(f)
    return params.omega * (tensor([n, f]) + tensor([f, n]))


def toy_jump_operator(params: OscillatorParams, basis: ScatteringBasis) -> SparseOperator:
    """Particle-space jump operator sqrt(2 kappa)|alpha| sum_i lambda_i |e_i><e_i|."""
    amp = np.sqrt(2.0 * params.kappa) * abs(toy_field_amplitude(params))
    V = basis.eigenvectors
    m = amp * (V * basis.eigenvalues) @ V.T
    m[np.abs(m) < 1e-15] = 0.0
    return SparseOperator(basis.space, sp.csr_matrix(m))


def build_toy_generator(params: OscillatorParams, basis: ScatteringBasis) -> SparseOperator:
    """Non-Hermitian particle-only generator of the adiabatic toy model.

    H_nH = omega sum_k b_k^dagger b_k - i kappa sum_i |lambda_i alpha|^2 |e_i><e_i|,
    returned in the Fock product basis.
    """
    V = basis.eigenvectors
    weights = params.kappa * abs(toy_field_amplitude(params)) ** 2 * basis.eigenvalues**2
    damping = (V * weights) @ V.T
    damping[np.abs(damping) < 1e-15] = 0.0
    H = toy_hamiltonian(params, basis)
    return SparseOperator(basis.space, H.matrix - 1j * sp.csr_matrix(damping))
