"""Composite Hilbert spaces, sparse operators and states.

Everything is expressed in recoil units: hbar = k = 1, energies and rates in
omega_R, momenta in hbar*k and lengths in 1/k. Composite spaces are ordered
(particle 1, particle 2, field); builders elsewhere in the package rely on
that order.

Operators silently drop components that would be shifted past the edge of a
truncated momentum lattice. Use :func:`boundary_leakage` to check that an
evolved state stays clear of the edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from string import ascii_letters
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

HERMITIAN_TOL = 1e-12
STATE_NORM_TOL = 1e-10
DM_HERMITIAN_TOL = 1e-10
DM_TRACE_TOL = 1e-8
DM_POSITIVITY_TOL = 1e-8
# positivity of larger density matrices is not checked on construction
DM_EIGEN_CHECK_MAX = 2048


@dataclass(frozen=True)
class MomentumLattice:
    """Momentum basis |n hbar k> for n in [-cutoff, cutoff]."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f"momentum cutoff must be a positive integer, got {self.cutoff!r}")
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @property
    def dim(self) -> int:
        return 2 * self.cutoff + 1

    @property
    def momenta(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)


@dataclass(frozen=True)
class FockSpace:
    """Truncated Fock basis |0>, ..., |cutoff - 1>."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f"Fock cutoff must be a positive integer, got {self.cutoff!r}")
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @property
    def dim(self) -> int:
        return self.cutoff


Factor = Union[MomentumLattice, FockSpace]


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered tensor product of lattice and Fock factors."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("a space needs at least one factor")
        for f in factors:
            if not isinstance(f, (MomentumLattice, FockSpace)):
                raise TypeError(f"unsupported factor {f!r}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, *factors: Factor) -> "SpaceDescriptor":
        return cls(factors)

    def __len__(self) -> int:
        return len(self.factors)

    @property
    def dims(self) -> tuple:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def subspace(self, keep: Iterable[int]) -> "SpaceDescriptor":
        return SpaceDescriptor(tuple(self.factors[i] for i in sorted(set(keep))))


def as_space(space: Union[Factor, SpaceDescriptor]) -> SpaceDescriptor:
    if isinstance(space, SpaceDescriptor):
        return space
    return SpaceDescriptor((space,))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def hermitian_deviation(m) -> float:
    """Largest entrywise |M - M^dagger|."""
    if sp.issparse(m):
        diff = (m - m.conj().T).tocsr()
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0
    m = np.asarray(m)
    return float(np.abs(m - m.conj().T).max()) if m.size else 0.0


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Complex sparse matrix acting on a composite space.

    ``hermitian=True`` is checked on construction (entrywise within 1e-12)
    and propagated through sums and real scalings.
    """

    space: SpaceDescriptor
    matrix: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        space = as_space(self.space)
        m = sp.csr_matrix(self.matrix, dtype=complex)
        n = space.total_dim
        if m.shape != (n, n):
            raise ValueError(f"operator shape {m.shape} does not match space dimension {n}")
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        if self.hermitian:
            dev = hermitian_deviation(m)
            if dev > HERMITIAN_TOL:
                raise ValueError(f"operator flagged hermitian deviates by {dev:.3e}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "SparseOperator":
        return SparseOperator(self.space, self.matrix.conj().T, self.hermitian)

    def _check_space(self, other: "SparseOperator"):
        if other.space != self.space:
            raise ValueError("operators act on different spaces")

    def __add__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        self._check_space(other)
        return SparseOperator(self.space, self.matrix + other.matrix, self.hermitian and other.hermitian)

    def __sub__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        self._check_space(other)
        return SparseOperator(self.space, self.matrix - other.matrix, self.hermitian and other.hermitian)

    def __neg__(self):
        return SparseOperator(self.space, -self.matrix, self.hermitian)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        real = np.isreal(scalar)
        return SparseOperator(self.space, self.matrix * scalar, self.hermitian and bool(real))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._check_space(other)
            m = self.matrix @ other.matrix
            return SparseOperator(self.space, m, hermitian_deviation(m) <= HERMITIAN_TOL)
        if isinstance(other, StateVector):
            if other.space != self.space:
                raise ValueError("operator and state act on different spaces")
            return StateVector(self.space, self.matrix @ other.amplitudes)
        return self.matrix @ other


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over a composite space.

    With ``normalized=True`` the squared norm is required to be 1 within
    1e-10.
    """

    space: SpaceDescriptor
    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        space = as_space(self.space)
        amps = np.array(self.amplitudes, dtype=complex, copy=True).reshape(-1)
        if amps.shape[0] != space.total_dim:
            raise ValueError(f"state has {amps.shape[0]} amplitudes, space dimension is {space.total_dim}")
        if self.normalized:
            dev = abs(np.vdot(amps, amps).real - 1.0)
            if dev > STATE_NORM_TOL:
                raise ValueError(f"state flagged normalized has |norm^2 - 1| = {dev:.3e}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", _freeze(amps))

    @classmethod
    def basis_state(cls, space: SpaceDescriptor, labels: Sequence[int]) -> "StateVector":
        """Product basis state; lattice labels are momenta n, Fock labels are levels."""
        space = as_space(space)
        if len(labels) != len(space):
            raise ValueError("one label per factor required")
        vecs = []
        for f, label in zip(space.factors, labels):
            v = np.zeros(f.dim, dtype=complex)
            idx = label + f.cutoff if isinstance(f, MomentumLattice) else label
            if not 0 <= idx < f.dim:
                raise ValueError(f"label {label} outside factor {f}")
            v[idx] = 1.0
            vecs.append(v)
        return cls.product(space, vecs)

    @classmethod
    def product(cls, space: SpaceDescriptor, factor_amplitudes: Sequence[np.ndarray]) -> "StateVector":
        space = as_space(space)
        if len(factor_amplitudes) != len(space):
            raise ValueError("one amplitude vector per factor required")
        out = np.ones(1, dtype=complex)
        for v in factor_amplitudes:
            out = np.kron(out, np.asarray(v, dtype=complex))
        norm_ok = abs(np.vdot(out, out).real - 1.0) <= STATE_NORM_TOL
        return cls(space, out, normalized=norm_ok)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalize(self) -> "StateVector":
        n2 = self.norm_squared()
        if n2 == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / np.sqrt(n2), normalized=True)

    def density_matrix(self) -> "DensityMatrix":
        psi = self.amplitudes
        return DensityMatrix(self.space, np.outer(psi, psi.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense density matrix; Hermiticity, trace and positivity checked on construction."""

    space: SpaceDescriptor
    matrix: np.ndarray
    validate: bool = True

    def __post_init__(self):
        space = as_space(self.space)
        m = np.array(self.matrix.toarray() if sp.issparse(self.matrix) else self.matrix,
                     dtype=complex, copy=True)
        n = space.total_dim
        if m.shape != (n, n):
            raise ValueError(f"density matrix shape {m.shape} does not match space dimension {n}")
        if self.validate:
            dev = hermitian_deviation(m)
            if dev > DM_HERMITIAN_TOL:
                raise ValueError(f"density matrix not hermitian (deviation {dev:.3e})")
            tr = np.trace(m).real
            if abs(tr - 1.0) > DM_TRACE_TOL:
                raise ValueError(f"density matrix trace is {tr!r}")
            if n <= DM_EIGEN_CHECK_MAX:
                lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
                if lo < -DM_POSITIVITY_TOL:
                    raise ValueError(f"density matrix has eigenvalue {lo:.3e}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", _freeze(m))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


State = Union[StateVector, DensityMatrix]


def identity(space: Union[Factor, SpaceDescriptor]) -> SparseOperator:
    space = as_space(space)
    return SparseOperator(space, sp.identity(space.total_dim, dtype=complex, format="csr"), True)


def annihilation_operator(space: FockSpace) -> SparseOperator:
    """Truncated ladder operator, a|n> = sqrt(n)|n-1>."""
    if not isinstance(space, FockSpace):
        raise TypeError("annihilation operator needs a FockSpace")
    if space.cutoff < 2:
        raise ValueError("Fock cutoff must be at least 2")
    m = sp.diags(np.sqrt(np.arange(1, space.cutoff, dtype=float)), 1, format="csr")
    return SparseOperator(as_space(space), m)


def number_operator(space: FockSpace) -> SparseOperator:
    if not isinstance(space, FockSpace):
        raise TypeError("number operator needs a FockSpace")
    return SparseOperator(as_space(space), sp.diags(np.arange(space.cutoff, dtype=float), format="csr"), True)


def _shift_up(lattice: MomentumLattice, step: int) -> sp.csr_matrix:
    # |n> -> |n + step>, dropping anything pushed off the lattice
    return sp.diags(np.ones(lattice.dim - step), -step, shape=(lattice.dim, lattice.dim), format="csr")


TRIG_KINDS = ("cos2k", "sin2k", "cos2_k", "sin2_k")


def trig_operator(space: MomentumLattice, kind: str) -> SparseOperator:
    """cos(2kx), sin(2kx), cos^2(kx) or sin^2(kx) as momentum-shift operators.

    ``kind`` is one of ``"cos2k"``, ``"sin2k"``, ``"cos2_k"`` (cos^2) and
    ``"sin2_k"`` (sin^2).
    """
    if not isinstance(space, MomentumLattice):
        raise TypeError("trig operators need a MomentumLattice")
    up = _shift_up(space, 2)
    down = up.T
    eye = sp.identity(space.dim, format="csr")
    if kind == "cos2k":
        m = 0.5 * (up + down)
    elif kind == "sin2k":
        m = (up - down) / 2j
    elif kind == "cos2_k":
        m = 0.5 * eye + 0.25 * (up + down)
    elif kind == "sin2_k":
        m = 0.5 * eye - 0.25 * (up + down)
    else:
        raise ValueError(f"unknown trig kind {kind!r}; expected one of {TRIG_KINDS}")
    return SparseOperator(as_space(space), m, True)


def kinetic_operator(space: MomentumLattice) -> SparseOperator:
    """p^2/2m, which is n^2 omega_R on |n hbar k>."""
    if not isinstance(space, MomentumLattice):
        raise TypeError("kinetic operator needs a MomentumLattice")
    n = space.momenta.astype(float)
    return SparseOperator(as_space(space), sp.diags(n**2, format="csr"), True)


def momentum_operator(space: Factor) -> SparseOperator:
    """Particle momentum: n on a lattice, (b - b^dagger)/(i sqrt 2) on a Fock factor."""
    if isinstance(space, MomentumLattice):
        return SparseOperator(as_space(space), sp.diags(space.momenta.astype(float), format="csr"), True)
    if isinstance(space, FockSpace):
        b = annihilation_operator(space).matrix
        return SparseOperator(as_space(space), (b - b.T) / (1j * np.sqrt(2.0)), True)
    raise TypeError(f"unsupported factor {space!r}")


def position_quadrature(space: FockSpace) -> SparseOperator:
    """(b + b^dagger)/sqrt 2."""
    b = annihilation_operator(space).matrix
    return SparseOperator(as_space(space), (b + b.T) / np.sqrt(2.0), True)


def tensor(ops: Sequence[Union[SparseOperator, Factor]]) -> SparseOperator:
    """Kronecker product in the given factor order.

    Passing a bare factor descriptor inserts the identity on that factor.
    """
    if not ops:
        raise ValueError("tensor needs at least one operand")
    factors = []
    mat = None
    herm = True
    for op in ops:
        if isinstance(op, (MomentumLattice, FockSpace)):
            op = identity(op)
        if not isinstance(op, SparseOperator):
            raise TypeError(f"cannot tensor {type(op).__name__}")
        factors.extend(op.space.factors)
        herm = herm and op.hermitian
        mat = op.matrix if mat is None else sp.kron(mat, op.matrix, format="csr")
    return SparseOperator(SpaceDescriptor(tuple(factors)), mat, herm)


def embed(op: SparseOperator, space: SpaceDescriptor, index: int) -> SparseOperator:
    """Place a single-factor operator at ``index`` with identities elsewhere."""
    if len(op.space) != 1:
        raise ValueError("embed expects a single-factor operator")
    if space.factors[index] != op.space.factors[0]:
        raise ValueError(f"operator factor {op.space.factors[0]} does not match {space.factors[index]}")
    parts = list(space.factors)
    parts[index] = op
    return tensor(parts)


def expectation(state: State, op: SparseOperator) -> complex:
    """<psi|M|psi> for a state vector, Tr(rho M) for a density matrix."""
    if state.space != op.space:
        raise ValueError("state and operator act on different spaces")
    if isinstance(state, StateVector):
        psi = state.amplitudes
        return complex(np.vdot(psi, op.matrix @ psi))
    return complex(op.matrix.multiply(state.matrix.T).sum())


def _normalize_keep(space: SpaceDescriptor, keep: Iterable[int]) -> list:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must not be empty")
    if keep[0] < 0 or keep[-1] >= len(space):
        raise ValueError(f"keep indices {keep} outside a {len(space)}-factor space")
    return keep


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every factor not listed in ``keep``."""
    space = rho.space
    keep = _normalize_keep(space, keep)
    n = len(space)
    if len(keep) == n:
        return rho
    rows = ascii_letters[:n]
    cols = [ascii_letters[n + i] if i in keep else rows[i] for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    spec = f"{rows}{''.join(cols)}->{out}"
    t = rho.matrix.reshape(space.dims + space.dims)
    sub = space.subspace(keep)
    m = np.einsum(spec, t).reshape(sub.total_dim, sub.total_dim)
    return DensityMatrix(sub, m, validate=rho.validate)


def reduced_density_matrix(psi: StateVector, keep: Iterable[int], validate: bool = True) -> DensityMatrix:
    """Reduced state of a pure state without forming |psi><psi|."""
    space = psi.space
    keep = _normalize_keep(space, keep)
    rest = [i for i in range(len(space)) if i not in keep]
    sub = space.subspace(keep)
    t = psi.amplitudes.reshape(space.dims).transpose(keep + rest).reshape(sub.total_dim, -1)
    return DensityMatrix(sub, t @ t.conj().T, validate=validate)


def factor_probabilities(state: State, index: int) -> np.ndarray:
    """Marginal basis-state probabilities of one factor."""
    space = state.space
    if isinstance(state, StateVector):
        probs = np.abs(state.amplitudes) ** 2
    else:
        probs = np.real(np.diagonal(state.matrix))
    axes = tuple(i for i in range(len(space)) if i != index)
    return probs.reshape(space.dims).sum(axis=axes)


def boundary_leakage(state: State, sites: int = 2) -> tuple:
    """Probability on the outermost ``sites`` momenta at each lattice edge.

    One value per momentum-lattice factor, in factor order. The state is not
    renormalized, so pass a normalized state.
    """
    out = []
    for i, f in enumerate(state.space.factors):
        if isinstance(f, MomentumLattice):
            p = factor_probabilities(state, i)
            edge = np.abs(f.momenta) > f.cutoff - sites
            out.append(float(p[edge].sum()))
    return tuple(out)
