"""Observables and post-processing.

Momentum correlations, heralded (post-detection) states, g2(0), logarithmic
negativity of density matrices, momentum histograms and the toy-model jump.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, NumericalError, RegimeError
from .hilbert import (
    DensityMatrix,
    MomentumLattice,
    SpaceDescriptor,
    SparseOperator,
    StateVector,
    embed,
    expectation,
    momentum_operator,
    reduced_density_matrix,
)
from .models import ScatteringBasis

HERALD_MIN_WEIGHT = 1e-12
G2_IDENTITY_TOL = 1e-10
LOGNEG_MAX_DIM = 2048
# variances below this are treated as zero (sharp momentum), leaving C_p undefined
ZERO_VARIANCE = 1e-14


@dataclass(frozen=True)
class CorrelationReport:
    """Pearson correlation of the two particle momenta.

    ``cp`` is None when either variance vanishes: a sharp momentum has no
    correlation coefficient.
    """

    cp: Optional[float]
    cov_p: float
    var_p1: float
    var_p2: float
    mean_p1: float
    mean_p2: float

    @property
    def defined(self) -> bool:
        return self.cp is not None


def correlation_from_moments(m1: float, m2: float, m11: float, m22: float, m12: float) -> CorrelationReport:
    """Build a report from <p1>, <p2>, <p1^2>, <p2^2> and <p1 p2>."""
    var1 = m11 - m1 * m1
    var2 = m22 - m2 * m2
    cov = m12 - m1 * m2
    if var1 <= ZERO_VARIANCE or var2 <= ZERO_VARIANCE:
        return CorrelationReport(None, float(cov), float(var1), float(var2), float(m1), float(m2))
    return CorrelationReport(float(cov / np.sqrt(var1 * var2)), float(cov), float(var1), float(var2),
                             float(m1), float(m2))


MOMENT_NAMES = ("p1", "p2", "p1p1", "p2p2", "p1p2")


def momentum_moment_operators(space: SpaceDescriptor, particles: Sequence[int] = (0, 1)) -> Dict[str, SparseOperator]:
    """First and second momentum moments of the two particles as operators.

    Lattice factors use p = n (units of hbar k); Fock factors use the
    dimensionless quadrature (b - b^dagger)/(i sqrt 2).
    """
    i, j = particles
    P1 = embed(momentum_operator(space.factors[i]), space, i)
    P2 = embed(momentum_operator(space.factors[j]), space, j)
    return {"p1": P1, "p2": P2, "p1p1": P1 @ P1, "p2p2": P2 @ P2, "p1p2": P1 @ P2}


def heralded_moment_operators(moments: Mapping[str, SparseOperator], jump: SparseOperator) -> Dict[str, SparseOperator]:
    """Operators J^dagger O J whose averages give moments after a detection.

    Includes ``weight`` = J^dagger J, the normalization.
    """
    Jd = jump.dag()
    out = {name: Jd @ O @ jump for name, O in moments.items()}
    out["weight"] = Jd @ jump
    return out


def momentum_correlation(state, particles: Sequence[int] = (0, 1)) -> CorrelationReport:
    """Momentum correlation coefficient of a pure or mixed state."""
    ops = momentum_moment_operators(state.space, particles)
    m = {k: expectation(state, O).real for k, O in ops.items()}
    return correlation_from_moments(m["p1"], m["p2"], m["p1p1"], m["p2p2"], m["p1p2"])


def jackknife(estimator: Callable[[list], np.ndarray], per_traj: Sequence[np.ndarray]):
    """Ensemble estimate and jackknife standard error.

    ``estimator`` maps a list of trajectory-averaged arrays (one per entry of
    ``per_traj``, each of shape (n_traj, ...)) to the quantity of interest.
    Returns (value, stderr); the error is zero for a single trajectory.
    """
    arrs = [np.asarray(a, dtype=float) for a in per_traj]
    n = arrs[0].shape[0]
    sums = [a.sum(axis=0) for a in arrs]
    value = estimator([s / n for s in sums])
    if n == 1:
        return value, np.zeros_like(value)
    loo = np.stack([estimator([(s - a[i]) / (n - 1) for s, a in zip(sums, arrs)]) for i in range(n)])
    with np.errstate(invalid="ignore"):
        err = np.sqrt((n - 1) / n * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    return value, err


def _cp_from_means(means: list) -> np.ndarray:
    m1, m2, m11, m22, m12 = means[:5]
    if len(means) > 5:
        w = means[5]
        with np.errstate(invalid="ignore", divide="ignore"):
            m1, m2, m11, m22, m12 = (x / w for x in (m1, m2, m11, m22, m12))
    v1 = m11 - m1 * m1
    v2 = m22 - m2 * m2
    with np.errstate(invalid="ignore", divide="ignore"):
        cp = (m12 - m1 * m2) / np.sqrt(v1 * v2)
    return np.where((v1 > ZERO_VARIANCE) & (v2 > ZERO_VARIANCE), cp, np.nan)


def ensemble_correlation(per_traj: Mapping[str, np.ndarray], weight: Optional[np.ndarray] = None):
    """C_p of an ensemble from per-trajectory moments, with a jackknife error.

    ``per_traj`` maps the names in ``MOMENT_NAMES`` to (n_traj, n_times)
    arrays. Moments are averaged over trajectories before forming C_p. With
    ``weight`` (per-trajectory <J^dagger J>) the moments are the heralded
    ones, sum(<J^dagger O J>)/sum(<J^dagger J>).

    Returns (cp, stderr); undefined points are NaN.
    """
    arrs = [per_traj[k] for k in MOMENT_NAMES]
    if weight is not None:
        arrs.append(weight)
    return jackknife(_cp_from_means, arrs)


def conditional_density_matrix(rho: DensityMatrix, a: SparseOperator) -> DensityMatrix:
    """State after a detection event, a rho a^dagger / Tr(a rho a^dagger)."""
    if a.space != rho.space:
        raise ValueError("jump operator and state act on different spaces")
    m = a.matrix @ (a.matrix @ rho.matrix).conj().T
    m = m.conj().T
    w = np.trace(m).real
    if not w > HERALD_MIN_WEIGHT:
        raise RegimeError(f"nothing to herald: detection probability {w:.3e}")
    m = 0.5 * (m + m.conj().T) / w
    return DensityMatrix(rho.space, m)


def g2_zero(rho: DensityMatrix, a: SparseOperator) -> float:
    """Equal-time second-order correlation <a^dag a^dag a a>/<a^dag a>^2.

    Also evaluated as the photon number after a detection divided by the
    number before; the two must agree within 1e-10.
    """
    ad = a.dag()
    n = expectation(rho, ad @ a).real
    if not n > HERALD_MIN_WEIGHT:
        raise RegimeError(f"g2(0) undefined for the field vacuum (<a^dag a> = {n:.3e})")
    g2 = expectation(rho, ad @ ad @ a @ a).real / n**2
    ratio = expectation(conditional_density_matrix(rho, a), ad @ a).real / n
    if abs(g2 - ratio) > G2_IDENTITY_TOL * max(1.0, abs(g2)):
        raise NumericalError(f"g2(0) forms disagree: {g2!r} vs {ratio!r}")
    return float(g2)


def partial_transpose(rho: DensityMatrix, part_a: Sequence[int]) -> np.ndarray:
    """Transpose the factors in ``part_a``."""
    space = rho.space
    n = len(space)
    part_a = sorted(set(int(i) for i in part_a))
    if not part_a or part_a[0] < 0 or part_a[-1] >= n:
        raise ValueError(f"invalid subsystem {part_a} for a {n}-factor space")
    t = rho.matrix.reshape(space.dims + space.dims)
    perm = list(range(2 * n))
    for i in part_a:
        perm[i], perm[n + i] = n + i, i
    return t.transpose(perm).reshape(rho.matrix.shape)


def log_negativity(rho: DensityMatrix, part_a: Sequence[int] = (0,), max_dim: int = LOGNEG_MAX_DIM) -> float:
    """Logarithmic negativity log2 ||rho^{T_A}||_1 between ``part_a`` and the other factors.

    To measure entanglement between a subset of factors, trace out the rest
    first.
    """
    d = rho.space.total_dim
    if d > max_dim:
        raise DimensionError(f"dimension {d} exceeds the dense eigensolver limit {max_dim}")
    pt = partial_transpose(rho, part_a)
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return max(0.0, float(np.log2(np.abs(ev).sum())))


def particle_log_negativity(psi: StateVector, particles: Sequence[int] = (0, 1)) -> float:
    """Entanglement between the two particles of a pure state, other factors traced out."""
    rho = reduced_density_matrix(psi, particles, validate=False)
    return log_negativity(rho, (0,))


def momentum_distribution(rho: DensityMatrix) -> np.ndarray:
    """Joint momentum probabilities P[n1 + N, n2 + N] of a two-particle state."""
    space = rho.space
    if len(space) != 2 or not all(isinstance(f, MomentumLattice) for f in space.factors):
        raise ValueError("momentum distribution needs a two-particle state on momentum lattices")
    probs = np.clip(np.real(np.diagonal(rho.matrix)), 0.0, None)
    return probs.reshape(space.dims)


def toy_jump_state(basis: ScatteringBasis, coeffs: np.ndarray, alpha: complex) -> Tuple[StateVector, float]:
    """Particle state right after a detection in the toy model.

    ``coeffs`` are amplitudes in the scattering basis. The detection weights
    each component by lambda_i, removing the non-radiative ones. Returns the
    normalized post-jump state (Fock product basis) and the ratio of the
    photon number after the jump to the one before.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.shape != (basis.dimension,):
        raise ValueError("coefficient vector does not match the scattering basis")
    if abs(np.vdot(c, c).real - 1.0) > 1e-10:
        raise ValueError("coefficients must be normalized")
    lam = basis.eigenvalues
    pop = np.abs(lam * alpha) ** 2
    w = np.abs(c * lam) ** 2
    if not w.sum() > 1e-24:
        raise RegimeError("no radiative component: the jump amplitude vanishes")
    before = (np.abs(c) ** 2 * pop).sum() / (np.abs(c) ** 2).sum()
    after = (w * pop).sum() / w.sum()
    post = c * lam
    post /= np.linalg.norm(post)
    state = StateVector(basis.space, basis.to_fock(post), normalized=True)
    return state, float(after / before)
