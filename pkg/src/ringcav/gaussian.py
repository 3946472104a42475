"""Gaussian-state engine for the linearized two-oscillator model.

Quadratures are ordered xi = (x1, p1, x2, p2, X, P) with x = (b + b^dagger)/sqrt 2
and p = (b - b^dagger)/(i sqrt 2), so the vacuum covariance is I/2. The
covariance obeys dV/dt = A V + V A^T + B.

The relative mechanical coordinate (x1 - x2)/sqrt 2 never couples to the
cavity, so A always has the undamped pair +-i omega and the full 6x6
Lyapunov equation is singular. The steady state is found on the
dissipative subsystem (centre of mass plus field); the relative mode keeps
the vacuum covariance it starts from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import NumericalError, RegimeError
from .models import OscillatorParams

SYMMETRY_TOL = 1e-12
PHYSICAL_TOL = 1e-8
EVOLVE_PHYSICAL_TOL = 1e-6
LYAPUNOV_RESIDUAL_TOL = 1e-10

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), _J)


def symplectic_eigenvalues(V: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a 2n x 2n covariance matrix, ascending."""
    V = np.asarray(V, dtype=float)
    n = V.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ V)))
    return ev[::2]


@dataclass(frozen=True, eq=False)
class CovarianceState:
    """Mean vector and symmetric covariance matrix of a Gaussian state."""

    mean: np.ndarray
    V: np.ndarray
    validate: bool = True

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        mean = np.array(self.mean, dtype=float).reshape(-1)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
            raise ValueError(f"covariance must be square with even size, got {V.shape}")
        if mean.shape != (V.shape[0],):
            raise ValueError("mean vector length does not match covariance")
        asym = np.abs(V - V.T).max()
        if asym > SYMMETRY_TOL * max(1.0, np.abs(V).max()):
            raise ValueError(f"covariance not symmetric (deviation {asym:.3e})")
        V = 0.5 * (V + V.T)
        if self.validate:
            nu = symplectic_eigenvalues(V)[0]
            if nu < 0.5 - PHYSICAL_TOL:
                raise ValueError(f"unphysical covariance: smallest symplectic eigenvalue {nu:.10g} < 1/2")
        V.flags.writeable = False
        mean.flags.writeable = False
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "mean", mean)

    @classmethod
    def vacuum(cls, n_modes: int = 3) -> "CovarianceState":
        return cls(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))

    def momentum_correlation(self) -> float:
        """Pearson correlation of p1 and p2."""
        V = self.V
        return float(V[1, 3] / np.sqrt(V[1, 1] * V[3, 3]))

    def photon_number(self) -> float:
        """<a^dagger a> of the field mode (last quadrature pair)."""
        X, P = self.mean[-2:]
        return float(0.5 * (self.V[-2, -2] + self.V[-1, -1] - 1.0) + 0.5 * (X**2 + P**2))


@dataclass(frozen=True, eq=False)
class DriftDiffusion:
    """Drift matrix A and diffusion matrix B of the linear quadrature dynamics."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise ValueError("A and B must be square and of equal size")
        if np.abs(B - B.T).max() > SYMMETRY_TOL:
            raise ValueError("diffusion matrix must be symmetric")
        if np.linalg.eigvalsh(B)[0] < -SYMMETRY_TOL:
            raise ValueError("diffusion matrix must be positive semidefinite")
        A.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def max_real_eigenvalue(self) -> float:
        return float(np.linalg.eigvals(self.A).real.max())

    @property
    def stable(self) -> bool:
        """All eigenvalues of A have negative real part."""
        return _is_stable(self.A)

    @property
    def steady_state_exists(self) -> bool:
        """Stable, or stable once the undriven relative mode is split off."""
        if self.stable:
            return True
        split = _relative_split(self)
        return split is not None and _is_stable(split[0][np.ix_(_DISS, _DISS)])


def _is_stable(A: np.ndarray) -> bool:
    ev = np.linalg.eigvals(A)
    return bool(ev.real.max() < -1e-12 * max(1.0, np.abs(ev).max()))


def build_drift_diffusion(params: OscillatorParams) -> DriftDiffusion:
    """Linear quantum Langevin dynamics of the linearized model with vacuum input noise."""
    w, g, k, dc = params.omega, params.g, params.kappa, params.delta_c
    A = np.zeros((6, 6))
    for i in (0, 2):
        A[i, i + 1] = w
        A[i + 1, i] = -w
        A[i + 1, 4] = -2.0 * g
    A[4, 4] = -k
    A[4, 5] = -dc
    A[5, 5] = -k
    A[5, 4] = dc
    A[5, 0] = A[5, 2] = -2.0 * g
    B = np.diag([0.0, 0.0, 0.0, 0.0, k, k])
    return DriftDiffusion(A, B)


# centre-of-mass / relative rotation of the mechanical quadratures
_S = 1.0 / np.sqrt(2.0)
_T = np.array([
    [_S, 0, _S, 0, 0, 0],
    [0, _S, 0, _S, 0, 0],
    [_S, 0, -_S, 0, 0, 0],
    [0, _S, 0, -_S, 0, 0],
    [0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 1],
])
_DISS = [0, 1, 4, 5]
_REL = [2, 3]


def _relative_split(dd: DriftDiffusion):
    """Rotated (A, B) if the relative mode is decoupled and noiseless, else None."""
    if dd.A.shape != (6, 6):
        return None
    A = _T @ dd.A @ _T.T
    B = _T @ dd.B @ _T.T
    tol = 1e-12 * max(1.0, np.abs(A).max())
    if (np.abs(A[np.ix_(_REL, _DISS)]).max() > tol or np.abs(A[np.ix_(_DISS, _REL)]).max() > tol
            or np.abs(B[np.ix_(_REL, _REL + _DISS)]).max() > tol):
        return None
    return A, B


def solve_lyapunov(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A V + V A^T + B = 0 for symmetric V.

    Direct dense solve of the n(n+1)/2 independent entries.
    """
    n = A.shape[0]
    iu = np.triu_indices(n)
    m = len(iu[0])
    M = np.empty((m, m))
    for col, (i, j) in enumerate(zip(*iu)):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0
        M[:, col] = (A @ E + E @ A.T)[iu]
    try:
        v = np.linalg.solve(M, -B[iu])
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Lyapunov system is singular: {exc}") from exc
    V = np.zeros((n, n))
    V[iu] = v
    return V + np.triu(V, 1).T


def steady_state_covariance(dd: DriftDiffusion) -> CovarianceState:
    """Stationary covariance of the linear dynamics.

    For the linearized model the relative mode is split off and left in its
    vacuum covariance; the remaining 4x4 centre-of-mass plus field system is
    solved directly. A fully stable A is solved as a whole.
    """
    if dd.stable:
        V = solve_lyapunov(dd.A, dd.B)
    else:
        split = _relative_split(dd)
        if split is None:
            raise RegimeError(f"no steady state in the heating regime: drift eigenvalue with real part "
                              f"{dd.max_real_eigenvalue:.3g}")
        Ap, Bp = split
        Ad = Ap[np.ix_(_DISS, _DISS)]
        if not _is_stable(Ad):
            mx = float(np.linalg.eigvals(Ad).real.max())
            raise RegimeError(f"no steady state in the heating regime: drift eigenvalue with real part {mx:.3g}")
        Vp = np.zeros((6, 6))
        Vp[np.ix_(_DISS, _DISS)] = solve_lyapunov(Ad, Bp[np.ix_(_DISS, _DISS)])
        Vp[2, 2] = Vp[3, 3] = 0.5
        V = _T.T @ Vp @ _T
    V = 0.5 * (V + V.T)
    resid = np.abs(dd.A @ V + V @ dd.A.T + dd.B).max()
    if resid > LYAPUNOV_RESIDUAL_TOL * max(1.0, np.abs(dd.B).max()):
        raise NumericalError(f"Lyapunov residual {resid:.3e} too large")
    return CovarianceState(np.zeros(V.shape[0]), V)


def _van_loan(A: np.ndarray, B: np.ndarray, dt: float):
    """Exact one-step map V -> Phi V Phi^T + Q for constant A and B.

    The block exponential contains exp(-A h), which overflows for strong
    damping, so it is taken over a short step h = dt / 2^k with |A| h <= 1
    and then doubled back up.
    """
    n = A.shape[0]
    k = max(0, int(np.ceil(np.log2(max(np.linalg.norm(A, 1) * dt, 1.0)))))
    h = dt / 2**k
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -A
    M[:n, n:] = B
    M[n:, n:] = A.T
    E = expm(M * h)
    Phi = E[n:, n:].T
    Q = Phi @ E[:n, n:]
    for _ in range(k):
        Q = Phi @ Q @ Phi.T + Q
        Phi = Phi @ Phi
    return Phi, 0.5 * (Q + Q.T)


def evolve_covariance(dd: DriftDiffusion, V0: CovarianceState, grid, method: str = "rk", rtol: float = 1e-10,
                      atol: float = 1e-12) -> list:
    """Evolve the mean and covariance over a time grid.

    ``method="rk"`` integrates with DOP853 between grid points.
    ``method="exact"`` applies the closed-form propagator
    V -> Phi V Phi^T + Q with Phi = exp(A dt) (Van Loan's construction for
    Q), which suits long runs with fast oscillations.

    The covariance is symmetrized at every grid point and checked for
    physicality (smallest symplectic eigenvalue >= 1/2 - 1e-6).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    A, B = dd.A, dd.B
    n = A.shape[0]
    if V0.V.shape != (n, n):
        raise ValueError("initial covariance does not match the drift matrix")

    def rhs(t, y):
        m = y[:n]
        V = y[n:].reshape(n, n)
        AV = A @ V
        return np.concatenate([A @ m, (AV + AV.T + B).reshape(-1)])

    cache = {}

    def exact_step(mean, V, dt):
        key = round(dt, 12)
        if key not in cache:
            cache[key] = _van_loan(A, B, dt)
        Phi, Q = cache[key]
        return Phi @ mean, Phi @ V @ Phi.T + Q

    if method not in ("rk", "exact"):
        raise ValueError(f"unknown covariance method {method!r}; expected 'rk' or 'exact'")
    out = [V0]
    mean, V = V0.mean.copy(), V0.V.copy()
    for t0, t1 in zip(grid[:-1], grid[1:]):
        if method == "exact":
            mean, V = exact_step(mean, V, t1 - t0)
        else:
            sol = solve_ivp(rhs, (t0, t1), np.concatenate([mean, V.reshape(-1)]), method="DOP853",
                            rtol=rtol, atol=atol)
            if not sol.success:
                raise NumericalError(f"covariance integration failed: {sol.message}")
            mean = sol.y[:n, -1]
            V = sol.y[n:, -1].reshape(n, n)
        V = 0.5 * (V + V.T)
        nu = symplectic_eigenvalues(V)
        if nu[0] < 0.5 - EVOLVE_PHYSICAL_TOL:
            raise NumericalError(f"covariance became unphysical at t={t1:.6g}: symplectic eigenvalues {nu}")
        out.append(CovarianceState(mean, V, validate=False))
    return out


def analytic_cp(omega: float, kappa: float, delta_c: float) -> float:
    """Steady-state momentum correlation, the ratio of heating to cooling rates."""
    return (kappa**2 + (delta_c + omega) ** 2) / (kappa**2 + (delta_c - omega) ** 2)


def stokes_rates(params: OscillatorParams):
    """Cooling (anti-Stokes) and heating (Stokes) rates and the relaxation time.

    Returns (gamma_plus, gamma_minus, tau) with tau = 1/(gamma_plus - gamma_minus).
    """
    g, k, dc, w = params.g, params.kappa, params.delta_c, params.omega
    gp = g**2 * k / (k**2 + (dc + w) ** 2)
    gm = g**2 * k / (k**2 + (dc - w) ** 2)
    if not gp > gm:
        raise RegimeError(f"heating regime: cooling rate {gp:.6g} does not exceed heating rate {gm:.6g}")
    return gp, gm, 1.0 / (gp - gm)


def effective_coupling_upsilon(params: OscillatorParams) -> float:
    """Cavity-mediated position-position coupling after eliminating the field."""
    g, k, dc, w = params.g, params.kappa, params.delta_c, params.omega
    gp = g**2 * k / (k**2 + (dc + w) ** 2)
    gm = g**2 * k / (k**2 + (dc - w) ** 2)
    return -((dc - w) * gm / k + (dc + w) * gp / k)


CovLike = Union[CovarianceState, np.ndarray]


def _mechanical_block(V: CovLike) -> np.ndarray:
    V = V.V if isinstance(V, CovarianceState) else np.asarray(V, dtype=float)
    if V.shape[0] < 4:
        raise ValueError("need at least two modes")
    block = V[:4, :4]
    nu = symplectic_eigenvalues(block)[0]
    if nu < 0.5 - PHYSICAL_TOL:
        raise ValueError(f"mechanical covariance block is unphysical (symplectic eigenvalue {nu:.10g})")
    return block


_PT = np.diag([1.0, 1.0, 1.0, -1.0])


def partial_transpose_eigenvalue(V: CovLike) -> float:
    """Smallest symplectic eigenvalue of the partially transposed particle block."""
    block = _mechanical_block(V)
    return float(symplectic_eigenvalues(_PT @ block @ _PT)[0])


def gaussian_log_negativity(V: CovLike) -> float:
    """Logarithmic negativity (base 2) between the two particles, field traced out."""
    nu = partial_transpose_eigenvalue(V)
    x = 2.0 * nu
    if x >= 1.0 - 1e-12:
        return 0.0
    return float(-np.log2(x))


def simon_criterion(V: CovLike, tol: float = 1e-12) -> bool:
    """True if the particle block violates the PPT condition, i.e. is entangled."""
    block = _mechanical_block(V)
    a, b, c = block[:2, :2], block[2:, 2:], block[:2, 2:]
    da, db, dc_ = np.linalg.det(a), np.linalg.det(b), np.linalg.det(c)
    J = _J
    invariant = (da * db + (0.25 - abs(dc_)) ** 2 - np.trace(a @ J @ c @ J @ b @ J @ c.T @ J)
                 - 0.25 * (da + db))
    return bool(invariant < -tol)


def two_mode_squeezed_covariance(r: float, field: bool = False) -> np.ndarray:
    """Covariance of a two-mode squeezed vacuum, optionally with a vacuum field mode."""
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    Z = np.diag([1.0, -1.0])
    V = 0.5 * np.block([[ch * np.eye(2), sh * Z], [sh * Z, ch * np.eye(2)]])
    if field:
        V = np.block([[V, np.zeros((4, 2))], [np.zeros((2, 4)), 0.5 * np.eye(2)]])
    return V
