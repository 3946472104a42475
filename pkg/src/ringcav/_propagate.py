"""Propagators for the non-Hermitian drift between quantum jumps.

Both propagators advance an unnormalized state under
dpsi/dt = -i H_eff psi and expose the same small interface:

    prop.start(t, psi, t_bound)
    t0, t1, psi1, interp = prop.step()

``interp(s)`` returns the state at any s in [t0, t1] and is used to place
jumps by bisection on the norm. ``step`` never overshoots ``t_bound``.
"""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.integrate import DOP853
from scipy.sparse.csgraph import connected_components

from .errors import DimensionError, NumericalError

Step = Tuple[float, float, np.ndarray, Callable[[float], np.ndarray]]

SPECTRAL_MAX_BLOCK = 4096
SPECTRAL_MAX_COND = 1e8


class RKPropagator:
    """Adaptive DOP853 (8th order embedded Runge-Kutta) stepping.

    ``energy_shift`` is subtracted from the generator; it only changes a
    global phase but keeps the solution slowly varying, which lets the
    error control take longer steps.
    """

    name = "rk"

    def __init__(self, H_eff: sp.spmatrix, rtol: float = 1e-8, atol: float = 1e-10, energy_shift: float = 0.0):
        n = H_eff.shape[0]
        self._G = (-1j * (sp.csr_matrix(H_eff) - energy_shift * sp.identity(n, format="csr"))).tocsr()
        self.rtol = rtol
        self.atol = atol
        self._h = None
        self._solver = None

    def _rhs(self, t, y):
        return self._G @ y

    def start(self, t: float, psi: np.ndarray, t_bound: float):
        self._solver = DOP853(self._rhs, t, psi, t_bound, rtol=self.rtol, atol=self.atol,
                              first_step=None if self._h is None else min(self._h, t_bound - t))

    def step(self) -> Step:
        s = self._solver
        msg = s.step()
        if s.status == "failed":
            raise NumericalError(f"Runge-Kutta step failed at t={s.t:.6g}: {msg}")
        if s.status == "running":
            # the last step of a segment is clipped to the bound; don't carry that forward
            self._h = s.step_size
        return s.t_old, s.t, s.y.copy(), s.dense_output()


class SpectralPropagator:
    """Exact propagation through an eigendecomposition of H_eff.

    H_eff is split into its connected blocks and each block is diagonalized
    once, H_b = V_b diag(e_b) V_b^-1. A step always covers the whole segment.
    Suited to many long trajectories with one fixed generator, where the
    decomposition cost is paid once.
    """

    name = "spectral"

    def __init__(self, H_eff: sp.spmatrix, max_block: int = SPECTRAL_MAX_BLOCK, max_cond: float = SPECTRAL_MAX_COND):
        H_eff = sp.csr_matrix(H_eff)
        n = H_eff.shape[0]
        nblocks, labels = connected_components(abs(H_eff) + sp.identity(n), directed=False)
        self.dim = n
        self.blocks = []
        for b in range(nblocks):
            idx = np.flatnonzero(labels == b)
            if idx.size > max_block:
                raise DimensionError(f"spectral block of size {idx.size} exceeds limit {max_block}")
            M = H_eff[idx][:, idx].toarray()
            evals, V = la.eig(M)
            if evals.imag.max() > 1e-9 * max(1.0, np.abs(evals).max()):
                raise NumericalError("generator has eigenvalues with positive imaginary part (gain)")
            cond = np.linalg.cond(V)
            if not cond < max_cond:
                raise NumericalError(f"eigenvector matrix is ill-conditioned (cond={cond:.3g}); use the rk method")
            self.blocks.append((idx, evals, V, la.lu_factor(V)))
        self._t = None
        self._coeffs = None
        self._t_bound = None

    def _state(self, coeffs, dt: float) -> np.ndarray:
        out = np.empty(self.dim, dtype=complex)
        for (idx, evals, V, _), c in zip(self.blocks, coeffs):
            out[idx] = V @ (np.exp(-1j * evals * dt) * c)
        return out

    def start(self, t: float, psi: np.ndarray, t_bound: float):
        self._t = t
        self._t_bound = t_bound
        self._coeffs = [la.lu_solve(lu, psi[idx]) for idx, _, _, lu in self.blocks]

    def step(self) -> Step:
        t0, t1, coeffs = self._t, self._t_bound, self._coeffs

        def interp(s):
            return self._state(coeffs, s - t0)

        psi1 = interp(t1)
        self._coeffs = [np.exp(-1j * evals * (t1 - t0)) * c for (_, evals, _, _), c in zip(self.blocks, coeffs)]
        self._t = t1
        return t0, t1, psi1, interp


def make_propagator(method: str, H_eff: sp.spmatrix, rtol: float = 1e-8, atol: float = 1e-10,
                    energy_shift: float = 0.0):
    if method == "rk":
        return RKPropagator(H_eff, rtol=rtol, atol=atol, energy_shift=energy_shift)
    if method == "spectral":
        return SpectralPropagator(H_eff)
    raise ValueError(f"unknown propagation method {method!r}; expected 'rk' or 'spectral'")
