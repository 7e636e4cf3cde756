"""Interaction-picture time evolution of the driven, damped two-level atom.

The master equation in the frame rotating at omega0 is

    d rho/dt = -i [ (Omega/2) sigma_x, rho ] + Gamma D[sigma_-] rho

and in Bloch coordinates ``v = (p00, re01, im01)`` it reads ``dv/dt = L v + b``.
The real coherence decouples and decays at Gamma/2; ``(p00, im01)`` relax to
the stationary state through the 2x2 matrix ``A(tau)``.

Besides the closed form there are two independent integrator oracles:
:func:`evolve_numeric` (real coordinates) and :func:`evolve_operator_numeric`
(the Lindblad generator applied to arbitrary complex 2x2 matrices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import BlochState, NumericalFailure, SystemParams, damped_cos_sinc, stationary_state

POSITIVITY_SLACK = 1e-10

SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |1><0|
SIGMA_MINUS = SIGMA_PLUS.T.copy()  # |0><1|
SIGMA_X = SIGMA_PLUS + SIGMA_MINUS


@dataclass(frozen=True)
class Propagator:
    tau: float
    coherence_factor: float
    amatrix: np.ndarray


@dataclass(frozen=True)
class LiouvillianMatrix:
    L: np.ndarray
    b: np.ndarray

    def stationary(self) -> np.ndarray:
        return np.linalg.solve(self.L, -self.b)


def _check_tau(tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if np.any(~np.isfinite(tau)) or np.any(tau < 0):
        raise ValueError("tau must be finite and nonnegative")
    return tau


def amatrix(params: SystemParams, tau) -> np.ndarray:
    """``A(tau)`` with shape ``tau.shape + (2, 2)``; real for every regime of mu."""
    tau = _check_tau(tau)
    c, s = damped_cos_sinc(params, tau, 0.75 * params.gamma)
    g, r = params.gamma, params.rabi
    out = np.empty(tau.shape + (2, 2))
    out[..., 0, 0] = c - 0.25 * g * s
    out[..., 0, 1] = -r * s
    out[..., 1, 0] = r * s
    out[..., 1, 1] = c + 0.25 * g * s
    return out


def propagator(params: SystemParams, tau: float) -> Propagator:
    tau = float(_check_tau(tau))
    return Propagator(tau, float(np.exp(-0.5 * params.gamma * tau)), amatrix(params, tau))


def liouvillian(params: SystemParams) -> LiouvillianMatrix:
    g, r = params.gamma, params.rabi
    L = np.array(
        [
            [-g, 0.0, -r],
            [0.0, -0.5 * g, 0.0],
            [r, 0.0, -0.5 * g],
        ]
    )
    b = np.array([g, 0.0, -0.5 * r])
    return LiouvillianMatrix(L, b)


def evolve_coords(params: SystemParams, p00, re01, im01, trace, tau):
    """Evolve the Bloch coordinates of a Hermitian operator with the given trace.

    The affine offset scales with the trace, so traceless operators only see
    the homogeneous part of the map.  Inputs broadcast against ``tau``.
    """
    tau = _check_tau(tau)
    ss = stationary_state(params)
    A = amatrix(params, tau)
    f = np.exp(-0.5 * params.gamma * tau)
    dp = np.asarray(p00) - trace * ss.p00
    di = np.asarray(im01) - trace * ss.im01
    p_new = A[..., 0, 0] * dp + A[..., 0, 1] * di + trace * ss.p00
    i_new = A[..., 1, 0] * dp + A[..., 1, 1] * di + trace * ss.im01
    return p_new, f * np.asarray(re01), i_new


def evolve(params: SystemParams, state: BlochState, tau: float) -> BlochState:
    if state.positivity_violation() > POSITIVITY_SLACK:
        raise ValueError(f"not a valid density matrix: {state}")
    p, re, im = evolve_coords(params, state.p00, state.re01, state.im01, 1.0, tau)
    return BlochState(float(p), float(re), float(im))


def _hermitian_coords(H: np.ndarray):
    return H[..., 0, 0].real, H[..., 0, 1].real, H[..., 0, 1].imag, (H[..., 0, 0] + H[..., 1, 1]).real


def _coords_to_matrix(p00, re01, im01, trace) -> np.ndarray:
    p00 = np.asarray(p00, dtype=float)
    out = np.empty(p00.shape + (2, 2), dtype=complex)
    r = np.asarray(re01) + 1j * np.asarray(im01)
    out[..., 0, 0] = p00
    out[..., 0, 1] = r
    out[..., 1, 0] = np.conj(r)
    out[..., 1, 1] = trace - p00
    return out


def evolve_operator(params: SystemParams, X: np.ndarray, tau) -> np.ndarray:
    """Apply the evolution superoperator to an arbitrary complex 2x2 matrix.

    ``X = H1 + i H2`` with Hermitian ``H1, H2``; each part is evolved with the
    trace-affine Bloch map and the results recombined.  Returns an array of
    shape ``tau.shape + (2, 2)``.
    """
    X = np.asarray(X, dtype=complex)
    H1 = 0.5 * (X + X.conj().T)
    H2 = -0.5j * (X - X.conj().T)
    parts = []
    for H in (H1, H2):
        p, re, im, tr = _hermitian_coords(H)
        parts.append(_coords_to_matrix(*evolve_coords(params, p, re, im, tr, tau), tr))
    return parts[0] + 1j * parts[1]


def lindblad_rhs(params: SystemParams, X: np.ndarray) -> np.ndarray:
    H = 0.5 * params.rabi * SIGMA_X
    n = SIGMA_PLUS @ SIGMA_MINUS
    comm = H @ X - X @ H
    return -1j * comm + params.gamma * (SIGMA_MINUS @ X @ SIGMA_PLUS - 0.5 * (n @ X + X @ n))


def _solve(fun, y0, taus, rtol, atol):
    taus = _check_tau(np.atleast_1d(taus))
    if taus.size > 1 and np.any(np.diff(taus) < 0):
        raise ValueError("tau grid must be ascending")
    t_end = float(taus[-1])
    if t_end == 0.0:
        return np.repeat(np.asarray(y0)[:, None], taus.size, axis=1)
    sol = solve_ivp(fun, (0.0, t_end), y0, method="DOP853", t_eval=taus, rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalFailure(f"integration failed: {sol.message}")
    return sol.y


def evolve_numeric_path(params: SystemParams, state: BlochState, taus, rtol=1e-12, atol=1e-12) -> np.ndarray:
    """Integrate ``dv/dt = L v + b``; rows of the result are ``(p00, re01, im01)``."""
    liou = liouvillian(params)
    y = _solve(lambda t, v: liou.L @ v + liou.b, state.as_array(), taus, rtol, atol)
    return y.T


def evolve_numeric(params: SystemParams, state: BlochState, tau: float, rtol=1e-12, atol=1e-12) -> BlochState:
    p, re, im = evolve_numeric_path(params, state, [float(tau)], rtol, atol)[-1]
    return BlochState(float(p), float(re), float(im))


def evolve_operator_numeric(params: SystemParams, X: np.ndarray, taus, rtol=1e-12, atol=1e-12) -> np.ndarray:
    """Integrate the Lindblad generator directly on a complex 2x2 matrix."""
    X = np.asarray(X, dtype=complex)

    def rhs(t, y):
        return lindblad_rhs(params, y.reshape(2, 2)).ravel()

    y = _solve(rhs, X.ravel(), taus, rtol, atol)
    return y.T.reshape(-1, 2, 2)


def trace_distance(a: BlochState, b: BlochState) -> float:
    dp = a.p00 - b.p00
    return float(np.sqrt(dp * dp + (a.re01 - b.re01) ** 2 + (a.im01 - b.im01) ** 2))
