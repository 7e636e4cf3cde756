"""Two-time correlation functions of the fluorescence signal.

Every function returns the slowly varying *envelope* of a correlation
function; the optical carrier is never sampled.  For a real signal the
carrier is ``cos(omega0 tau)`` and

    G(tau) = envelope(tau) cos(omega0 tau) + quadrature(tau) sin(omega0 tau),

for the Mollow function it is ``exp(i omega0 tau)``.

The time average over ``t`` in the conditional correlation only enters
through the measurement phase ``theta = omega0 t`` and the integrand is a
trigonometric polynomial of degree <= 3 in ``theta``.  A uniform rule with
``THETA_NODES >= 4`` nodes therefore averages it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BlochState,
    SystemParams,
    beta_field,
    damped_cos_sinc,
    persistent_field_offset,
    stationary_state,
)
from .dynamics import SIGMA_MINUS, SIGMA_PLUS, evolve_operator, evolve_operator_numeric

THETA_NODES = 8
EIGENVALUES = (1.0, -1.0)


@dataclass(frozen=True)
class MeasurementBasis:
    phase: float
    eigenvalues: tuple
    projectors: tuple  # BlochState per eigenvalue
    matrices: np.ndarray = field(repr=False)  # shape (2, 2, 2)


@dataclass
class EnvelopeSeries:
    tau: np.ndarray
    values: np.ndarray
    carrier: str  # "cos" or "exp"
    persistent_offset: complex | float = 0.0
    offset_subtracted: bool = False
    quadrature: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.values = np.asarray(self.values)
        if self.carrier not in ("cos", "exp"):
            raise ValueError(f"unknown carrier {self.carrier!r}")
        if self.tau.ndim != 1 or self.tau.shape != self.values.shape:
            raise ValueError("tau and values must be 1-d arrays of equal length")
        if self.tau.size and (self.tau[0] != 0.0 or np.any(np.diff(self.tau) <= 0)):
            raise ValueError("tau grid must start at 0 and be strictly ascending")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("envelope values must be finite")

    def decaying_part(self) -> np.ndarray:
        """Envelope with the persistent (delta-peak) constant removed."""
        if self.offset_subtracted:
            return self.values
        return self.values - self.persistent_offset

    def positive_frequency(self) -> np.ndarray:
        """Complex envelope multiplying ``exp(+i omega0 tau)``."""
        c = self.decaying_part()
        return 0.5 * c if self.carrier == "cos" else c


def _check_grid(tau_grid) -> np.ndarray:
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size == 0:
        raise ValueError("tau grid must be a non-empty 1-d array")
    if tau[0] != 0.0 or np.any(np.diff(tau) <= 0):
        raise ValueError("tau grid must start at 0 and be strictly ascending")
    return tau


def sigma_x_matrix(phase: float) -> np.ndarray:
    """Interaction-picture ``sigma_x`` at carrier phase ``theta``: ``e^{i theta} sigma+ + h.c.``"""
    e = np.exp(1j * phase)
    return e * SIGMA_PLUS + np.conj(e) * SIGMA_MINUS


def projectors(phase: float) -> MeasurementBasis:
    """Eigenprojectors of ``sigma_x(theta)`` onto ``(|0> ± e^{i theta}|1>)/sqrt 2``."""
    c, s = np.cos(phase), np.sin(phase)
    states = (BlochState(0.5, 0.5 * c, -0.5 * s), BlochState(0.5, -0.5 * c, 0.5 * s))
    mats = np.stack([st.matrix() for st in states])
    return MeasurementBasis(float(phase), EIGENVALUES, states, mats)


def theta_nodes(n: int = THETA_NODES) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def _readout(X: np.ndarray, phase: float) -> np.ndarray:
    """``sum_j lambda_j Tr[P_j(theta) X]`` for a stack of matrices ``X``."""
    P = projectors(phase).matrices
    tr = np.einsum("jab,...ba->...j", P, X)
    return tr @ np.asarray(EIGENVALUES)


def conditional_integrand(params: SystemParams, tau_grid, theta: float):
    """Envelope and quadrature contributions at a single measurement phase.

    Implements the measurement-conditioned product literally: project the
    stationary state with ``P_i(theta)`` (unnormalised sandwich), propagate
    each subensemble, read out ``sigma_x`` at ``theta + omega0 tau``.
    """
    tau = _check_grid(tau_grid)
    rho = stationary_state(params).matrix()
    basis = projectors(theta)
    X = np.zeros(tau.shape + (2, 2), dtype=complex)
    for lam, P in zip(basis.eigenvalues, basis.matrices):
        X += lam * evolve_operator(params, P @ rho @ P, tau)
    return _readout(X, theta).real, _readout(X, theta + 0.5 * np.pi).real


def conditional_correlation(params: SystemParams, tau_grid, n_theta: int = THETA_NODES) -> EnvelopeSeries:
    if n_theta < 4:
        raise ValueError("at least 4 phase nodes are needed for an exact average")
    tau = _check_grid(tau_grid)
    env = np.zeros_like(tau)
    quad = np.zeros_like(tau)
    for theta in theta_nodes(n_theta):
        e, q = conditional_integrand(params, tau, theta)
        env += e
        quad += q
    env /= n_theta
    quad /= n_theta
    return EnvelopeSeries(
        tau, env, "cos", 0.5 * persistent_field_offset(params), quadrature=quad, label="conditional"
    )


def correlation_closed(params: SystemParams, tau_grid) -> EnvelopeSeries:
    """Closed-form envelope of the conditional correlation function.

    ``beta+ e^{i mu tau} + beta- e^{-i mu tau}`` is evaluated as
    ``2 even cos(mu tau) + 2 odd sin(mu tau)/mu``, which is real and finite
    for every ``mu`` including ``mu = 0``.
    """
    tau = _check_grid(tau_grid)
    beta = beta_field(params)
    c, s = damped_cos_sinc(params, tau, 0.75 * params.gamma)
    offset = persistent_field_offset(params)
    bracket = np.exp(-0.5 * params.gamma * tau) + 2.0 * (beta.even * c + beta.odd * s) + offset
    return EnvelopeSeries(tau, 0.5 * bracket, "cos", 0.5 * offset, quadrature=np.zeros_like(tau), label="closed")


def regression_correlation(params: SystemParams, A: np.ndarray, B: np.ndarray, tau_grid, numeric=False) -> np.ndarray:
    """Quantum-regression value ``Tr[A T_tau(B rho_ss)]`` on the grid.

    With ``numeric=True`` the Lindblad generator is integrated directly on
    the complex matrix instead of using the closed-form Bloch map.
    """
    tau = _check_grid(tau_grid)
    Y = np.asarray(B, dtype=complex) @ stationary_state(params).matrix()
    X = evolve_operator_numeric(params, Y, tau) if numeric else evolve_operator(params, Y, tau)
    return np.einsum("ab,nba->n", np.asarray(A, dtype=complex), X)


def mollow_correlation(params: SystemParams, tau_grid, numeric=False) -> EnvelopeSeries:
    """``<sigma+(tau) sigma-(0)>_ss`` with the ``exp(i omega0 tau)`` carrier removed.

    The coherent offset ``|rho01_ss|^2`` is retained in the values and
    recorded as ``persistent_offset``.
    """
    tau = _check_grid(tau_grid)
    C = regression_correlation(params, SIGMA_PLUS, SIGMA_MINUS, tau, numeric=numeric)
    ss = stationary_state(params)
    return EnvelopeSeries(tau, C, "exp", abs(ss.rho01) ** 2, label="mollow")


def unconditional_sigmax_correlation(params: SystemParams, tau_grid, n_theta: int = THETA_NODES) -> EnvelopeSeries:
    """Phase-averaged ``Tr[sigma_x(t+tau) T_tau(sigma_x(t) rho_ss)]``.

    Same phase-average as :func:`conditional_correlation` but without the
    projective measurement at ``t``.  The product ``sigma_x rho_ss`` is not
    Hermitian, so envelope and quadrature are complex in general.
    """
    if n_theta < 4:
        raise ValueError("at least 4 phase nodes are needed for an exact average")
    tau = _check_grid(tau_grid)
    rho = stationary_state(params).matrix()
    env = np.zeros(tau.shape, dtype=complex)
    quad = np.zeros(tau.shape, dtype=complex)
    for theta in theta_nodes(n_theta):
        X = evolve_operator(params, sigma_x_matrix(theta) @ rho, tau)
        env += np.einsum("ab,nba->n", sigma_x_matrix(theta), X)
        quad += np.einsum("ab,nba->n", sigma_x_matrix(theta + 0.5 * np.pi), X)
    env /= n_theta
    quad /= n_theta
    return EnvelopeSeries(
        tau, env, "cos", 0.5 * persistent_field_offset(params), quadrature=quad, label="unconditional"
    )


def sigmax_regression_parts(params: SystemParams, tau_grid, numeric=False):
    """``(Tr[sigma+ T(sigma- rho)], Tr[sigma- T(sigma+ rho)])``.

    The phase-averaged unconditional correlation equals
    ``(first + second) cos(omega0 tau) + i (first - second) sin(omega0 tau)``.
    """
    first = regression_correlation(params, SIGMA_PLUS, SIGMA_MINUS, tau_grid, numeric=numeric)
    second = regression_correlation(params, SIGMA_MINUS, SIGMA_PLUS, tau_grid, numeric=numeric)
    return first, second


def direct_phase_average(params: SystemParams, tau_grid, carrier_phase, n_theta: int = 1024) -> np.ndarray:
    """Brute-force check of the phase average at given carrier phases ``omega0 tau``.

    Evaluates the full conditional integrand with the projectors at
    ``theta + carrier_phase`` on ``n_theta`` points.
    """
    tau = _check_grid(tau_grid)
    phi = np.broadcast_to(np.asarray(carrier_phase, dtype=float), tau.shape)
    rho = stationary_state(params).matrix()
    total = np.zeros_like(tau)
    for theta in theta_nodes(n_theta):
        basis = projectors(theta)
        X = np.zeros(tau.shape + (2, 2), dtype=complex)
        for lam, P in zip(basis.eigenvalues, basis.matrices):
            X += lam * evolve_operator(params, P @ rho @ P, tau)
        for k in range(tau.size):
            total[k] += _readout(X[k], theta + phi[k]).real
    return total / n_theta
