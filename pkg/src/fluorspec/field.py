"""Spatial weights that turn the atomic dipole signal into an electric field.

The radial kernel

    F(r) = (1/r) int_0^inf dw sin(w r / c) / (omega0 + w)

equals ``f(omega0 r / c) / r`` with the auxiliary sine/cosine-integral
function ``f(a) = Ci(a) sin a - (Si(a) - pi/2) cos a``.  The weight tensor is

    w_ij = (1 / 2 pi^2) (-delta_ij laplacian + d_i d_j) F(|x|).

A second, independent evaluation of ``F`` sums the oscillatory integral
half-period by half-period (Gauss-Legendre per half-period) and accelerates
the alternating tail with the Euler transformation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants
from scipy.integrate import quad
from scipy.special import sici

from .core import NumericalFailure

C_LIGHT = constants.c
EPSILON0 = constants.epsilon_0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)

# above this argument f and g come from their asymptotic series; the Si/Ci
# combination cancels to ~1/a (f) and ~1/a^2 (g) and loses eps*a, eps*a^2
ASYMPTOTIC_FROM = 40.0


@dataclass(frozen=True)
class FieldWeight:
    position: np.ndarray
    tensor: np.ndarray  # m^-3
    omega0: float


def aux_fg(a):
    """Auxiliary functions ``f(a)`` and ``g(a)`` of the sine/cosine integrals.

    ``f' = -g`` and ``g' = f - 1/a``; at ``a = 0`` only ``f(0) = pi/2`` is finite.
    """
    a = np.asarray(a, dtype=float)
    zero = a == 0
    big = a >= ASYMPTOTIC_FROM
    safe = np.where(zero | big, 1.0, a)
    si, ci = sici(safe)
    s, c = np.sin(safe), np.cos(safe)
    f = np.where(zero, 0.5 * np.pi, ci * s - (si - 0.5 * np.pi) * c)
    g = np.where(zero, np.inf, -ci * c - (si - 0.5 * np.pi) * s)
    if np.any(big):
        fa, ga = _asymptotic_fg(a[big])
        f = np.array(f, copy=True)
        g = np.array(g, copy=True)
        f[big], g[big] = fa, ga
    return f, g


def _asymptotic_fg(a: np.ndarray):
    """``f ~ (1/a) sum (-1)^k (2k)!/a^2k`` and ``g ~ (1/a^2) sum (-1)^k (2k+1)!/a^2k``.

    Each series is cut at its smallest term (optimal truncation).
    """
    inv2 = 1.0 / (a * a)
    out = []
    for first in (1, 2):  # factorial offset: (2k)! for f, (2k+1)! for g
        term = np.ones_like(a)
        total = term.copy()
        live = np.ones(a.shape, dtype=bool)
        for k in range(1, 60):
            nxt = -term * (2 * k + first - 2) * (2 * k + first - 1) * inv2
            live &= np.abs(nxt) < np.abs(term)
            if not live.any():
                break
            total = np.where(live, total + nxt, total)
            term = np.where(live, nxt, term)
        out.append(total)
    return out[0] / a, out[1] * inv2


def _check_r(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)) or np.any(~np.isfinite(r)):
        raise ValueError("distance must be positive and finite")
    return r


def radial_kernel(r, omega0: float):
    """``F(r)`` in m^-1 via the special-function form."""
    r = _check_r(r)
    if omega0 < 0:
        raise ValueError("omega0 must be nonnegative")
    f, _ = aux_fg(omega0 * r / C_LIGHT)
    return f / r


def radial_kernel_derivatives(r, omega0: float):
    """``(F, F', F'')`` analytically from ``f' = -g``, ``g' = f - 1/a``."""
    r = _check_r(r)
    k = omega0 / C_LIGHT
    f, g = aux_fg(k * r)
    if omega0 == 0:
        g = np.zeros_like(f)  # enters only as k * g
    F = f / r
    F1 = -k * g / r - f / r**2
    F2 = -k * k * f / r + k / r**2 + 2.0 * k * g / r**2 + 2.0 * f / r**3
    return F, F1, F2


def _half_period_integrals(a: float, start: int, count: int) -> np.ndarray:
    """``int_{n pi}^{(n+1) pi} sin(u)/(a+u) du`` for ``n = start .. start+count-1``."""
    n = np.arange(start, start + count)[:, None]
    u = (n + 0.5 + 0.5 * _GL_X[None, :]) * np.pi
    return 0.5 * np.pi * (np.sin(u) / (a + u)) @ _GL_W


def _euler_tail(terms: np.ndarray) -> float:
    """Euler transform of ``sum_k (-1)^k b_k`` given ``terms[k] = (-1)^k b_k``."""
    b = np.abs(terms)
    total = 0.0
    scale = 0.5
    diffs = b.copy()
    for _ in range(len(b)):
        total += scale * diffs[0]
        diffs = np.diff(diffs)
        scale *= -0.5
        if diffs.size == 0:
            break
    sign = 1.0 if terms[0] > 0 else -1.0
    return sign * total


def oscillatory_integral(a: float, direct: int = 8, tail: int = 48, tol: float = 1e-13) -> float:
    """``int_0^inf sin(u)/(a+u) du`` by half-period sums and Euler acceleration.

    The integral is only conditionally convergent; it is defined as the
    limit of the (alternating, decreasing) half-period partial sums.
    Raises :class:`NumericalFailure` if two tail lengths disagree.
    """
    if a < 0:
        raise ValueError("a must be nonnegative")
    # the terms ~ 2/(a + n pi) are completely monotone in n for every a, so the
    # Euler tail can start after a fixed head; a long head only adds cancellation
    head_n = direct
    # the pole at u = -a spoils fixed-order Gauss rules on the first half-period
    first, _ = quad(lambda u: math.sin(u) / (a + u), 0.0, math.pi, epsabs=0.0, epsrel=1e-13, limit=200)
    head = first + _half_period_integrals(a, 1, head_n - 1).sum()
    estimates = []
    for m in (tail, tail + 16):
        t = _half_period_integrals(a, head_n, m)
        estimates.append(head + _euler_tail(t))
    if abs(estimates[0] - estimates[1]) > tol * max(abs(estimates[1]), 1e-300):
        raise NumericalFailure(f"Euler acceleration did not converge (a={a:g})")
    return float(estimates[1])


def radial_kernel_quadrature(r, omega0: float) -> np.ndarray:
    """``F(r)`` by accelerated quadrature; independent of the special functions."""
    r = np.atleast_1d(_check_r(r))
    return np.array([oscillatory_integral(omega0 * ri / C_LIGHT) / ri for ri in r])


def _tensor_from_radial(x: np.ndarray, F1: float, F2: float) -> np.ndarray:
    r = np.linalg.norm(x)
    xx = np.outer(x, x) / (r * r)
    eye = np.eye(3)
    lap = F2 + 2.0 * F1 / r
    hess = xx * (F2 - F1 / r) + eye * F1 / r
    return (-eye * lap + hess) / (2.0 * np.pi**2)


def weight_tensor(x, omega0: float) -> FieldWeight:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError("position must be a 3-vector")
    r = float(np.linalg.norm(x))
    if not r > 0:
        raise ValueError("detector position must be away from the atom (|x| > 0)")
    _, F1, F2 = radial_kernel_derivatives(r, omega0)
    return FieldWeight(x.copy(), _tensor_from_radial(x, float(F1), float(F2)), float(omega0))


def weight_tensor_fd(x, omega0: float, rel_step: float = 1e-4) -> np.ndarray:
    """Weight tensor from central finite differences of the special-function kernel."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    h = rel_step * r
    Fm, F0, Fp = radial_kernel(np.array([r - h, r, r + h]), omega0)
    F1 = (Fp - Fm) / (2 * h)
    F2 = (Fp - 2 * F0 + Fm) / (h * h)
    return _tensor_from_radial(x, F1, F2)


def angular_components(r, omega0: float):
    """Coefficients of ``delta_ij`` and ``x_i x_j / r^2`` in ``w_ij`` at distance ``r``."""
    _, F1, F2 = radial_kernel_derivatives(r, omega0)
    r = np.asarray(r, dtype=float)
    iso = (-(F2 + 2.0 * F1 / r) + F1 / r) / (2.0 * np.pi**2)
    radial = (F2 - F1 / r) / (2.0 * np.pi**2)
    return iso, radial


def loglog_slopes(r, omega0: float) -> dict:
    """Least-squares log-log slopes of the separated angular components."""
    r = np.asarray(r, dtype=float)
    iso, radial = angular_components(r, omega0)
    out = {}
    for name, comp in (("isotropic", iso), ("radial", radial)):
        out[name] = float(np.polyfit(np.log(r), np.log(np.abs(comp)), 1)[0])
    return out


def transverse_delta(x) -> np.ndarray:
    """Transverse delta function ``delta^T_ij(x)`` away from the origin."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    return (3.0 * np.outer(x, x) / r**2 - np.eye(3)) / (4.0 * np.pi * r**3)


def field_signal(weight: FieldWeight, d, sigmax_expectation: float) -> np.ndarray:
    """Electric field (V/m) at the detector: ``E_i = w_ij d_j <sigma_x> / epsilon0``.

    ``d`` is the real transition dipole in C m.  This is the single place
    where SI constants enter the field; the weight tensor is in m^-3.
    """
    d = np.asarray(d, dtype=float)
    if d.shape != (3,):
        raise ValueError("dipole moment must be a real 3-vector")
    return weight.tensor @ d * float(sigmax_expectation) / EPSILON0


def wavelength(omega0: float) -> float:
    return 2.0 * math.pi * C_LIGHT / omega0
