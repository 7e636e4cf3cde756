"""Parameters and closed-form scalars of the resonantly driven two-level atom.

All rates are angular frequencies in rad/s.  The interaction-picture density
matrix is stored in real Bloch coordinates ``(p00, re01, im01)`` where
``p00 = <0|rho|0>`` is the ground population and ``rho01 = re01 + i im01``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

#: omega0/gamma below this makes the demodulated (carrier-free) spectra inaccurate
MIN_CARRIER_RATIO = 100.0


class NumericalFailure(ArithmeticError):
    """A numerical procedure did not reach its stated accuracy."""


class CarrierRatioWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SystemParams:
    gamma: float
    rabi: float
    omega0: float

    @property
    def low_carrier_ratio(self) -> bool:
        return self.omega0 / self.gamma < MIN_CARRIER_RATIO

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "rabi": self.rabi, "omega0": self.omega0}


@dataclass(frozen=True)
class BlochState:
    p00: float
    re01: float
    im01: float

    @property
    def rho01(self) -> complex:
        return complex(self.re01, self.im01)

    def matrix(self) -> np.ndarray:
        r = self.rho01
        return np.array([[self.p00, r], [r.conjugate(), 1.0 - self.p00]])

    def as_array(self) -> np.ndarray:
        return np.array([self.p00, self.re01, self.im01])

    def positivity_violation(self) -> float:
        """How far the state is outside the physical set (0 when valid)."""
        p = self.p00
        excess = self.re01**2 + self.im01**2 - p * (1.0 - p)
        return max(0.0, -p, p - 1.0, excess)

    @classmethod
    def from_matrix(cls, rho: np.ndarray) -> "BlochState":
        rho = np.asarray(rho)
        return cls(float(rho[0, 0].real), float(rho[0, 1].real), float(rho[0, 1].imag))


@dataclass(frozen=True)
class BetaPair:
    """Coefficients of ``beta+ e^{i mu tau} + beta- e^{-i mu tau}``.

    Every pair here has the form ``beta± = even ∓ i odd / mu``, so that

        beta+ e^{i mu tau} + beta- e^{-i mu tau} = 2 even cos(mu tau) + 2 odd sin(mu tau)/mu

    which stays finite at ``mu = 0``.  ``plus``/``minus`` are ``None`` there
    (``degenerate`` is set) and downstream code uses ``even``/``odd`` instead.
    """

    plus: complex | None
    minus: complex | None
    even: float
    odd: float
    degenerate: bool


def validate_params(gamma, rabi, omega0) -> SystemParams:
    """Check raw scalars and build a :class:`SystemParams`.

    Raises ``ValueError`` on non-finite input, ``gamma <= 0``, ``rabi < 0`` or
    ``omega0 <= 0``.  A :class:`CarrierRatioWarning` is emitted (and
    ``low_carrier_ratio`` is true) when ``omega0/gamma < 100``.
    """
    try:
        g, r, w = float(gamma), float(rabi), float(omega0)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"parameters must be real numbers: {exc}") from None
    for name, v in (("gamma", g), ("rabi", r), ("omega0", w)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")
    if g <= 0:
        raise ValueError(f"nonpositive decay rate gamma={g!r}")
    if r < 0:
        raise ValueError(f"negative Rabi frequency rabi={r!r}")
    if w <= 0:
        raise ValueError(f"nonpositive transition frequency omega0={w!r}")
    params = SystemParams(g, r, w)
    if params.low_carrier_ratio:
        warnings.warn(
            f"omega0/gamma = {w / g:.3g} < {MIN_CARRIER_RATIO:g}: demodulated spectra "
            "neglect the counter-rotating image and lose accuracy",
            CarrierRatioWarning,
            stacklevel=2,
        )
    return params


def sideband_rate(params: SystemParams) -> complex:
    """``mu = sqrt(16 Omega^2 - Gamma^2) / 4`` on the principal branch.

    Real and nonnegative when ``4 Omega >= Gamma``, otherwise ``i * kappa``
    with ``kappa > 0``.  All closed forms are even in ``mu`` so only
    consistency of the branch matters.
    """
    g, r = params.gamma, params.rabi
    return 0.25 * np.sqrt(complex(16.0 * r * r - g * g))


def sideband_rate_squared(params: SystemParams) -> float:
    g, r = params.gamma, params.rabi
    return (16.0 * r * r - g * g) / 16.0


def stationary_state(params: SystemParams) -> BlochState:
    g, r = params.gamma, params.rabi
    d = g * g + 2.0 * r * r
    return BlochState((g * g + r * r) / d, 0.0, g * r / d)


def excited_population(params: SystemParams) -> float:
    g, r = params.gamma, params.rabi
    return r * r / (g * g + 2.0 * r * r)


def persistent_field_offset(params: SystemParams) -> float:
    """``4 Gamma^2 Omega^2 / (Gamma^2 + 2 Omega^2)^2``, i.e. ``(2 Im rho01_ss)^2``."""
    g, r = params.gamma, params.rabi
    d = g * g + 2.0 * r * r
    return 4.0 * g * g * r * r / (d * d)


def _pair(params: SystemParams, even: float, odd: float) -> BetaPair:
    mu = sideband_rate(params)
    if mu == 0:
        return BetaPair(None, None, even, odd, True)
    return BetaPair(even - 1j * odd / mu, even + 1j * odd / mu, even, odd, False)


def beta_field(params: SystemParams) -> BetaPair:
    """Coefficients of the oscillating part of the field correlation envelope."""
    g, r = params.gamma, params.rabi
    d = g * g + 2.0 * r * r
    even = (g**4 + 4.0 * r**4) / (2.0 * d * d)
    odd = g / 8.0 * (1.0 - 12.0 * g * g * r * r / (d * d))
    return _pair(params, even, odd)


def beta_mollow(params: SystemParams) -> BetaPair:
    """Coefficients of the closed-form Mollow spectrum."""
    g, r = params.gamma, params.rabi
    d = g * g + 2.0 * r * r
    even = -(g * g - 2.0 * r * r) / (4.0 * d)
    odd = g / 16.0 * (1.0 - 12.0 * r * r / d)
    return _pair(params, even, odd)


def damped_cos_sinc(params: SystemParams, tau, rate: float):
    """Return ``e^{-rate tau} cos(mu tau)`` and ``e^{-rate tau} sin(mu tau)/mu``.

    Evaluated in real arithmetic for every sign of ``mu^2`` (hyperbolic
    functions when ``mu`` is imaginary, ``tau`` at ``mu = 0``), written with
    decaying exponentials so large ``tau`` cannot overflow.
    """
    tau = np.asarray(tau, dtype=float)
    m2 = sideband_rate_squared(params)
    env = np.exp(-rate * tau)
    if m2 > 0:
        m = math.sqrt(m2)
        return env * np.cos(m * tau), env * np.sin(m * tau) / m
    if m2 == 0:
        return env, env * tau
    k = math.sqrt(-m2)
    up = np.exp((k - rate) * tau)
    down = np.exp(-(k + rate) * tau)
    cosh = 0.5 * (up + down)
    # sinh(k t)/k loses digits for tiny k*t; use the series there
    small = k * tau < 1e-3
    x = k * tau
    sinc = np.where(small, env * tau * (1.0 + x * x / 6.0 + x**4 / 120.0), 0.5 * (up - down) / k)
    return cosh, sinc
