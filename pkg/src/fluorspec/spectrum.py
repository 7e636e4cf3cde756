"""Power spectra: closed forms, a numeric transform oracle, peak analysis.

Frequencies are offsets ``delta = omega - omega0`` in rad/s; spectral
densities carry units of seconds.  The numeric transform uses

    S(omega0 + delta) = 2 Re  int_0^inf c(tau) e^{-i delta tau} dtau

with ``c`` the positive-frequency complex envelope (half the real envelope
for a ``cos`` carrier).  For a real, even correlation function this is the
full two-sided Fourier transform with the image at ``-omega0`` dropped.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (
    NumericalFailure,
    SystemParams,
    beta_field,
    beta_mollow,
    excited_population,
    sideband_rate,
    sideband_rate_squared,
)
from .correlation import EnvelopeSeries, correlation_closed, mollow_correlation

DECAY_TOLERANCE = 1e-6
IMAG_RESIDUE = 1e-12
MIN_PEAK_FRACTION = 1e-3


@dataclass
class SpectrumSeries:
    delta: np.ndarray
    values: np.ndarray
    normalized: bool = False
    params: SystemParams | None = None
    label: str = ""

    def normalize(self) -> "SpectrumSeries":
        """Divide by the value at ``delta = 0`` (interpolated if 0 is not on the grid)."""
        ref = float(np.interp(0.0, self.delta, self.values))
        return SpectrumSeries(self.delta, self.values / ref, True, self.params, self.label)


@dataclass
class Peak:
    position: float
    height: float
    hwhm: float | None


@dataclass
class PeakReport:
    central: Peak | None
    sidebands: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    grid_step: float = 0.0

    @property
    def n_peaks(self) -> int:
        return len(self.sidebands) + (self.central is not None)

    def as_dict(self) -> dict:
        return {
            "n_peaks": self.n_peaks,
            "central": None if self.central is None else asdict(self.central),
            "sidebands": [asdict(p) for p in self.sidebands],
            "ratios": list(self.ratios),
            "grid_step": self.grid_step,
        }


# --------------------------------------------------------------------------
# closed forms


def _lorentz_denominator(params: SystemParams, x):
    g = params.gamma
    return 9.0 * g * g + 16.0 * x * x


def _closedform_beta_sum(params: SystemParams, delta, even: float, odd: float) -> np.ndarray:
    """``2Re[z(delta+mu) beta+] + 2Re[z(delta-mu) beta-]`` with ``z(x) = (3G - 4ix)/(9G^2 + 16x^2)``.

    For ``beta± = even ∓ i odd/mu`` the sum is an even function of ``mu``,
    so it is evaluated in complex arithmetic with imaginary ``mu`` allowed
    and the ``mu -> 0`` limit taken analytically.
    """
    delta = np.asarray(delta, dtype=float)
    g = params.gamma
    mu = sideband_rate(params)
    if mu == 0:
        d = _lorentz_denominator(params, delta)
        return 12.0 * even * g / d - 16.0 * odd * (9.0 * g * g - 16.0 * delta * delta) / (d * d)
    dp = _lorentz_denominator(params, delta + mu)
    dm = _lorentz_denominator(params, delta - mu)
    val = 6.0 * even * g * (1.0 / dp + 1.0 / dm) - 8.0 * odd / mu * ((delta + mu) / dp - (delta - mu) / dm)
    residue = np.max(np.abs(val.imag), initial=0.0)
    scale = np.max(np.abs(val.real), initial=0.0)
    if residue > IMAG_RESIDUE * max(scale, 1.0 / g):
        raise NumericalFailure(f"imaginary residue {residue:.3g} in closed-form spectrum")
    return val.real


def _closedform_term(params: SystemParams, delta, beta: complex, sign: int) -> np.ndarray:
    """``2Re[(3G - 4i(delta ± mu)) beta / (9G^2 + 16(delta ± mu)^2)]`` for real ``mu``."""
    x = np.asarray(delta, dtype=float) + sign * sideband_rate(params).real
    g = params.gamma
    return 2.0 * np.real((3.0 * g - 4j * x) * beta / _lorentz_denominator(params, x))


def central_lorentzian(params: SystemParams, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    g = params.gamma
    return 2.0 * g / (g * g + 4.0 * delta * delta)


def field_spectrum_terms(params: SystemParams, delta) -> dict:
    """The three closed-form terms of the field spectrum (real ``mu`` only)."""
    if sideband_rate_squared(params) <= 0:
        raise ValueError("per-term split requires a real, nonzero sideband rate")
    beta = beta_field(params)
    return {
        "central": central_lorentzian(params, delta),
        "plus": _closedform_term(params, delta, beta.plus, +1),
        "minus": _closedform_term(params, delta, beta.minus, -1),
    }


def mollow_spectrum_terms(params: SystemParams, delta) -> dict:
    """The three closed-form terms of the Mollow spectrum, prefactor included."""
    if sideband_rate_squared(params) <= 0:
        raise ValueError("per-term split requires a real, nonzero sideband rate")
    beta = beta_mollow(params)
    pref = 2.0 * excited_population(params)
    return {
        "central": pref * 2.0 * central_lorentzian(params, delta),
        "plus": pref * 2.0 * _closedform_term(params, delta, beta.plus, +1),
        "minus": pref * 2.0 * _closedform_term(params, delta, beta.minus, -1),
    }


def spectrum_field(params: SystemParams, delta_grid) -> SpectrumSeries:
    delta = np.asarray(delta_grid, dtype=float)
    beta = beta_field(params)
    vals = central_lorentzian(params, delta) + _closedform_beta_sum(params, delta, beta.even, beta.odd)
    return SpectrumSeries(delta, vals, False, params, "field")


def spectrum_mollow_closedform(params: SystemParams, delta_grid) -> SpectrumSeries:
    delta = np.asarray(delta_grid, dtype=float)
    beta = beta_mollow(params)
    bracket = 2.0 * central_lorentzian(params, delta) + 2.0 * _closedform_beta_sum(params, delta, beta.even, beta.odd)
    return SpectrumSeries(delta, 2.0 * excited_population(params) * bracket, False, params, "mollow")


# --------------------------------------------------------------------------
# numeric transform


def _panel_moments(theta: np.ndarray) -> np.ndarray:
    """``M_k = int_0^2 s^k e^{-i theta s} ds`` for ``k = 0, 1, 2``; shape ``(3, n)``."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty((3, theta.size), dtype=complex)
    small = np.abs(theta) <= 1.0
    if np.any(small):
        a = -1j * theta[small]
        term = np.ones_like(a)
        acc = np.zeros((3, a.size), dtype=complex)
        two_pow = 1.0
        for n in range(40):
            for k in range(3):
                acc[k] += term * two_pow * 2.0 ** (k + 1) / (n + k + 1)
            term = term * a / (n + 1)
            two_pow *= 2.0
        out[:, small] = acc
    big = ~small
    if np.any(big):
        a = -1j * theta[big]
        e2 = np.exp(2.0 * a)
        m0 = (e2 - 1.0) / a
        m1 = 2.0 * e2 / a - m0 / a
        m2 = 4.0 * e2 / a - 2.0 * m1 / a
        out[:, big] = np.stack([m0, m1, m2])
    return out


def fourier_one_sided(tau, values, delta, chunk: int = 256) -> np.ndarray:
    """``int_0^{tau_max} values(tau) e^{-i delta tau} dtau`` by Filon-Simpson quadrature.

    ``values`` is interpolated by piecewise quadratics on pairs of intervals
    and each panel is integrated exactly against the exponential, so the
    error does not grow with ``delta * h``.  Needs a uniform grid with an
    even number of intervals.
    """
    tau = np.asarray(tau, dtype=float)
    f = np.asarray(values, dtype=complex)
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    n_int = tau.size - 1
    if n_int < 2 or n_int % 2:
        raise ValueError("Filon quadrature needs an even number (>= 2) of tau intervals")
    h = (tau[-1] - tau[0]) / n_int
    if not np.allclose(np.diff(tau), h, rtol=1e-9, atol=0.0):
        raise ValueError("Filon quadrature needs a uniform tau grid")
    starts = tau[0:-1:2]
    f0, f1, f2 = f[0:-1:2], f[1::2], f[2::2]
    # Lagrange basis on s = 0, 1, 2 expressed through the moments M0, M1, M2
    lag = np.array([[1.0, -1.5, 0.5], [0.0, 2.0, -1.0], [0.0, -0.5, 0.5]])
    out = np.empty(delta.size, dtype=complex)
    for lo in range(0, delta.size, chunk):
        d = delta[lo : lo + chunk]
        w = lag @ _panel_moments(d * h)  # (3, nd)
        phase = np.exp(-1j * np.outer(d, starts))  # (nd, npanels)
        out[lo : lo + chunk] = h * (w[0] * (phase @ f0) + w[1] * (phase @ f1) + w[2] * (phase @ f2))
    return out


def _tail_rate(tau: np.ndarray, c: np.ndarray) -> float:
    """Slowest decay rate of ``|c|`` fitted on the last quarter of the grid."""
    k = max(3 * tau.size // 4, 0)
    t, a = tau[k:], np.abs(c[k:])
    mask = a > 0
    if mask.sum() < 2:
        return math.inf
    slope = np.polyfit(t[mask], np.log(a[mask]), 1)[0]
    return -slope if slope < 0 else math.inf


def spectrum_numeric(envelope: EnvelopeSeries, delta_grid, params: SystemParams | None = None) -> SpectrumSeries:
    """Numeric spectrum of a correlation envelope (persistent constant removed).

    Raises :class:`NumericalFailure` if the decaying part has not fallen
    below ``1e-6`` by the end of the tau grid.
    """
    delta = np.asarray(delta_grid, dtype=float)
    tau = envelope.tau
    c = envelope.positive_frequency()
    scale = 0.5 if envelope.carrier == "cos" else 1.0
    end = abs(c[-1]) / scale
    if end > DECAY_TOLERANCE:
        raise NumericalFailure(
            f"envelope has not decayed by tau_max (|g - g_inf| = {end:.3g}); "
            "extend the tau grid or remove the persistent offset"
        )
    integral = fourier_one_sided(tau, c, delta)
    if c[-1] != 0:
        kappa = _tail_rate(tau, c)
        if math.isfinite(kappa):
            integral = integral + c[-1] * np.exp(-1j * delta * tau[-1]) / (kappa + 1j * delta)
    label = f"{envelope.label}-numeric" if envelope.label else "numeric"
    return SpectrumSeries(delta, 2.0 * integral.real, False, params, label)


# --------------------------------------------------------------------------
# peaks


def _parabolic(x: np.ndarray, y: np.ndarray, i: int):
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = y0 - 2.0 * y1 + y2
    if den >= 0:
        return x[i], y1
    off = 0.5 * (y0 - y2) / den
    step = x[i + 1] - x[i]
    return x[i] + off * step, y1 - 0.25 * (y0 - y2) * off


def _half_crossing(x, y, i, half, direction):
    j = i
    while 0 <= j + direction < len(y):
        k = j + direction
        if y[k] <= half:
            return x[j] + (x[k] - x[j]) * (y[j] - half) / (y[j] - y[k])
        if y[k] > y[j]:
            return None  # climbed into a neighbouring peak first
        j = k
    return None


def find_peaks(spectrum: SpectrumSeries, min_fraction: float = MIN_PEAK_FRACTION) -> PeakReport:
    """Local maxima with parabolic refinement and linearly interpolated HWHM.

    Maxima lower than ``min_fraction`` of the global maximum are ignored
    (quadrature noise in the far wings).  The peak closest to ``delta = 0``
    is the central one; all others are sidebands.
    """
    x, y = np.asarray(spectrum.delta, float), np.asarray(spectrum.values, float)
    step = float(np.min(np.diff(x))) if x.size > 1 else 0.0
    if spectrum.params is not None and step > spectrum.params.gamma / 50.0:
        warnings.warn("delta grid coarser than gamma/50; peak positions are less precise", stacklevel=2)
    top = float(np.max(y))
    peaks = []
    for i in range(1, len(y) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1] and y[i] >= min_fraction * top:
            pos, height = _parabolic(x, y, i)
            left = _half_crossing(x, y, i, 0.5 * height, -1)
            right = _half_crossing(x, y, i, 0.5 * height, +1)
            widths = [abs(pos - v) for v in (left, right) if v is not None]
            peaks.append(Peak(float(pos), float(height), float(np.mean(widths)) if widths else None))
    if not peaks:
        return PeakReport(None, [], [], step)
    ci = int(np.argmin([abs(p.position) for p in peaks]))
    central = peaks.pop(ci)
    ratios = [p.height / central.height for p in peaks]
    return PeakReport(central, peaks, ratios, step)


def value_at(spectrum: SpectrumSeries, delta: float) -> float:
    return float(np.interp(delta, spectrum.delta, spectrum.values))


# --------------------------------------------------------------------------
# sweep


@dataclass
class SweepTable:
    rabi: np.ndarray
    field_peak: np.ndarray
    mollow_peak: np.ndarray

    @property
    def field_max_at_smallest(self) -> bool:
        return int(np.argmax(self.field_peak)) == 0

    @property
    def field_monotone_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.field_peak) <= 0))

    def first_field_increase(self) -> float | None:
        up = np.nonzero(np.diff(self.field_peak) > 0)[0]
        return None if up.size == 0 else float(self.rabi[up[0] + 1])


def sweep_peak_heights(params_base: SystemParams, rabi_list) -> SweepTable:
    """Closed-form ``S(omega0)`` and ``S_Mol(omega0)`` for each Rabi frequency (rad/s)."""
    rabi = np.asarray(rabi_list, dtype=float)
    if rabi.ndim != 1 or np.any(np.diff(rabi) <= 0):
        raise ValueError("rabi_list must be strictly ascending")
    if np.any(rabi < 0):
        raise ValueError("Rabi frequencies must be nonnegative")
    fp, mp = [], []
    for r in rabi:
        p = SystemParams(params_base.gamma, float(r), params_base.omega0)
        fp.append(spectrum_field(p, [0.0]).values[0])
        mp.append(spectrum_mollow_closedform(p, [0.0]).values[0])
    return SweepTable(rabi, np.array(fp), np.array(mp))


# --------------------------------------------------------------------------
# grids


def default_tau_grid(params: SystemParams, tau_max: float = 40.0, steps: int = 4000) -> np.ndarray:
    """``steps`` uniform intervals on ``[0, tau_max/Gamma]``."""
    if steps < 2 or steps % 2:
        raise ValueError("tau steps must be an even integer >= 2")
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    return np.linspace(0.0, tau_max / params.gamma, steps + 1)


def default_delta_grid(params: SystemParams, span: float | None = None, points: int = 2001) -> np.ndarray:
    """Symmetric grid; ``span`` in units of Gamma, default ``max(8 mu, 4 Gamma)``."""
    if points < 3:
        raise ValueError("need at least 3 delta points")
    if span is None:
        half = max(8.0 * max(sideband_rate(params).real, 0.0), 4.0 * params.gamma)
    else:
        if span <= 0:
            raise ValueError("delta span must be positive")
        half = span * params.gamma
    grid = np.linspace(-half, half, points)
    return 0.5 * (grid - grid[::-1])  # exact symmetry about 0


# --------------------------------------------------------------------------
# audit


@dataclass
class ScaleFit:
    names: list
    scales: list
    relative_residual: float

    def as_dict(self) -> dict:
        return {"terms": dict(zip(self.names, self.scales)), "relative_residual": self.relative_residual}


@dataclass
class AuditReport:
    params: SystemParams
    mu: float
    field_fit: ScaleFit
    field_parity_fit: ScaleFit | None
    mollow_fit: ScaleFit
    ratios: dict
    peak_counts: dict
    flags: dict

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "mu": self.mu,
            "field_fit": self.field_fit.as_dict(),
            "field_parity_fit": None if self.field_parity_fit is None else self.field_parity_fit.as_dict(),
            "mollow_fit": self.mollow_fit.as_dict(),
            "ratios": self.ratios,
            "peak_counts": self.peak_counts,
            "flags": self.flags,
        }


def _fit(target: np.ndarray, columns: dict) -> ScaleFit:
    names = list(columns)
    M = np.column_stack([columns[n] for n in names])
    coef, *_ = np.linalg.lstsq(M, target, rcond=None)
    resid = np.linalg.norm(M @ coef - target) / np.linalg.norm(target)
    return ScaleFit(names, [float(c) for c in coef], float(resid))


def _ratio_at_mu(spectrum_fn, params, mu: float) -> float:
    vals = spectrum_fn(params, np.array([0.0, mu, -mu]))
    return float(0.5 * (vals[1] + vals[2]) / vals[0])


def audit(params: SystemParams, tau_grid=None, delta_grid=None) -> AuditReport:
    """Compare the closed-form spectra with numeric transforms of their correlation functions.

    Scale factors are least-squares fits of the numeric spectrum onto the
    closed-form terms.  The field spectrum is also fitted onto its parity parts
    (central Lorentzian, absorptive ``even`` part, dispersive ``odd`` part).
    """
    m2 = sideband_rate_squared(params)
    if m2 <= 0:
        raise ValueError("the audit needs a real, nonzero sideband rate (4 Omega > Gamma)")
    mu = math.sqrt(m2)
    tau = default_tau_grid(params) if tau_grid is None else np.asarray(tau_grid, float)
    delta = default_delta_grid(params) if delta_grid is None else np.asarray(delta_grid, float)

    field_env = correlation_closed(params, tau)
    field_num = spectrum_numeric(field_env, delta, params)
    terms = field_spectrum_terms(params, delta)
    field_fit = _fit(field_num.values, terms)

    beta = beta_field(params)
    dp = _lorentz_denominator(params, delta + mu)
    dm = _lorentz_denominator(params, delta - mu)
    parity = {
        "central": terms["central"],
        "even": 6.0 * beta.even * params.gamma * (1.0 / dp + 1.0 / dm),
        "odd": -8.0 * beta.odd / mu * ((delta + mu) / dp - (delta - mu) / dm),
    }
    parity_fit = _fit(field_num.values, parity)

    mol_env = mollow_correlation(params, tau)
    mol_num = spectrum_numeric(mol_env, delta, params)
    mollow_fit = _fit(mol_num.values, mollow_spectrum_terms(params, delta))

    def oracle_field(p, d):
        return spectrum_numeric(field_env, d, p).values

    def oracle_mollow(p, d):
        return spectrum_numeric(mol_env, d, p).values

    ratios = {
        "field_closedform": _ratio_at_mu(lambda p, d: spectrum_field(p, d).values, params, mu),
        "mollow_closedform": _ratio_at_mu(lambda p, d: spectrum_mollow_closedform(p, d).values, params, mu),
        "field_numeric": _ratio_at_mu(oracle_field, params, mu),
        "mollow_numeric": _ratio_at_mu(oracle_mollow, params, mu),
    }
    spectra = {
        "field_closedform": spectrum_field(params, delta),
        "mollow_closedform": spectrum_mollow_closedform(params, delta),
        "field_numeric": field_num,
        "mollow_numeric": mol_num,
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        reports = {k: find_peaks(s) for k, s in spectra.items()}
    peak_counts = {k: r.n_peaks for k, r in reports.items()}
    for k, r in reports.items():
        ratios[f"{k}_peak"] = float(np.mean(r.ratios)) if r.ratios else None

    all_scales = field_fit.scales + mollow_fit.scales
    flags = {
        # claim: field sidebands are relatively smaller than Mollow sidebands
        "ordering_tension_closedform": ratios["field_closedform"] >= ratios["mollow_closedform"],
        "ordering_tension_numeric": ratios["field_numeric"] >= ratios["mollow_numeric"],
        "field_central_scale_not_unity": abs(field_fit.scales[0] - 1.0) > 0.05,
        "field_beta_scale_not_unity": any(abs(s - 1.0) > 0.05 for s in field_fit.scales[1:]),
        "mollow_scale_not_unity": any(abs(s - 1.0) > 0.05 for s in mollow_fit.scales),
        "nonpositive_scale": any(not (s > 0 and math.isfinite(s)) for s in all_scales),
        "field_closedform_vs_numeric_ratio_mismatch": _rel(ratios["field_closedform"], ratios["field_numeric"]) > 0.05,
        "mollow_closedform_vs_numeric_ratio_mismatch": _rel(ratios["mollow_closedform"], ratios["mollow_numeric"]) > 0.05,
    }
    return AuditReport(params, mu, field_fit, parity_fit, mollow_fit, ratios, peak_counts, flags)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)
