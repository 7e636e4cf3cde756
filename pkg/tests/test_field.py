import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from fluorspec.core import NumericalFailure
from fluorspec.field import (
    C_LIGHT,
    EPSILON0,
    aux_fg,
    field_signal,
    loglog_slopes,
    oscillatory_integral,
    radial_kernel,
    radial_kernel_derivatives,
    radial_kernel_quadrature,
    transverse_delta,
    wavelength,
    weight_tensor,
    weight_tensor_fd,
)

OMEGA0 = 1e15
LAM = wavelength(OMEGA0)

positions = st.tuples(*[st.floats(-1.0, 1.0)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3)
log_r = st.floats(math.log(1e-3), math.log(1e2))


def test_zero_frequency_kernel_exact():
    r = np.geomspace(1e-9, 1e3, 50)
    np.testing.assert_allclose(radial_kernel(r, 0.0), np.pi / (2 * r), rtol=1e-12)
    np.testing.assert_allclose(radial_kernel_quadrature(r[::7], 0.0), np.pi / (2 * r[::7]), rtol=1e-12)


def test_far_zone_asymptote():
    a = 1e3
    r = a * C_LIGHT / OMEGA0
    Fr = radial_kernel(r, OMEGA0) * r
    assert Fr == pytest.approx(1.0 / a, rel=3e-6)  # next term is -2/a^3
    assert radial_kernel_quadrature(r, OMEGA0)[0] * r == pytest.approx(Fr, rel=1e-9)


@pytest.mark.parametrize("omega0", [0.0, 1e13, 1e15, 1e17, 1e19])
def test_dual_method_agreement(omega0):
    r = np.geomspace(1e-4, 1e3, 25) * LAM
    a = radial_kernel(r, omega0)
    b = radial_kernel_quadrature(r, omega0)
    np.testing.assert_allclose(b, a, rtol=1e-9)


@given(log_r)
def test_dual_method_random(lr):
    r = math.exp(lr) * LAM
    assert radial_kernel_quadrature(r, OMEGA0)[0] == pytest.approx(float(radial_kernel(r, OMEGA0)), rel=1e-9)


def test_acceleration_failure_reported():
    with pytest.raises(NumericalFailure):
        oscillatory_integral(0.3, direct=1, tail=2, tol=1e-16)


@pytest.mark.parametrize("a", [1e-3, 0.5, 3.0, 39.9, 40.0, 45.0, 1e3, 1e5, 6e7])
def test_aux_functions_against_high_precision(a):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    si, ci = mp.si(a), mp.ci(a)
    f_ref = ci * mp.sin(a) - (si - mp.pi / 2) * mp.cos(a)
    g_ref = -ci * mp.cos(a) - (si - mp.pi / 2) * mp.sin(a)
    f, g = aux_fg(a)
    assert float(f) == pytest.approx(float(f_ref), rel=1e-12)
    assert float(g) == pytest.approx(float(g_ref), rel=1e-12)


def test_aux_functions_at_zero():
    f, g = aux_fg(0.0)
    assert f == pytest.approx(np.pi / 2) and np.isinf(g)


@given(log_r, st.floats(0.1, 10.0))
def test_scaling_identity(lr, s):
    r = math.exp(lr) * LAM
    assert float(radial_kernel(r, OMEGA0)) == pytest.approx(float(radial_kernel(s * r, OMEGA0 / s)) * s, rel=1e-9)


@given(log_r)
def test_analytic_derivatives_match_quadrature_differences(lr):
    r = math.exp(lr) * LAM
    h = 1e-3 * r
    F = radial_kernel_quadrature(np.array([r - h, r, r + h]), OMEGA0)
    _, F1, F2 = radial_kernel_derivatives(r, OMEGA0)
    assert (F[2] - F[0]) / (2 * h) == pytest.approx(float(F1), rel=1e-5)
    assert (F[2] - 2 * F[1] + F[0]) / h**2 == pytest.approx(float(F2), rel=1e-4)


@given(positions)
def test_tensor_against_finite_differences(v):
    x = np.asarray(v) * LAM
    w = weight_tensor(x, OMEGA0).tensor
    fd = weight_tensor_fd(x, OMEGA0)
    assert np.max(np.abs(w - fd)) <= 1e-6 * np.max(np.abs(w))


@given(positions)
def test_tensor_symmetric(v):
    w = weight_tensor(np.asarray(v) * LAM, OMEGA0).tensor
    assert np.max(np.abs(w - w.T)) <= 1e-10 * np.max(np.abs(w))


@given(positions, st.integers(0, 2**32 - 1))
def test_rotational_covariance(v, seed):
    R = Rotation.random(random_state=seed).as_matrix()
    x = np.asarray(v) * LAM
    w = weight_tensor(x, OMEGA0).tensor
    wr = weight_tensor(R @ x, OMEGA0).tensor
    assert np.max(np.abs(wr - R @ w @ R.T)) <= 1e-9 * np.max(np.abs(w))


@given(positions)
def test_zero_frequency_is_transverse_delta(v):
    x = np.asarray(v) * 1e-6
    w = weight_tensor(x, 0.0).tensor
    np.testing.assert_allclose(w, transverse_delta(x), rtol=1e-12, atol=1e-12 * np.max(np.abs(w)))


def test_rejects_origin_and_bad_shapes():
    with pytest.raises(ValueError):
        weight_tensor(np.zeros(3), OMEGA0)
    with pytest.raises(ValueError):
        weight_tensor(np.ones(2), OMEGA0)
    with pytest.raises(ValueError):
        radial_kernel(-1.0, OMEGA0)


def test_slope_fit_at_zero_frequency():
    r = np.geomspace(LAM / 100, 100 * LAM, 60)
    slopes = loglog_slopes(r, 0.0)
    assert slopes["isotropic"] == pytest.approx(-3.0, abs=1e-9)
    assert slopes["radial"] == pytest.approx(-3.0, abs=1e-9)


def test_field_signal_linearity():
    w = weight_tensor(np.array([1.0, 0.5, -0.2]) * LAM, OMEGA0)
    d = np.array([1e-29, -2e-29, 0.5e-29])
    e1 = field_signal(w, d, 0.3)
    assert np.all(field_signal(w, d, 0.0) == 0)
    np.testing.assert_allclose(field_signal(w, d, 0.6), 2 * e1, rtol=1e-15)
    np.testing.assert_allclose(field_signal(w, 3 * d, 0.3), 3 * e1, rtol=1e-15)
    d2 = np.array([0.0, 1e-29, 0.0])
    np.testing.assert_allclose(field_signal(w, d + d2, 0.3), e1 + field_signal(w, d2, 0.3), rtol=1e-12)
    np.testing.assert_allclose(e1, w.tensor @ d * 0.3 / EPSILON0, rtol=1e-15)
    with pytest.raises(ValueError):
        field_signal(w, np.ones(2), 1.0)
