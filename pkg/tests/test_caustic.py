import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import C0_REF
from resonia import caustic as K
from resonia.errors import DegenerateSamples, OutsideChart

coefs = arrays(np.float64, 6, elements=st.floats(min_value=-1.0, max_value=1.0))


@settings(max_examples=50, deadline=None)
@given(coefs, coefs)
def test_ser_mul_is_polynomial_product(a, b):
    assert np.allclose(K.ser_mul(a, b, 6), np.polynomial.polynomial.polymul(a, b)[:6])


@settings(max_examples=50, deadline=None)
@given(coefs, st.floats(min_value=0.5, max_value=2.0))
def test_ser_pow_square_root(a, a0):
    a = a.copy()
    a[0] = a0
    r = K.ser_pow(a, 0.5, 6)
    assert np.allclose(K.ser_mul(r, r, 6), a, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(coefs, st.floats(min_value=0.5, max_value=2.0))
def test_ser_revert_inverts(phi, p0):
    phi = phi.copy()
    phi[0] = p0
    Y = K.ser_revert(phi, 6)
    # Y = w phi(Y)
    rhs = K.ser_mul(np.array([0, 1.0]), K.ser_compose(phi, Y, 6), 6)
    assert np.allclose(Y, rhs, atol=1e-9)


def test_holomorphic_modes_agree_on_axis():
    f = np.cos
    A = K.holomorphic_approx(f, 0.2, (-1, 1), mode="A")
    B = K.holomorphic_approx(f, 0.2, (-1, 1), mode="B")
    x = np.linspace(-0.9, 0.9, 11)
    assert np.allclose(A(x), np.cos(x), atol=1e-12)
    assert np.allclose(B(x), np.cos(x), atol=1e-12)
    # small imaginary part: mode B is the Taylor extension
    z = x + 0.01j
    assert np.allclose(B(z), np.cos(z), atol=1e-10)


def test_holomorphic_rejects_degenerate_samples():
    with pytest.raises(DegenerateSamples):
        K.holomorphic_approx((np.array([0.0, 0.0]), np.array([1.0, 1.0])), 0.1, (0, 1))


@pytest.mark.parametrize("h", [0.05, 0.02, 0.01])
@pytest.mark.parametrize("s", [-0.1, -0.02, 0.03, 0.15])
def test_fold_integral_matches_airy(h, s):
    fc, one = K.fold_chart(C0_REF), K.constant_c0()
    I = K.fold_airy_closed_form(C0_REF, s, h)
    assert abs(K.airy_eval(fc, one, [s], h).value / I - 1) < 1e-6


def test_fold_steepest_leading_term():
    # outside the fold, the expansion is the Airy asymptotic series
    fc, one = K.fold_chart(C0_REF), K.constant_c0()
    h, s = 0.01, 0.2
    I = K.fold_airy_closed_form(C0_REF, s, h)
    r = K.steepest_expand(fc, one, [s], h, L=2)
    assert abs(r.value / I - 1) < 1e-3
    assert abs(r.betas[0] - np.sqrt(np.pi)) < 1e-12


def test_chart_fold_data(chart, spec):
    ch, c0 = chart
    assert ch.residual < 1e-3
    assert ch.xi_c() == 0.0
    nu1 = float(np.real(ch.nu1_taylor(1)[0]))
    # nu1(xi_c) = 1/C0 for a fold x_n = -xi^2/C0 at leading order
    assert nu1 == pytest.approx(1 / C0_REF, rel=1e-6)


def test_outgoing_critical_point_is_sea_momentum(chart, spec):
    ch, _ = chart
    for s in (1e-3, 0.02, 0.08):
        cp = K.critical_points(ch, [s - ch.b_fn()])
        x = ch.x_of_sigma(0.0) + s * ch.frame.normal[0]
        exact = -1j * np.sqrt(0.5 - float(np.ravel(spec.V(np.array([x])))[0]))
        assert abs(cp.xi_minus_i - exact) < 1e-6 * max(1, abs(exact)) + 1e-9
        assert cp.xi_minus_i.imag < 0


def test_phase_series_matches_newton(chart):
    ch, _ = chart
    for s in (1e-3, 0.01, 0.05):
        p = K.phase_phi_tilde(ch, [s - ch.b_fn()])
        assert abs(p.phi_tilde - p.phi_series) < 1e-8
        assert p.phi_tilde.real >= -1e-8


def test_nu_tilde_identity(chart):
    ch, _ = chart
    nu1 = float(np.real(ch.nu1_taylor(1)[0]))
    assert abs(K.nu_tilde_series(ch)[0] - 2 / (3 * np.sqrt(nu1))) < 1e-6


def test_outside_chart_raises(chart):
    ch, _ = chart
    with pytest.raises(OutsideChart):
        K.critical_points(ch, [ch.s_range[1] + 0.5 - ch.b_fn()])


def test_steepest_matches_airy_in_band(chart):
    ch, c0 = chart
    g, c = K.entire_extension(ch, c0)
    h = 0.02
    for s in (0.15, 0.2, 0.25):
        x = [s - g.b_fn()]
        a = K.airy_eval(g, c, x, h).value
        assert abs(K.steepest_expand(g, c, x, h, L=2).value / a - 1) < 0.01


def test_band_violation(chart):
    from resonia.errors import BandViolation

    ch, c0 = chart
    with pytest.raises(BandViolation):
        K.steepest_expand(ch, c0, [0.01 - ch.b_fn()], 0.02, band=(0.15, 0.25))


def test_flux_density_two_routes(chart):
    from resonia.width import beta0_density

    ch, c0 = chart
    d = beta0_density(ch, c0)
    assert d["rel_diff"] < 1e-8
    assert d["closed"] == pytest.approx(1.2353053, rel=1e-6)
