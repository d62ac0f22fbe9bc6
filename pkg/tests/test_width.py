import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import R_B, S_REF
from resonia.errors import BadLadder, DegenerateTransverseHessian, SurfaceTooClose
from resonia.width import (asymptotic_fit, calibrate_fold_constant, green_width, predict_f0_1d, run_ladder,
                           stationary_phase_f0)

F0_PRED = 2.4706106889793773


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.1, max_value=2.0), st.floats(min_value=0.02, max_value=0.1))
def test_plane_wave_flux(k, h):
    x = np.linspace(0.0, 2.0, 4001)
    u = np.exp(1j * k * x / h)
    # one-sided fourth-order stencil: relative error ~ (k dx / h)^4 / 5
    tol = (k * (x[1] - x[0]) / h) ** 4
    assert green_width(x, u, h, (0.0, 2.0), sides=("right",)) == pytest.approx(-h * k / 2, rel=tol)


def test_surface_too_close():
    x = np.linspace(-2, 2, 401)
    with pytest.raises(SurfaceTooClose):
        green_width(x, np.ones_like(x, complex), 0.05, (-1.0, 1.01), boundary=(-1.0, 1.0))


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.1, max_value=0.4), st.floats(min_value=-1.0, max_value=1.0),
       st.floats(min_value=0.1, max_value=10.0))
def test_fit_recovers_exact_law(S, p, f0):
    hs = np.array([0.05, 0.04, 0.035, 0.03, 0.025])
    im = -f0 * hs**p * np.exp(-2 * S / hs)
    fit = asymptotic_fit(hs, im)
    assert fit.S_fit == pytest.approx(S, rel=1e-10)
    assert fit.p_fit == pytest.approx(p, abs=1e-8)
    assert fit.f0_fit == pytest.approx(f0, rel=1e-7)


def test_fit_guards():
    with pytest.raises(BadLadder):
        asymptotic_fit([0.05, 0.04, 0.03], [-1e-5, -1e-6, -1e-7])
    with pytest.raises(BadLadder):
        asymptotic_fit([0.05, 0.04, 0.035, 0.03], [-1e-5, -1e-6, 1e-7, -1e-8])


def test_fold_calibration_is_one():
    c = calibrate_fold_constant()
    assert c["K"] == pytest.approx(1.0, abs=1e-10)
    assert c["spread"] < 1e-10


def test_stationary_phase_variants():
    assert stationary_phase_f0([1.0, 2.0]) == 3.0
    assert stationary_phase_f0([1.0], n=2, n_gamma=1, lengths=[2 * np.pi]) == pytest.approx(2 * np.pi)
    assert stationary_phase_f0([1.0], n=2, hessians=[np.pi]) == pytest.approx(1.0)
    with pytest.raises(DegenerateTransverseHessian):
        stationary_phase_f0([1.0], n=2, hessians=[-1.0])


def test_predicted_prefactor(spec, wkb):
    out = predict_f0_1d(spec, wkb)
    assert out["f0_pred"] == pytest.approx(F0_PRED, rel=1e-6)
    assert out["beta0"][0] == pytest.approx(out["beta0"][1], rel=1e-6)


@pytest.fixture(scope="module")
def short_ladder(spec):
    return run_ladder(spec, [0.05, 0.04, 0.035, 0.03], S_REF, R_B, workers=2)


def test_green_agrees_with_eigenvalue(short_ladder):
    for r in short_ladder.records:
        assert abs(r["im_rho_green"] / r["im_rho_eig"] - 1) < 0.05
        g = np.asarray(r["im_rho_green_all"])
        assert np.ptp(g) / abs(g.mean()) < 0.02


def test_ladder_is_monotone(short_ladder):
    im = [r["im_rho_eig"] for r in short_ladder.records]
    assert all(v < 0 for v in im)
    assert all(abs(a) > abs(b) for a, b in zip(im, im[1:]))
    assert short_ladder.fit is not None
