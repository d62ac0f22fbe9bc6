import numpy as np
import pytest

from conftest import E1_REF
from resonia.eikonal import geodesic_fan
from resonia.errors import PhaseLaplacianUnstable
from resonia.resonance import dirichlet_ground
from resonia.wkb import quasimode_residual_1d, transport_solve, wkb_init_well


def test_germ_normalization(spec):
    g = wkb_init_well(spec)
    # harmonic ground state of -h^2 u'' + x^2/2 u has a0 = (A/pi)^(1/4), A = sqrt(1/2)
    assert g.a0_x0 == pytest.approx((E1_REF / np.pi) ** 0.25, rel=1e-12)
    assert g.E1 == pytest.approx(E1_REF)


def test_liouville_and_stencil_transport_agree(spec):
    from dataclasses import replace

    g = wkb_init_well(spec)
    full = geodesic_fan(spec, [[1.0]], samples=4001)[0]
    k = np.searchsorted(full.x[:, 0], 0.9)
    path = replace(full, times=full.times[:k], states=full.states[:k], action=full.action[:k],
                   jacobian_det=full.jacobian_det[:k])

    def lap(X):
        # Laplacian of d in 1D is p' = V' / (2 p), p = sqrt(V - E0)
        x = X[:, 0]
        return np.ravel(spec.grad(x)) / (2 * np.sqrt(np.ravel(spec.V(x)) - 0.5))

    a_l = transport_solve(path, g)
    a_s = transport_solve(path, g, mode="stencil", laplacian=lap)
    assert np.max(np.abs(a_s / a_l - 1)) < 1e-3


def test_stencil_mode_rejects_nan(spec):
    g = wkb_init_well(spec)
    path = geodesic_fan(spec, [[1.0]], samples=101)[0]
    with pytest.raises(PhaseLaplacianUnstable):
        transport_solve(path, g, mode="stencil", laplacian=lambda X: np.full(len(X), np.nan))


def test_quasimode_residual_is_second_order(spec, wkb):
    D = dirichlet_ground(spec, 0.05, eta_frac=0.2)
    r = [quasimode_residual_1d(wkb, spec, h, D.interval) for h in (0.05, 0.025, 0.0125)]
    assert 3.2 <= r[0] / r[1] <= 4.8
    assert 3.2 <= r[1] / r[2] <= 4.8


def test_quasimode_overlaps_dirichlet_state(spec, wkb):
    D = dirichlet_ground(spec, 0.05, eta_frac=0.2)
    w = wkb.w(D.x, 0.05)
    assert np.sum(w * D.u) / np.sqrt(np.sum(w * w) * np.sum(D.u**2)) >= 0.995


def test_phase_matches_quadrature(spec, wkb):
    from resonia.eikonal import agmon_distance_1d

    x = np.linspace(-1.0, 1.0, 41)
    d, _ = wkb.evaluate_1d(x)
    assert np.allclose(d, agmon_distance_1d(spec, x), atol=1e-8)


def test_stencil_mode_rejects_oscillation(spec):
    g = wkb_init_well(spec)
    path = geodesic_fan(spec, [[1.0]], samples=201)[0]
    zigzag = lambda X: 0.7 + 0.1 * (-1.0) ** np.arange(len(X))
    with pytest.raises(PhaseLaplacianUnstable):
        transport_solve(path, g, mode="stencil", laplacian=zigzag)
