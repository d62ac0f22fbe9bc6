import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import S_REF
from resonia.errors import ConfigError, ResolutionError, ScalingInsideIsland
from resonia.potential import PotentialSpec
from resonia.resonance import (agmon_identity_check, complex_scaled_operator, dirichlet_ground, fbi_transform,
                               ramp, ramp_deriv, real_operator, resonance_near, state_overlap, well_action)

radius = st.floats(min_value=0.0, max_value=20.0, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(radius)
def test_ramp_shape(r):
    R0, R1 = 4.0, 6.0
    G, dG = ramp(np.array([r]), R0, R1)[0], ramp_deriv(np.array([r]), R0, R1)[0]
    assert 0.0 <= dG <= 1.0
    if r <= R0:
        assert G == 0.0 and dG == 0.0
    if r >= R1:
        assert dG == pytest.approx(1.0)
        assert G == pytest.approx(r - 0.5 * (R0 + R1), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=4.05, max_value=5.95))
def test_ramp_derivative_consistent(r):
    e = 1e-6
    num = (ramp(np.array([r + e]), 4.0, 6.0) - ramp(np.array([r - e]), 4.0, 6.0))[0] / (2 * e)
    assert num == pytest.approx(ramp_deriv(np.array([r]), 4.0, 6.0)[0], abs=1e-7)


def test_action_frozen(spec):
    assert well_action(spec) == pytest.approx(S_REF, rel=1e-12)


def test_theta_zero_is_real_symmetric_bit_for_bit(spec):
    h, n = 0.05, 600
    op = real_operator(spec, h, nodes=n)
    assert op.matrix.dtype == np.float64
    x = np.linspace(-12.0, 12.0, n + 2)[1:-1]
    dx = x[1] - x[0]
    ref = sp.diags([np.full(n - 1, -h * h / dx**2 * 1.0),
                    -h * h * (-(1.0 + 1.0) / dx**2) + np.ravel(spec.V(x.reshape(-1, 1))),
                    np.full(n - 1, -h * h / dx**2 * 1.0)], [-1, 0, 1])
    assert (op.matrix != ref.tocsc()).nnz == 0


def test_free_continuum_is_rotated():
    from scipy.linalg import eig

    op = complex_scaled_operator(PotentialSpec("free", {}, 1), 0.05, theta=0.3, R0=0.1, box=12.0, nodes=2000)
    w = eig(op.matrix.toarray(), right=False)
    w = w[(abs(w) > 0.05) & (abs(w) < 1.0)]
    assert np.all(np.abs(np.angle(w) / -0.6 - 1) < 0.02)


def test_operator_guards(spec):
    with pytest.raises(ConfigError):
        complex_scaled_operator(spec, 0.05, box=10.0, R0=4.0)
    with pytest.raises(ScalingInsideIsland):
        complex_scaled_operator(spec, 0.05, R0=1.0, box=12.0)


def test_dirichlet_resolution_guard(spec):
    with pytest.raises(ResolutionError):
        dirichlet_ground(spec, 0.05, dx=0.05)


def test_harmonic_dirichlet_eigenvalue():
    s = PotentialSpec("harmonic", {"E0": 0.5, "k": 1.0}, 1).with_well()
    assert abs(dirichlet_ground(s, 0.05, interval=(-4.0, 4.0)).lam - 0.55) <= 5e-4


@pytest.fixture(scope="module")
def res05(spec):
    op = complex_scaled_operator(spec, 0.05)
    D = dirichlet_ground(spec, 0.05, eta=0.05 * S_REF, S=S_REF, dx=op.spacing)
    return resonance_near(op, D, S=S_REF)


def test_resonance_frozen(res05):
    assert res05.rho.real == pytest.approx(0.532164486, abs=1e-8)
    assert res05.rho.imag == pytest.approx(-1.8074e-5, rel=1e-3)
    assert res05.residual < 1e-10
    assert res05.audit["nearest_other"] > 0.05 / 4


def test_resonant_state_close_to_dirichlet(res05):
    assert state_overlap(res05) > 0.999


def test_theta_independence(spec, res05):
    op = complex_scaled_operator(spec, 0.05, theta=0.2)
    r = resonance_near(op, res05.dirichlet, S=S_REF, audit=False)
    assert abs(r.rho - res05.rho) <= 1e-3 * abs(res05.rho.imag)


def test_radial_oscillator_second_order():
    from scipy.sparse.linalg import eigsh

    # exact 2D oscillator, E0 + 2h; the finite-volume radial form at theta = 0
    s = PotentialSpec("gauss_well", {"E0": 0.5, "kappa": 1.0, "alpha": 1e-9}, 2).with_well()
    errs = []
    for n in (1000, 2000):
        op = complex_scaled_operator(s, 0.05, theta=0.0, R0=4.0, box=12.0, nodes=n, radial=True)
        A = op.matrix[:n // 3, :n // 3]  # r < 4, well inside the box
        lam = eigsh(A, k=1, sigma=0.6, return_eigenvectors=False)[0]
        errs.append(abs(lam - 0.5 - 2 * 0.05 * np.sqrt(1 - 0.5e-9)))
    assert errs[1] < 1e-5
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_agmon_identity_exact_at_zero_weight(spec):
    D = dirichlet_ground(spec, 0.05, eta_frac=0.2)
    x = np.concatenate([[D.interval[0]], D.x, [D.interval[1]]])
    f = np.concatenate([[0.0], D.u, [0.0]])
    c = agmon_identity_check(spec, 0.05, x, f, np.zeros_like(x), D.lam)
    assert c.residual <= 1e-12


def test_agmon_identity_exact_with_weight(spec):
    D = dirichlet_ground(spec, 0.05, eta_frac=0.2)
    x = np.concatenate([[D.interval[0]], D.x, [D.interval[1]]])
    f = np.concatenate([[0.0], D.u, [0.0]])
    c = agmon_identity_check(spec, 0.05, x, f, 0.3 * x * x, D.lam)
    assert c.residual <= 1e-10
    assert c.naive_residual > c.residual


def test_fbi_plancherel_and_peak():
    h = 0.05
    x = np.linspace(-3, 3, 1201)
    x0, xi0 = 0.4, 0.7
    u = (np.pi * h) ** -0.25 * np.exp(-(x - x0) ** 2 / (2 * h) + 1j * xi0 * x / h)
    xs = np.linspace(-1.5, 2.5, 161)
    xis = np.linspace(-1.0, 2.5, 141)
    T = fbi_transform(u, x, h, xs, xis)
    norm2 = np.sum(np.abs(T) ** 2) * (xs[1] - xs[0]) * (xis[1] - xis[0])
    assert norm2 == pytest.approx(1.0, rel=1e-3)
    i, j = np.unravel_index(np.argmax(np.abs(T)), T.shape)
    assert abs(xs[i] - x0) <= xs[1] - xs[0]
    assert abs(xis[j] - xi0) <= xis[1] - xis[0]
