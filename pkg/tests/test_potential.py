import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import C0_REF, E1_REF, R_B
from resonia.errors import NoBoundary, NoWellFound
from resonia.potential import (AssumptionBudget, PotentialSpec, boundary_frame, find_well, gauss_well,
                               harmonic_data, island_boundary, validate_assumptions)

coord = st.floats(min_value=-2.5, max_value=2.5, allow_nan=False)


def test_well_at_origin(spec):
    x0, E0, H = find_well(spec)
    assert np.allclose(x0, 0.0, atol=1e-12)
    assert E0 == pytest.approx(0.5, abs=1e-14)
    assert H[0, 0] == pytest.approx(1.0, rel=1e-12)


def test_boundary_radius_frozen(boundary, spec):
    assert boundary.radius == pytest.approx(R_B, rel=1e-10)
    assert np.ravel(spec.V(boundary.points)) == pytest.approx([0.5, 0.5], abs=1e-12)


def test_radial_boundary_matches_1d(spec2d):
    bd = island_boundary(spec2d)
    r = np.linalg.norm(bd.points, axis=1)
    assert np.ptp(r) < 1e-8
    assert r.mean() == pytest.approx(R_B, rel=1e-8)


def test_harmonic_frequency():
    assert harmonic_data(gauss_well().with_well()) == pytest.approx(E1_REF, rel=1e-12)
    assert harmonic_data(gauss_well(dim=2).with_well()) == pytest.approx(2 * E1_REF, rel=1e-12)


def test_fold_constant(spec):
    fr = boundary_frame(spec, [R_B])
    assert fr.C0 == pytest.approx(C0_REF, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(coord, coord)
def test_gradient_and_hessian_match_differences(x, y):
    s = gauss_well(dim=2, tilt=0.1)
    p = np.array([x, y])
    e = 1e-6
    g = np.array([(s.V(p + e * u) - s.V(p - e * u)) / (2 * e) for u in np.eye(2)])
    assert np.allclose(s.grad(p), g, atol=1e-7)
    H = np.array([(s.grad(p + e * u) - s.grad(p - e * u)) / (2 * e) for u in np.eye(2)])
    assert np.allclose(s.hess(p), H, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(coord, st.floats(min_value=-0.5, max_value=0.5))
def test_families_are_holomorphic(x, y):
    # Cauchy-Riemann: dV/dy = i dV/dx
    s = gauss_well()
    z = x + 1j * y
    e = 1e-6
    dx = (s.V(z + e) - s.V(z - e)) / (2 * e)
    dy = (s.V(z + 1j * e) - s.V(z - 1j * e)) / (2 * e)
    assert np.allclose(dy, 1j * dx, atol=1e-6)


def test_assumptions_pass_for_reference():
    rep = validate_assumptions(gauss_well(), AssumptionBudget(samples=8))
    assert rep.passed, rep.to_dict()


def test_assumptions_report_missing_well():
    rep = validate_assumptions(PotentialSpec("constant", {"value": 1.0}, 1), AssumptionBudget(samples=2))
    assert not rep.passed
    assert rep.entries["A2"]["pass"] is False


def test_harmonic_has_no_island():
    with pytest.raises(NoBoundary):
        island_boundary(PotentialSpec("harmonic", {"E0": 0.5, "k": 1.0}, 1).with_well())


def test_free_has_no_well():
    with pytest.raises(NoWellFound):
        find_well(PotentialSpec("free", {}, 1))


def test_unknown_family():
    with pytest.raises(ValueError):
        PotentialSpec("quartic", {}, 1)
