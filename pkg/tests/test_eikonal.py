import numpy as np
import pytest

from conftest import R_B, S_REF
from resonia.eikonal import (agmon_distance_1d, agmon_fast_march, caustic_detect, eikonal_residual,
                             geodesic_fan, geodesic_shoot, interaction_set)
from resonia.errors import GridTooCoarse
from resonia.potential import PotentialSpec, gauss_well, island_boundary


def test_action_frozen(spec):
    assert float(agmon_distance_1d(spec, np.array([R_B]))[0]) == pytest.approx(S_REF, rel=1e-12)


def test_harmonic_distance_is_half_square():
    s = PotentialSpec("harmonic", {"E0": 0.5, "k": 1.0}, 1).with_well()
    x = np.linspace(-2, 2, 9)
    assert np.allclose(agmon_distance_1d(s, x), 0.5 * x * x, atol=1e-12)


def test_fast_march_converges(spec, boundary):
    errs = []
    for n in (201, 401, 801):
        fld = agmon_fast_march(spec, nodes=n)
        errs.append(abs(float(np.max(fld.interpolate(boundary.points))) - S_REF))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-3 * S_REF


def test_eikonal_residual_small(field, spec, boundary):
    xs = field.points().reshape(-1, 1)
    bound = 5 * field.spacing * np.max(np.abs(spec.grad(xs)))
    assert eikonal_residual(field, spec, boundary) <= bound


def test_geodesic_action_and_energy(spec):
    g = geodesic_shoot(spec, [R_B])
    assert g.action[-1] == pytest.approx(S_REF, rel=1e-9)
    assert np.max(np.abs(g.energy_defect(spec))) < 1e-8


def test_seed_ball_guard(spec):
    with pytest.raises(GridTooCoarse):
        agmon_fast_march(spec, nodes=101, seed_cells=2)


def test_gamma_1d(field, boundary):
    gs = interaction_set(field, boundary)
    assert gs.n_gamma == 0
    assert gs.S == pytest.approx(S_REF, rel=1e-3)
    assert len(gs.gamma_points) == 2


def test_gamma_radial_is_a_circle(spec2d):
    gs = interaction_set(agmon_fast_march(spec2d, nodes=161), island_boundary(spec2d))
    assert gs.n_gamma == 1


def test_gamma_tilted_is_isolated():
    s = gauss_well(dim=2, tilt=0.05).with_well()
    gs = interaction_set(agmon_fast_march(s, nodes=161), island_boundary(s))
    assert gs.n_gamma == 0
    assert len(gs.gamma_points) == 1
    assert gs.transverse_hessian[0] > 0


def test_caustic_on_boundary(spec):
    fan = geodesic_fan(spec, [[1.0], [-1.0]])
    cs = caustic_detect(fan, spec, S_REF)
    assert cs.boundary_only
    assert np.allclose(np.abs(cs.points[:, 0]), R_B, atol=1e-5)
