import numpy as np
import pytest

from liaison.config import load_preset
from liaison.dynamics import EARTH_MOON, SystemConstants, collinear_points, jacobi_constant, propagate
from liaison.periodic import (
    FamilyRangeError, halo_seed, lunar_orbit_state, lyapunov_seed, richardson_halo,
)


@pytest.fixture(scope="module")
def l2_seed():
    return halo_seed("L2", 3.306)


def test_collinear_point_values():
    pts = collinear_points()
    assert abs(pts["L1"] - 0.8369) < 1e-4
    assert abs(pts["L2"] - 1.1557) < 1e-4


def test_collinear_hill_asymptotics():
    mu = 1e-6
    pts = collinear_points(SystemConstants(mu=mu))
    hill = (mu / 3) ** (1 / 3)
    assert abs((1 - mu - pts["L1"]) / hill - 1) < 0.01
    assert abs((pts["L2"] - 1 + mu) / hill - 1) < 0.01


def test_halo_seed_hits_requested_period(l2_seed):
    assert abs(l2_seed.period - 3.306) < 1e-6
    s = l2_seed.state.as_array()
    assert s[1] == 0.0 and s[3] == 0.0 and s[5] == 0.0


def test_halo_seed_is_periodic(l2_seed):
    s = l2_seed.state.as_array()
    end = propagate(s, 0.0, l2_seed.period)
    assert np.max(np.abs(end - s)) <= 1e-8
    assert abs(l2_seed.jacobi - jacobi_constant(s)) < 1e-14


def test_southern_branch_has_negative_z_near_moon(l2_seed):
    # for L2 the phase-zero crossing is the one nearest the Moon
    assert l2_seed.state.z < 0


def test_northern_branch_is_mirror():
    south, _ = richardson_halo("L1", 12000.0, "southern")
    north, _ = richardson_halo("L1", 12000.0, "northern")
    assert np.allclose(north * [1, 1, -1, 1, 1, -1], south)


def test_period_out_of_range_raises():
    with pytest.raises(FamilyRangeError):
        halo_seed("L2", 5.0)


def test_unknown_point_rejected():
    with pytest.raises(ValueError):
        halo_seed("L3", 3.0)


def test_shipped_presets_are_periodic():
    cfg = load_preset("eml1_l2")
    for sc in cfg.spacecraft:
        s = np.array(sc.state)
        end = propagate(s, 0.0, sc.period_tu)
        assert np.max(np.abs(end - s)) <= 1e-8


def test_lyapunov_is_planar_and_periodic():
    orb = lyapunov_seed("L2", 1.19)
    s = orb.state.as_array()
    assert s[2] == 0.0 and s[5] == 0.0
    assert np.max(np.abs(propagate(s, 0.0, orb.period) - s)) < 1e-8


def test_lunar_orbit_radius_and_speed():
    st = lunar_orbit_state(1837.4, 90.0)
    r = st.position - [1 - EARTH_MOON.mu, 0, 0]
    assert abs(np.linalg.norm(r) * EARTH_MOON.l_star - 1837.4) < 1e-9
    # inertial speed equals circular two-body speed
    v_in = st.velocity + np.cross([0, 0, 1.0], st.position - [1 - EARTH_MOON.mu, 0, 0])
    assert abs(np.linalg.norm(v_in) - np.sqrt(EARTH_MOON.mu / np.linalg.norm(r))) < 1e-12
