import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liaison.dynamics import (
    EARTH_MOON, OMEGA, RotatingState, SingularityError, Stm, SystemConstants, acceleration, block_diag_stm,
    collinear_points, eom, gradient_matrix, jacobi_constant, propagate, propagate_with_stm, sample_trajectory,
    stm_relative_error, stm_taylor, taylor_stm_errors,
)

from conftest import random_offprimary_states

MU = EARTH_MOON.mu
coord = st.floats(-1.5, 1.5, allow_nan=False)


def offprimary(p):
    return np.linalg.norm(p - [-MU, 0, 0]) > 0.05 and np.linalg.norm(p - [1 - MU, 0, 0]) > 0.02


def test_constants_defaults_and_validation():
    assert EARTH_MOON.mu == 0.01215
    assert EARTH_MOON.l_star == 384747.96
    assert EARTH_MOON.t_star == 375190.0
    for bad in (dict(mu=0.0), dict(mu=0.5), dict(l_star=-1.0), dict(t_star=0.0)):
        with pytest.raises(ValueError):
            SystemConstants(**bad)


def test_eom_vanishes_at_l1():
    x = collinear_points()["L1"]
    d = eom(np.array([x, 0, 0, 0, 0, 0]))
    assert np.all(np.abs(d) < 1e-12)


def test_eom_midpoint_symmetry():
    d = eom(np.array([0.5 - MU, 0, 0, 0, 0, 0]))
    assert d[4] == 0.0 and d[5] == 0.0


def test_eom_position_derivative_is_velocity():
    s = np.array([0.8, 0.1, -0.05, 0.01, -0.2, 0.3])
    assert np.array_equal(eom(s)[:3], s[3:])


def test_eom_rejects_primary():
    with pytest.raises(SingularityError):
        eom(np.array([-MU, 0, 0, 0, 0, 0]))
    with pytest.raises(SingularityError):
        eom(np.array([1 - MU + 1e-9, 0, 0, 0, 0, 0]))


@settings(max_examples=100, deadline=None)
@given(coord, coord, coord)
def test_gradient_trace_and_symmetry(x, y, z):
    p = np.array([x, y, z])
    if not offprimary(p):
        return
    g = gradient_matrix(p)
    assert abs(np.trace(g) - 2.0) < 1e-10
    assert np.max(np.abs(g - g.T)) <= 1e-12 * max(1.0, np.max(np.abs(g)))


def test_gradient_matches_finite_difference():
    rng = np.random.default_rng(1)
    for s in random_offprimary_states(rng, 100):
        g = gradient_matrix(s[:3])
        h = 1e-7
        fd = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(6)
            e[j] = h
            # velocity-independent part of the acceleration: drop the Coriolis terms
            a_p = acceleration(s + e, MU) - 2 * np.array([s[4], -s[3], 0])
            a_m = acceleration(s - e, MU) - 2 * np.array([s[4], -s[3], 0])
            fd[:, j] = (a_p - a_m) / (2 * h)
        assert np.max(np.abs(fd - g)) < 1e-6 * max(1.0, np.max(np.abs(g)))


@settings(max_examples=50, deadline=None)
@given(coord, coord, st.floats(0.01, 0.5), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_acceleration_planar_symmetry(x, y, z, vx, vy, vz):
    s = np.array([x, y, z, vx, vy, vz])
    if not offprimary(s[:3]):
        return
    m = s * [1, 1, -1, 1, 1, -1]
    a, b = acceleration(s, MU), acceleration(m, MU)
    assert np.allclose(a[:2], b[:2], rtol=0, atol=1e-14 * max(1, np.abs(a).max()))
    assert abs(a[2] + b[2]) <= 1e-14 * max(1, abs(a[2]))


def test_propagate_identity_and_reversibility(l2_halo):
    s, period = l2_halo
    assert np.array_equal(propagate(s, 0.3, 0.3), s)
    fwd = propagate(s, 0.0, 1.0)
    back = propagate(fwd, 1.0, 0.0)
    assert np.max(np.abs(back - s)) < 1e-9


def test_propagate_returns_rotating_state(l2_halo):
    s, _ = l2_halo
    out = propagate(RotatingState.from_array(s), 0.0, 0.1)
    assert isinstance(out, RotatingState) and out.epoch == 0.1


def test_jacobi_conserved_over_one_period(l2_halo):
    s, period = l2_halo
    end = propagate(s, 0.0, period)
    assert abs(jacobi_constant(end) - jacobi_constant(s)) <= 1e-10
    # periodic seed closes on itself
    assert np.max(np.abs(end - s)) < 1e-6


def test_stm_determinant_and_identity(l2_halo):
    s, _ = l2_halo
    _, phi0 = propagate_with_stm(s, 0.0, 0.0)
    assert np.array_equal(phi0, np.eye(6))
    _, phi = propagate_with_stm(s, 0.0, 1.0)
    assert abs(np.linalg.det(phi) - 1.0) <= 1e-9


def test_stm_columns_match_finite_difference(l2_halo):
    s, _ = l2_halo
    t1 = 0.5
    base, phi = propagate_with_stm(s, 0.0, t1)
    eps = 1e-7
    for j in range(6):
        e = np.zeros(6)
        e[j] = eps
        col = (propagate(s + e, 0.0, t1) - propagate(s - e, 0.0, t1)) / (2 * eps)
        assert np.max(np.abs(col - phi[:, j])) < 1e-5 * max(1.0, np.max(np.abs(phi[:, j])))


def test_stm_object_blocks():
    m = np.arange(36.0).reshape(6, 6)
    stm = Stm(m, 0.0, 1.0)
    assert np.array_equal(stm.rr, m[:3, :3]) and np.array_equal(stm.vv, m[3:, 3:])
    assert np.array_equal(stm.rv, m[:3, 3:]) and np.array_equal(stm.vr, m[3:, :3])


def test_block_diag_stm():
    a, b = np.eye(6) * 2, np.eye(6) * 3
    big = block_diag_stm(np.stack([a, b]))
    assert big.shape == (12, 12)
    assert np.array_equal(big[:6, :6], a) and np.array_equal(big[6:, 6:], b)
    assert not big[:6, 6:].any()


def test_stm_taylor_zero_step_is_identity():
    assert np.array_equal(stm_taylor(gradient_matrix(np.array([1.1, 0, 0.05])), 0.0), np.eye(6))


def test_stm_taylor_error_decreases_with_step(l2_halo):
    s, _ = l2_halo
    arc = sample_trajectory(s, 0.0, np.linspace(0.0, 1.6, 25)[1:])
    errs = [np.sqrt(np.mean(taylor_stm_errors(arc, dt / EARTH_MOON.t_star) ** 2)) for dt in (600, 100, 60, 10)]
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_stm_taylor_matches_exponential_for_constant_gradient():
    # with G frozen the true STM is expm(A dt); the series must agree to O(dt^5)
    from scipy.linalg import expm

    g = gradient_matrix(np.array([1.15, 0.02, -0.04]))
    a = np.block([[np.zeros((3, 3)), np.eye(3)], [g, 2 * OMEGA]])
    for dt in (1e-3, 1e-2):
        err = np.max(np.abs(stm_taylor(g, dt) - expm(a * dt)))
        assert err < 10 * np.max(np.abs(a)) ** 5 * dt**5 / 120


def test_stm_relative_error_zero_for_identical():
    m = np.random.default_rng(0).normal(size=(6, 6))
    assert stm_relative_error(m, m) == 0.0


def test_collinear_points_are_equilibria():
    pts = collinear_points()
    assert 0.8 < pts["L1"] < 1 - MU < pts["L2"] < 1.2
    for x in pts.values():
        assert np.all(np.abs(acceleration(np.array([x, 0, 0, 0, 0, 0]), MU)) < 1e-12)
