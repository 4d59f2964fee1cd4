"""Periodic orbit seeds: halo, planar Lyapunov and NRHO states, lunar orbiters.

Halo orbits start from Richardson's third-order expansion and are refined by a
symmetric single-shooting corrector (perpendicular y = 0 crossings).  Period
targeting walks the family by pseudo-arclength continuation until the
requested period is bracketed, then solves for the orbit at that period.

Branch convention: a ``"southern"`` halo has z < 0 where it crosses the x axis
nearest the Moon (so z > 0 at the far crossing); ``"northern"`` is its mirror
image in the xy plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import (
    EARTH_MOON,
    RotatingState,
    SystemConstants,
    _variational_rhs,
    acceleration,
    collinear_points,
    jacobi_constant,
)


class ConvergenceError(RuntimeError):
    """Differential correction did not converge."""


class FamilyRangeError(ValueError):
    """Requested period is outside the range reachable along the family."""


@dataclass(frozen=True)
class PeriodicOrbit:
    state: RotatingState
    period: float
    jacobi: float


def _gamma(point: str, constants: SystemConstants) -> float:
    pts = collinear_points(constants)
    moon = 1.0 - constants.mu
    if point == "L1":
        return moon - pts["L1"]
    if point == "L2":
        return pts["L2"] - moon
    raise ValueError(f"unknown libration point {point!r}")


def _point_x(point: str, constants: SystemConstants) -> float:
    return collinear_points(constants)[point]


def richardson_halo(point: str, az_km: float, branch: str = "southern",
                    constants: SystemConstants = EARTH_MOON) -> tuple[np.ndarray, float]:
    """Third-order analytic halo approximation at phase zero.

    Returns the rotating-frame state (non-dimensional) and the approximate
    period in TU.
    """
    mu = constants.mu
    gamma = _gamma(point, constants)
    if point == "L1":
        c = [
            (mu + (-1) ** n * (1 - mu) * gamma ** (n + 1) / (1 - gamma) ** (n + 1)) / gamma**3
            for n in range(5)
        ]
    else:
        c = [
            ((-1) ** n * mu + (-1) ** n * (1 - mu) * gamma ** (n + 1) / (1 + gamma) ** (n + 1)) / gamma**3
            for n in range(5)
        ]
    c2, c3, c4 = c[2], c[3], c[4]

    lam = math.sqrt((2 - c2 + math.sqrt((c2 - 2) ** 2 + 4 * (c2 - 1) * (1 + 2 * c2))) / 2)
    k = (lam**2 + 1 + 2 * c2) / (2 * lam)
    delta = lam**2 - c2
    d1 = 3 * lam**2 / k * (k * (6 * lam**2 - 1) - 2 * lam)
    d2 = 8 * lam**2 / k * (k * (11 * lam**2 - 1) - 2 * lam)

    a21 = 3 * c3 * (k**2 - 2) / (4 * (1 + 2 * c2))
    a22 = 3 * c3 / (4 * (1 + 2 * c2))
    a23 = -3 * c3 * lam / (4 * k * d1) * (3 * k**3 * lam - 6 * k * (k - lam) + 4)
    a24 = -3 * c3 * lam / (4 * k * d1) * (2 + 3 * k * lam)
    b21 = -3 * c3 * lam / (2 * d1) * (3 * k * lam - 4)
    b22 = 3 * c3 * lam / d1
    d21 = -c3 / (2 * lam**2)

    a31 = -9 * lam / (4 * d2) * (4 * c3 * (k * a23 - b21) + k * c4 * (4 + k**2)) + (
        9 * lam**2 + 1 - c2
    ) / (2 * d2) * (3 * c3 * (2 * a23 - k * b21) + c4 * (2 + 3 * k**2))
    a32 = -1 / d2 * (
        9 * lam / 4 * (4 * c3 * (k * a24 - b22) + k * c4)
        + 1.5 * (9 * lam**2 + 1 - c2) * (c3 * (k * b22 + d21 - 2 * a24) - c4)
    )
    b31 = 3 / (8 * d2) * (
        8 * lam * (3 * c3 * (k * b21 - 2 * a23) - c4 * (2 + 3 * k**2))
        + (9 * lam**2 + 1 + 2 * c2) * (4 * c3 * (k * a23 - b21) + k * c4 * (4 + k**2))
    )
    b32 = 1 / d2 * (
        9 * lam * (c3 * (k * b22 + d21 - 2 * a24) - c4)
        + 3 / 8 * (9 * lam**2 + 1 + 2 * c2) * (4 * c3 * (k * a24 - b22) + k * c4)
    )
    d31 = 3 / (64 * lam**2) * (4 * c3 * a24 + c4)
    d32 = 3 / (64 * lam**2) * (4 * c3 * (a23 - d21) + c4 * (4 + k**2))

    den = 2 * lam * (lam * (1 + k**2) - 2 * k)
    s1 = (1.5 * c3 * (2 * a21 * (k**2 - 2) - a23 * (k**2 + 2) - 2 * k * b21)
          - 3 / 8 * c4 * (3 * k**4 - 8 * k**2 + 8)) / den
    s2 = (1.5 * c3 * (2 * a22 * (k**2 - 2) + a24 * (k**2 + 2) + 2 * k * b22 + 5 * d21)
          + 3 / 8 * c4 * (12 - k**2)) / den
    a1 = -1.5 * c3 * (2 * a21 + a23 + 5 * d21) - 3 / 8 * c4 * (12 - k**2)
    a2 = 1.5 * c3 * (a24 - 2 * a22) + 9 / 8 * c4
    l1 = a1 + 2 * lam**2 * s1
    l2 = a2 + 2 * lam**2 * s2

    az = az_km / (gamma * constants.l_star)
    ax2 = (-l2 * az**2 - delta) / l1
    if ax2 <= 0:
        raise FamilyRangeError(f"no halo with Az = {az_km} km at {point}")
    ax = math.sqrt(ax2)
    omega = 1 + s1 * ax**2 + s2 * az**2
    period = 2 * math.pi / (lam * omega)
    if branch not in ("northern", "southern"):
        raise ValueError(f"branch must be 'northern' or 'southern', got {branch!r}")
    # southern: z < 0 at the x-axis crossing nearest the Moon.  Phase zero is
    # that crossing for L2 but the far one for L1.
    dm = 1.0 if branch == "northern" else -1.0
    if point == "L1":
        dm = -dm

    # tau1 = 0: all sine terms vanish
    x = a21 * ax**2 + a22 * az**2 - ax + (a23 * ax**2 - a24 * az**2) + (a31 * ax**3 - a32 * ax * az**2)
    z = dm * az + dm * d21 * ax * az * (1 - 3) + dm * (d32 * az * ax**2 - d31 * az**3)
    vy = lam * omega * (k * ax + 2 * (b21 * ax**2 - b22 * az**2) + 3 * (b31 * ax**3 - b32 * ax * az**2))

    # local frame -> barycentric rotating frame
    xl = _point_x(point, constants)
    state = np.array([gamma * x + xl, 0.0, gamma * z, 0.0, gamma * vy, 0.0])
    return state, period


def _crossing(state0: np.ndarray, t_guess: float, constants: SystemConstants, rtol: float):
    """Propagate with STM to the first y = 0 crossing after ``0.25 * t_guess``."""

    def y_event(t, y):
        return y[1]

    y_event.terminal = False
    y_event.direction = 0
    y0 = np.concatenate([state0, np.eye(6).ravel()])
    rhs = _variational_rhs(constants.mu, ())
    sol = solve_ivp(rhs, (0.0, 1.5 * t_guess), y0, method="DOP853", rtol=rtol, atol=rtol,
                    events=y_event, dense_output=False)
    times = sol.t_events[0]
    ys = sol.y_events[0]
    keep = times > 0.25 * t_guess
    if not np.any(keep):
        raise ConvergenceError("no half-period y = 0 crossing found")
    i = int(np.argmax(keep))
    yf = ys[i]
    return float(times[i]), yf[:6], yf[6:].reshape(6, 6)


def correct_symmetric(state0, half_period_guess: float, fixed: str = "z",
                      constants: SystemConstants = EARTH_MOON, tol: float = 1e-11,
                      max_iter: int = 30, rtol: float = 1e-12) -> PeriodicOrbit:
    """Single-shooting correction of a y = 0 symmetric periodic orbit.

    ``fixed`` selects the held coordinate: ``"z"`` (vary x0, vy0), ``"x"``
    (vary z0, vy0) or ``"planar"`` (vary vy0 only, z = vz = 0).
    """
    s = np.array(state0, dtype=float)
    s[[1, 3, 5]] = 0.0
    t_half = half_period_guess
    for _ in range(max_iter):
        t_half, sf, phi = _crossing(s, 2.0 * t_half, constants, rtol)
        acc = acceleration(sf, constants.mu)
        vyf = sf[4]
        if fixed == "planar":
            err = np.array([sf[3]])
            if np.max(np.abs(err)) < tol:
                break
            jac = np.array([[phi[3, 4] - acc[0] / vyf * phi[1, 4]]])
            cols = [4]
        else:
            err = np.array([sf[3], sf[5]])
            if np.max(np.abs(err)) < tol:
                break
            cols = [0, 4] if fixed == "z" else [2, 4]
            rows = [3, 5]
            jac = phi[np.ix_(rows, cols)] - np.outer(acc[[0, 2]], phi[1, cols]) / vyf
        step = np.linalg.solve(jac, -err)
        # keep Newton inside the region where the linearisation holds
        scale = min(1.0, 0.05 / max(np.max(np.abs(step)), 1e-300))
        s[cols] += scale * step
    else:
        raise ConvergenceError(f"symmetric corrector did not converge (|err| = {np.max(np.abs(err)):.3e})")

    return PeriodicOrbit(RotatingState.from_array(s), 2.0 * t_half, float(jacobi_constant(s, constants)))


_FREE = [0, 2, 4]  # x0, z0, vy0
_CONSTRAINED = [1, 3, 5]  # y, vx, vz at the half period


def _half_period_map(free: np.ndarray, template: np.ndarray, constants: SystemConstants, rtol: float):
    """Residual and Jacobian of the fixed-time symmetric shooting problem.

    ``free`` is ``(x0, z0, vy0, t_half)``; returns the residual
    ``(y, vx, vz)`` at ``t_half`` and its 3x4 Jacobian.
    """
    s = template.copy()
    s[_FREE] = free[:3]
    t_half = free[3]
    y0 = np.concatenate([s, np.eye(6).ravel()])
    sol = solve_ivp(_variational_rhs(constants.mu, ()), (0.0, t_half), y0, method="DOP853",
                    rtol=rtol, atol=rtol)
    if sol.status != 0:
        raise ConvergenceError(sol.message)
    yf = sol.y[:, -1]
    sf = yf[:6]
    phi = yf[6:].reshape(6, 6)
    deriv = np.concatenate([sf[3:], acceleration(sf, constants.mu)])
    jac = np.column_stack([phi[np.ix_(_CONSTRAINED, _FREE)], deriv[_CONSTRAINED]])
    return sf[_CONSTRAINED], jac


def _orbit_from_free(free, constants):

    s = np.zeros(6)
    s[_FREE] = free[:3]
    return PeriodicOrbit(RotatingState.from_array(s), 2.0 * free[3], float(jacobi_constant(s, constants)))


def _tangent(jac: np.ndarray, previous: np.ndarray | None) -> np.ndarray:
    _, _, vt = np.linalg.svd(jac)
    t = vt[-1]
    if previous is not None and np.dot(t, previous) < 0:
        t = -t
    return t


def halo_family(point: str, branch: str = "southern", constants: SystemConstants = EARTH_MOON,
                az_start_km: float = 8000.0, ds: float = 0.01, max_members: int = 400,
                rtol: float = 1e-12):
    """Yield corrected halo orbits by pseudo-arclength continuation.

    Starts from a Richardson guess of small amplitude and moves away from the
    bifurcation; the family is parametrised by arclength in
    ``(x0, z0, vy0, t_half)`` so turning points in any one coordinate are
    passed smoothly.
    """
    guess, period = richardson_halo(point, az_start_km, branch, constants)
    first = correct_symmetric(guess, period / 2.0, fixed="z", constants=constants, rtol=rtol)
    template = np.zeros(6)
    free = np.array([first.state.x, first.state.z, first.state.vy, first.period / 2.0])
    yield first
    _, jac = _half_period_map(free, template, constants, rtol)
    tangent = _tangent(jac, None)
    # move away from the planar bifurcation: |z0| must grow initially
    if tangent[1] * free[1] < 0:
        tangent = -tangent
    step = ds
    for _ in range(max_members):
        pred = free + step * tangent
        x = pred.copy()
        ok = False
        for _ in range(12):
            try:
                res, jac = _half_period_map(x, template, constants, rtol)
            except ConvergenceError:
                break
            arc = np.dot(x - free, tangent) - step
            if max(np.max(np.abs(res)), abs(arc)) < 1e-11:
                # reject jumps to a different branch
                ok = np.linalg.norm(x - pred) < 0.5 * step
                break
            full = np.vstack([jac, tangent])
            x = x + np.linalg.solve(full, -np.concatenate([res, [arc]]))
        if not ok:
            step /= 2.0
            if step < ds / 256:
                raise ConvergenceError("continuation step collapsed")
            continue
        new_tangent = _tangent(jac, tangent)
        free, tangent = x, new_tangent
        step = min(ds, step * 1.5)
        yield _orbit_from_free(free, constants)


def _solve_fixed_period(free0: np.ndarray, t_half: float, constants, rtol, tol=1e-11, max_iter=20):
    template = np.zeros(6)
    x = free0.copy()
    x[3] = t_half
    for _ in range(max_iter):
        res, jac = _half_period_map(x, template, constants, rtol)
        if np.max(np.abs(res)) < tol:
            return x
        step = np.linalg.lstsq(jac[:, :3], -res, rcond=None)[0]
        x[:3] += step
    raise ConvergenceError(f"fixed-period corrector did not converge (|res| = {np.max(np.abs(res)):.2e})")


def halo_seed(point: str, period: float, branch: str = "southern",
              constants: SystemConstants = EARTH_MOON, occurrence: int = 0,
              rtol: float = 1e-12) -> PeriodicOrbit:
    """Halo orbit about ``point`` with the requested period (TU).

    The family is walked from the planar bifurcation; ``occurrence`` picks
    which period match to return when the period is not monotonic along the
    family (0 = closest to the bifurcation).  Raises ``FamilyRangeError`` when
    the period is never reached.
    """
    if point not in ("L1", "L2"):
        raise ValueError(f"unknown libration point {point!r}")
    prev = None
    hits = 0
    for orbit in halo_family(point, branch, constants, rtol=rtol):
        if prev is not None and (prev.period - period) * (orbit.period - period) <= 0:
            if hits == occurrence:
                w = (period - prev.period) / (orbit.period - prev.period)
                a = np.array([prev.state.x, prev.state.z, prev.state.vy, 0.0])
                b = np.array([orbit.state.x, orbit.state.z, orbit.state.vy, 0.0])
                free = _solve_fixed_period(a + w * (b - a), period / 2.0, constants, rtol)
                return _orbit_from_free(free, constants)
            hits += 1
        prev = orbit
        if abs(orbit.state.z) > 0.4 or orbit.period < 1.0:
            break
    raise FamilyRangeError(f"period {period} TU not found on the {point} {branch} halo family")


def lyapunov_seed(point: str, x0: float, constants: SystemConstants = EARTH_MOON,
                  steps: int = 40) -> PeriodicOrbit:
    """Planar Lyapunov orbit crossing the x axis perpendicularly at ``x0``.

    Starts from the linearised solution near the libration point and continues
    in ``x0`` to the requested crossing.
    """
    mu = constants.mu
    xl = _point_x(point, constants)
    gamma = _gamma(point, constants)
    c2 = (mu + (1 - mu) * gamma**3 / (1 - gamma) ** 3) / gamma**3 if point == "L1" else (
        mu + (1 - mu) * gamma**3 / (1 + gamma) ** 3
    ) / gamma**3
    lam = math.sqrt((2 - c2 + math.sqrt((c2 - 2) ** 2 + 4 * (c2 - 1) * (1 + 2 * c2))) / 2)
    k = (lam**2 + 1 + 2 * c2) / (2 * lam)
    period = 2 * math.pi / lam

    def linear_guess(xs):
        ax = xs - xl
        return np.array([xs, 0.0, 0.0, 0.0, -k * lam * ax, 0.0])

    x_small = xl + math.copysign(2e-3, x0 - xl)
    orbit = correct_symmetric(linear_guess(x_small), period / 2.0, fixed="planar", constants=constants)
    for xs in np.linspace(x_small, x0, steps)[1:]:
        s = orbit.state.as_array()
        scale = (xs - xl) / (s[0] - xl)
        s = np.array([xs, 0.0, 0.0, 0.0, s[4] * scale, 0.0])
        orbit = correct_symmetric(s, orbit.period / 2.0, fixed="planar", constants=constants)
    return orbit


def lunar_orbit_state(radius_km: float, inclination_deg: float, raan_deg: float = 0.0,
                      arg_lat_deg: float = 0.0, constants: SystemConstants = EARTH_MOON) -> RotatingState:
    """Circular two-body lunar orbit expressed in the rotating frame.

    Angles refer to a Moon-centred frame aligned with the rotating axes.
    """
    mu = constants.mu
    r = radius_km / constants.l_star
    inc, raan, u = map(math.radians, (inclination_deg, raan_deg, arg_lat_deg))
    pos_orb = np.array([math.cos(u), math.sin(u), 0.0]) * r
    vel_orb = np.array([-math.sin(u), math.cos(u), 0.0]) * math.sqrt(mu / r)
    rot_i = np.array([[1, 0, 0], [0, math.cos(inc), -math.sin(inc)], [0, math.sin(inc), math.cos(inc)]])
    rot_o = np.array([[math.cos(raan), -math.sin(raan), 0], [math.sin(raan), math.cos(raan), 0], [0, 0, 1]])
    rot = rot_o @ rot_i
    p = rot @ pos_orb
    v_inertial = rot @ vel_orb
    # remove frame rotation: v_rot = v_in - omega x r
    v = v_inertial - np.cross([0.0, 0.0, 1.0], p)
    pos = p + np.array([1.0 - mu, 0.0, 0.0])
    return RotatingState.from_array(np.concatenate([pos, v]))
