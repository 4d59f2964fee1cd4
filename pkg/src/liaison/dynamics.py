"""Earth-Moon circular restricted three-body dynamics.

Everything here works in the non-dimensional rotating frame: the barycentre at
the origin, Earth at ``(-mu, 0, 0)``, Moon at ``(1 - mu, 0, 0)``.  Array
functions accept states with arbitrary leading batch dimensions, i.e. shape
``(..., 6)``, so Monte Carlo ensembles can be pushed through one integrator
call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

R_MIN = 1e-8

# rotating-frame angular velocity cross-product operator (n = 1)
OMEGA = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
OMEGA_2 = 2.0 * OMEGA


class SingularityError(ValueError):
    """State is within ``R_MIN`` of a primary."""


class IntegrationError(RuntimeError):
    """The integrator could not reach the requested epoch."""


@dataclass(frozen=True)
class SystemConstants:
    mu: float = 0.01215
    l_star: float = 384747.96  # km
    t_star: float = 375190.0  # s (4.343 days)

    def __post_init__(self) -> None:
        if not 0.0 < self.mu < 0.5:
            raise ValueError(f"mass ratio must lie in (0, 0.5), got {self.mu}")
        if self.l_star <= 0 or self.t_star <= 0:
            raise ValueError("characteristic length and time must be positive")

    @property
    def v_star(self) -> float:
        """Characteristic speed in km/s."""
        return self.l_star / self.t_star

    @property
    def l_star_m(self) -> float:
        return self.l_star * 1e3

    @property
    def v_star_m(self) -> float:
        return self.v_star * 1e3

    def tu_to_days(self, t):
        return np.asarray(t) * self.t_star / 86400.0


EARTH_MOON = SystemConstants()


@dataclass(frozen=True)
class RotatingState:
    x: float
    y: float
    z: float
    vx: float
    vy: float
    vz: float
    epoch: float = 0.0

    @classmethod
    def from_array(cls, vec, epoch: float = 0.0) -> "RotatingState":
        v = np.asarray(vec, dtype=float).reshape(6)
        return cls(*(float(c) for c in v), epoch=float(epoch))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.vx, self.vy, self.vz])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vz])


@dataclass(frozen=True)
class StackedState:
    """Several spacecraft states at a common epoch, concatenated in order."""

    states: tuple[RotatingState, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("stacked state needs at least one spacecraft")
        epochs = {s.epoch for s in self.states}
        if len(epochs) != 1:
            raise ValueError(f"spacecraft epochs differ: {sorted(epochs)}")

    @classmethod
    def from_array(cls, vec, epoch: float = 0.0) -> "StackedState":
        v = np.asarray(vec, dtype=float).reshape(-1, 6)
        return cls(tuple(RotatingState.from_array(row, epoch) for row in v))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def epoch(self) -> float:
        return self.states[0].epoch

    def as_array(self) -> np.ndarray:
        return np.concatenate([s.as_array() for s in self.states])


@dataclass(frozen=True)
class Stm:
    matrix: np.ndarray
    t0: float = 0.0
    t1: float = 0.0

    @property
    def rr(self) -> np.ndarray:
        return self.matrix[..., :3, :3]

    @property
    def rv(self) -> np.ndarray:
        return self.matrix[..., :3, 3:6]

    @property
    def vr(self) -> np.ndarray:
        return self.matrix[..., 3:6, :3]

    @property
    def vv(self) -> np.ndarray:
        return self.matrix[..., 3:6, 3:6]


def block_diag_stm(stms) -> np.ndarray:
    """Stack per-spacecraft 6x6 STMs into the 6N x 6N block-diagonal form.

    Accepts either a sequence of ``Stm``/arrays or one array of shape
    ``(..., N, 6, 6)``; leading batch dimensions are preserved.
    """
    if isinstance(stms, np.ndarray):
        mats = stms
    else:
        mats = np.stack([s.matrix if isinstance(s, Stm) else np.asarray(s) for s in stms], axis=-3)
    n = mats.shape[-3]
    out = np.zeros(mats.shape[:-3] + (6 * n, 6 * n))
    for i in range(n):
        out[..., 6 * i : 6 * i + 6, 6 * i : 6 * i + 6] = mats[..., i, :, :]
    return out


def _as_state_array(state) -> np.ndarray:
    if isinstance(state, RotatingState):
        return state.as_array()
    if isinstance(state, StackedState):
        return state.as_array().reshape(-1, 6)
    return np.asarray(state, dtype=float)


def primary_distances(position, mu: float):
    """Distances to Earth (r1) and Moon (r2) for positions of shape (..., 3)."""
    p = np.asarray(position, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    rho2 = y * y + z * z
    r1 = np.sqrt((x + mu) ** 2 + rho2)
    r2 = np.sqrt((x + mu - 1.0) ** 2 + rho2)
    return r1, r2


def _check_off_primary(r1, r2) -> None:
    if np.any(r1 < R_MIN) or np.any(r2 < R_MIN):
        raise SingularityError(f"state within {R_MIN:g} of a primary")


def acceleration(state, mu: float) -> np.ndarray:
    """Rotating-frame acceleration, shape (..., 3), from states (..., 6)."""
    s = np.asarray(state, dtype=float)
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    vx, vy = s[..., 3], s[..., 4]
    r1, r2 = primary_distances(s[..., :3], mu)
    _check_off_primary(r1, r2)
    k1 = (1.0 - mu) / r1**3
    k2 = mu / r2**3
    ax = 2.0 * vy + x - k1 * (x + mu) - k2 * (x + mu - 1.0)
    ay = -2.0 * vx + y - k1 * y - k2 * y
    az = -k1 * z - k2 * z
    return np.stack([ax, ay, az], axis=-1)


def eom(state, constants: SystemConstants = EARTH_MOON) -> np.ndarray:
    """Time derivative ``(vx, vy, vz, ax, ay, az)`` of one or many states."""
    s = _as_state_array(state)
    acc = acceleration(s, constants.mu)
    return np.concatenate([s[..., 3:6], acc], axis=-1)


def gradient_matrix(position, constants: SystemConstants = EARTH_MOON) -> np.ndarray:
    """Hessian of the pseudo-potential, i.e. d(acceleration)/d(position).

    Returns shape ``(..., 3, 3)`` for positions of shape ``(..., 3)``.
    """
    return _gradient(np.asarray(position, dtype=float), constants.mu)


def _gradient(p: np.ndarray, mu: float) -> np.ndarray:
    return _gradient_and_acceleration(p, None, mu)[0]


def _gradient_and_acceleration(p: np.ndarray, v, mu: float):
    """Pseudo-potential Hessian and (if ``v`` is given) the acceleration, sharing distances."""
    r1, r2 = primary_distances(p, mu)
    _check_off_primary(r1, r2)
    d1 = p.copy()
    d1[..., 0] += mu
    d2 = p.copy()
    d2[..., 0] += mu - 1.0
    k1 = (1.0 - mu) / r1**3
    k2 = mu / r2**3
    a1 = (3.0 * k1 / r1**2)[..., None, None]
    a2 = (3.0 * k2 / r2**2)[..., None, None]
    g = a1 * d1[..., :, None] * d1[..., None, :] + a2 * d2[..., :, None] * d2[..., None, :]
    diag = (k1 + k2)[..., None]
    g[..., [0, 1, 2], [0, 1, 2]] -= diag
    g[..., 0, 0] += 1.0
    g[..., 1, 1] += 1.0
    if v is None:
        return g, None
    acc = -k1[..., None] * d1 - k2[..., None] * d2
    acc[..., 0] += p[..., 0] + 2.0 * v[..., 1]
    acc[..., 1] += p[..., 1] - 2.0 * v[..., 0]
    return g, acc


def jacobi_constant(state, constants: SystemConstants = EARTH_MOON):
    s = _as_state_array(state)
    mu = constants.mu
    r1, r2 = primary_distances(s[..., :3], mu)
    _check_off_primary(r1, r2)
    x, y = s[..., 0], s[..., 1]
    v2 = np.sum(s[..., 3:6] ** 2, axis=-1)
    return x * x + y * y + 2.0 * (1.0 - mu) / r1 + 2.0 * mu / r2 - v2


def _variational_rhs(mu: float, shape: tuple):
    """RHS for states+STMs packed as a flat vector of ``shape + (42,)``."""

    def rhs(_t, flat):
        y = flat.reshape(shape + (42,))
        s = y[..., :6]
        phi = y[..., 6:].reshape(shape + (6, 6))
        g, acc = _gradient_and_acceleration(s[..., :3], s[..., 3:6], mu)
        dphi = np.empty_like(phi)
        dphi[..., :3, :] = phi[..., 3:, :]
        dphi[..., 3:, :] = g @ phi[..., :3, :] + OMEGA_2 @ phi[..., 3:, :]
        ds = np.concatenate([s[..., 3:6], acc], axis=-1)
        return np.concatenate([ds, dphi.reshape(shape + (36,))], axis=-1).ravel()

    return rhs


def _integrate(rhs, y0, t0, t1, rtol, atol, t_eval=None):
    try:
        sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    except SingularityError as exc:
        raise IntegrationError(f"trajectory reached a primary between t={t0} and t={t1}") from exc
    if sol.status != 0:
        raise IntegrationError(f"integration failed between t={t0} and t={t1}: {sol.message}")
    return sol


def _state_rhs(mu: float, shape: tuple):
    def rhs(_t, flat):
        y = flat.reshape(shape + (6,))
        return np.concatenate([y[..., 3:6], acceleration(y, mu)], axis=-1).ravel()

    return rhs


def propagate(state, t0: float, t1: float, constants: SystemConstants = EARTH_MOON,
              rtol: float = 1e-12, atol: float = 1e-12):
    """Propagate one ``RotatingState`` (or an array of states) from t0 to t1.

    Returns a ``RotatingState`` when given one, otherwise an array with the
    input's shape.  Backward propagation (t1 < t0) is allowed.
    """
    s = _as_state_array(state)
    if t1 == t0:
        out = s.copy()
    else:
        sol = _integrate(_state_rhs(constants.mu, s.shape[:-1]), s.ravel(), t0, t1, rtol, atol)
        out = sol.y[:, -1].reshape(s.shape)
    if isinstance(state, RotatingState):
        return RotatingState.from_array(out, epoch=t1)
    return out


def propagate_with_stm(state, t0: float, t1: float, constants: SystemConstants = EARTH_MOON,
                       rtol: float = 1e-12, atol: float = 1e-12):
    """Propagate state(s) together with the 6x6 STM(s) ``Phi(t1, t0)``.

    For a ``RotatingState`` input returns ``(RotatingState, Stm)``; for an
    array input of shape ``(..., 6)`` returns ``(states, stms)`` with shapes
    ``(..., 6)`` and ``(..., 6, 6)``.
    """
    s = _as_state_array(state)
    shape = s.shape[:-1]
    phi0 = np.broadcast_to(np.eye(6), shape + (6, 6))
    if t1 == t0:
        out, phi = s.copy(), phi0.copy()
    else:
        y0 = np.concatenate([s, phi0.reshape(shape + (36,))], axis=-1).ravel()
        sol = _integrate(_variational_rhs(constants.mu, shape), y0, t0, t1, rtol, atol)
        y1 = sol.y[:, -1].reshape(shape + (42,))
        out, phi = y1[..., :6], y1[..., 6:].reshape(shape + (6, 6))
    if isinstance(state, RotatingState):
        return RotatingState.from_array(out, epoch=t1), Stm(phi, t0, t1)
    return out, phi


def sample_trajectory(state, t0: float, times, constants: SystemConstants = EARTH_MOON,
                      with_stm: bool = False, rtol: float = 1e-12, atol: float = 1e-12):
    """States (and optionally ``Phi(t_k, t0)``) at each of ``times``.

    ``times`` must be sorted and start at or after ``t0``.  Output arrays have
    the sample axis first: ``(K, ..., 6)`` and ``(K, ..., 6, 6)``.
    """
    s = _as_state_array(state)
    times = np.asarray(times, dtype=float)
    shape = s.shape[:-1]
    if with_stm:
        phi0 = np.broadcast_to(np.eye(6), shape + (6, 6)).reshape(shape + (36,))
        y0 = np.concatenate([s, phi0], axis=-1).ravel()
        rhs = _variational_rhs(constants.mu, shape)
        width = 42
    else:
        y0 = s.ravel()
        rhs = _state_rhs(constants.mu, shape)
        width = 6
    t_end = times[-1]
    if t_end == t0:
        ys = np.repeat(y0[None, :], len(times), axis=0)
    else:
        sol = _integrate(rhs, y0, t0, t_end, rtol, atol, t_eval=times)
        ys = sol.y.T
    ys = ys.reshape((len(times),) + shape + (width,))
    if with_stm:
        return ys[..., :6], ys[..., 6:].reshape((len(times),) + shape + (6, 6))
    return ys


def stm_taylor(g_end, dt: float) -> np.ndarray:
    """Fourth-order series STM for a short arc with constant gradient matrix.

    ``g_end`` is the gradient matrix evaluated at the end of the interval.
    Blocks follow the expansion of ``exp(A dt)`` with
    ``A = [[0, I], [G, 2 Omega]]``, truncated after the ``dt**4 / 24`` term.
    Works on stacks of gradient matrices, shape (..., 3, 3).
    """
    g = np.asarray(g_end, dtype=float)
    eye = np.eye(3)
    om = OMEGA
    om2 = om @ om
    om3 = om2 @ om
    om4 = om3 @ om
    og = om @ g
    go = g @ om
    gg = g @ g
    d1, d2, d3, d4 = dt, dt**2 / 2.0, dt**3 / 6.0, dt**4 / 24.0

    phi_rr = eye + g * d2 + 2.0 * og * d3 + (gg + 4.0 * om2 @ g) * d4
    phi_rv = eye * d1 + 2.0 * om * d2 + (g + 4.0 * om2) * d3 + (2.0 * go + 2.0 * og + 8.0 * om3) * d4
    phi_vr = g * d1 + 2.0 * og * d2 + (gg + 4.0 * om2 @ g) * d3 + (
        2.0 * go @ g + 2.0 * om @ gg + 8.0 * om3 @ g
    ) * d4
    phi_vv = eye + 2.0 * om * d1 + (g + 4.0 * om2) * d2 + (2.0 * go + 2.0 * og + 8.0 * om3) * d3 + (
        gg + 4.0 * g @ om2 + 4.0 * om @ go + 4.0 * om2 @ g + 16.0 * om4
    ) * d4

    top = np.concatenate([phi_rr, phi_rv], axis=-1)
    bottom = np.concatenate([phi_vr, phi_vv], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def stm_relative_error(approx, reference) -> float:
    """Mean absolute elementwise relative error between two 6x6 STMs."""
    a = np.asarray(approx)
    r = np.asarray(reference)
    return float(np.mean(np.abs((a - r) / r)))


def _collinear_residual(x: float, mu: float) -> float:
    r1 = abs(x + mu)
    r2 = abs(x + mu - 1.0)
    return x - (1.0 - mu) * (x + mu) / r1**3 - mu * (x + mu - 1.0) / r2**3


def collinear_points(constants: SystemConstants = EARTH_MOON) -> dict[str, float]:
    """x-coordinates of the L1 and L2 equilibria."""
    mu = constants.mu
    moon = 1.0 - mu
    hill = (mu / 3.0) ** (1.0 / 3.0)
    eps = 1e-6 * hill
    x_l1 = brentq(_collinear_residual, -mu + 1e-3, moon - eps, args=(mu,), xtol=1e-15, rtol=1e-15)
    x_l2 = brentq(_collinear_residual, moon + eps, 2.0, args=(mu,), xtol=1e-15, rtol=1e-15)
    return {"L1": x_l1, "L2": x_l2}


def taylor_stm_errors(states, dt: float, constants: SystemConstants = EARTH_MOON,
                      rtol: float = 1e-12, atol: float = 1e-12) -> np.ndarray:
    """Relative error of :func:`stm_taylor` against the numeric STM from each state.

    ``states`` has shape ``(M, 6)``; every row starts one arc of length ``dt``
    (TU).  Returns the ``M`` values of :func:`stm_relative_error`.
    """
    s = np.asarray(states, dtype=float).reshape(-1, 6)
    end, phi = propagate_with_stm(s, 0.0, dt, constants, rtol=rtol, atol=atol)
    approx = stm_taylor(_gradient(end[:, :3], constants.mu), dt)
    return np.mean(np.abs((approx - phi) / phi), axis=(1, 2))
