"""Measurement Jacobians and sequential filters for stacked spacecraft states.

The stacked state is ``(x_1, ..., x_N)`` with 6 entries per spacecraft.  All
filter functions broadcast over leading batch axes so that a whole Monte Carlo
ensemble is advanced with one call: states ``(..., n)``, covariances
``(..., n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import EARTH_MOON, SystemConstants, block_diag_stm, propagate_with_stm
from .observations import ZeroSeparationError, model_value, wrap_angle


class GimbalSingularityError(ValueError):
    """Elevation is too close to +-90 deg for a usable azimuth row."""


class NumericalFailureError(ArithmeticError):
    """Innovation covariance lost positive definiteness."""


ELEVATION_LIMIT = np.deg2rad(90.0 - 0.1)


def _pair(x, i, j):
    x = np.asarray(x, dtype=float)
    a = x[..., 6 * i : 6 * i + 6]
    b = x[..., 6 * j : 6 * j + 6]
    d = a[..., :3] - b[..., :3]
    rho = np.linalg.norm(d, axis=-1)
    if np.any(rho == 0.0):
        raise ZeroSeparationError("spacecraft positions coincide")
    return x, a, b, d, rho


def _row(x, i, j, d_ri, d_vi):
    """Assemble a row with ``d_ri``/``d_vi`` on spacecraft i and their negatives on j."""
    out = np.zeros(x.shape)
    out[..., 6 * i : 6 * i + 3] = d_ri
    out[..., 6 * j : 6 * j + 3] = -d_ri
    if d_vi is not None:
        out[..., 6 * i + 3 : 6 * i + 6] = d_vi
        out[..., 6 * j + 3 : 6 * j + 6] = -d_vi
    return out


def htilde_range(x, i: int, j: int):
    """d(range)/d(stacked state): unit LOS on positions, zero on velocities."""
    x, a, b, d, rho = _pair(x, i, j)
    return _row(x, i, j, d / rho[..., None], None)


def htilde_range_rate(x, i: int, j: int):
    x, a, b, d, rho = _pair(x, i, j)
    dv = a[..., 3:6] - b[..., 3:6]
    u = d / rho[..., None]
    rdot = np.sum(u * dv, axis=-1)
    d_r = (dv - u * rdot[..., None]) / rho[..., None]
    return _row(x, i, j, d_r, u)


def htilde_los(x, i: int, j: int):
    """Azimuth and elevation rows, shape ``(..., 2, n)``; zero on velocities."""
    x, a, b, d, rho = _pair(x, i, j)
    # angles are of r_j - r_i = -d
    rxy2 = d[..., 0] ** 2 + d[..., 1] ** 2
    el = np.arcsin(np.clip(-d[..., 2] / rho, -1.0, 1.0))
    if np.any(np.abs(el) > ELEVATION_LIMIT):
        raise GimbalSingularityError("elevation within 0.1 deg of the pole")
    rxy = np.sqrt(rxy2)
    d_az = np.stack([-d[..., 1] / rxy2, d[..., 0] / rxy2, np.zeros_like(rxy)], axis=-1)
    d_el = np.stack(
        [-d[..., 0] * d[..., 2] / (rho**2 * rxy), -d[..., 1] * d[..., 2] / (rho**2 * rxy), rxy / rho**2],
        axis=-1,
    )
    return np.stack([_row(x, i, j, d_az, None), _row(x, i, j, -d_el, None)], axis=-2)


def measurement(kind: str, x, i: int, j: int):
    """Predicted value and Jacobian row for a link from spacecraft i to j."""
    x = np.asarray(x, dtype=float)
    a = x[..., 6 * i : 6 * i + 6]
    b = x[..., 6 * j : 6 * j + 6]
    h = model_value(kind, a, b)
    if kind == "range":
        return h, htilde_range(x, i, j)
    if kind == "range_rate":
        return h, htilde_range_rate(x, i, j)
    rows = htilde_los(x, i, j)
    return h, rows[..., 0 if kind == "azimuth" else 1, :]


def innovation(kind: str, y, h):
    r = np.asarray(y) - np.asarray(h)
    return wrap_angle(r) if kind == "azimuth" else r


@dataclass(frozen=True)
class FilterConfig:
    """A-priori uncertainty and process noise.

    ``q`` is the power spectral density of a white acceleration on every
    axis (non-dimensional, DU^2/TU^3), turned into a discrete covariance by
    :func:`process_noise`.
    """

    pos_sigma_m: float = 1e3
    vel_sigma_mps: float = 0.01
    q: float = 1e-12
    consider_bias_sigma_m: float = 0.0
    rtol: float = 1e-11
    atol: float = 1e-14

    def __post_init__(self):
        if self.pos_sigma_m <= 0 or self.vel_sigma_mps <= 0:
            raise ValueError("a-priori sigmas must be positive")
        if self.q < 0 or self.consider_bias_sigma_m < 0:
            raise ValueError("q and consider bias sigma must be non-negative")

    def p0(self, nsc: int, constants: SystemConstants = EARTH_MOON) -> np.ndarray:
        one = np.r_[np.full(3, (self.pos_sigma_m / constants.l_star_m) ** 2),
                    np.full(3, (self.vel_sigma_mps / constants.v_star_m) ** 2)]
        return np.diag(np.tile(one, nsc))


def process_noise(q: float, dt: float, nsc: int) -> np.ndarray:
    """Discrete covariance of a white-acceleration input over ``dt``."""
    dt = abs(dt)
    block = q * np.block([
        [np.eye(3) * dt**3 / 3.0, np.eye(3) * dt**2 / 2.0],
        [np.eye(3) * dt**2 / 2.0, np.eye(3) * dt],
    ])
    return np.kron(np.eye(nsc), block)


def symmetrize(p):
    return 0.5 * (p + np.swapaxes(p, -1, -2))


@dataclass(frozen=True)
class FilterState:
    x: np.ndarray
    P: np.ndarray
    epoch: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        P = np.asarray(self.P, dtype=float)
        if P.shape[-2:] != (x.shape[-1], x.shape[-1]):
            raise ValueError("covariance shape does not match the state")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", symmetrize(P))


@dataclass(frozen=True)
class ConsiderState:
    """Filter state plus considered (not estimated) constant parameters.

    ``c`` is the a-priori value of the consider parameters (non-dimensional),
    ``Pcc`` their covariance and ``Pxc`` the state/parameter cross covariance.
    """

    filter: FilterState
    c: np.ndarray
    Pcc: np.ndarray
    Pxc: np.ndarray

    @property
    def x(self):
        return self.filter.x

    @property
    def P(self):
        return self.filter.P

    @property
    def epoch(self):
        return self.filter.epoch


def propagate_estimate(x, t0: float, t1: float, constants: SystemConstants = EARTH_MOON,
                       rtol: float = 1e-11, atol: float = 1e-14):
    """Propagate stacked state(s) and return the block-diagonal STM."""
    x = np.asarray(x, dtype=float)
    per_sc = x.reshape(x.shape[:-1] + (-1, 6))
    s1, phi = propagate_with_stm(per_sc, t0, t1, constants, rtol=rtol, atol=atol)
    return s1.reshape(x.shape), block_diag_stm(phi)


def ekf_predict(fs: FilterState, to_epoch: float, constants: SystemConstants = EARTH_MOON,
                q: float = 0.0, rtol: float = 1e-11, atol: float = 1e-14):
    """Time update through the nonlinear dynamics; returns ``(state, stm)``."""
    if to_epoch < fs.epoch:
        raise ValueError("prediction epoch precedes the filter epoch")
    x1, phi = propagate_estimate(fs.x, fs.epoch, to_epoch, constants, rtol, atol)
    P = phi @ fs.P @ np.swapaxes(phi, -1, -2)
    if q > 0:
        P = P + process_noise(q, to_epoch - fs.epoch, fs.x.shape[-1] // 6)
    return FilterState(x1, P, to_epoch), phi


def covariance_predict(P, phi, Q=None):
    out = phi @ P @ np.swapaxes(phi, -1, -2)
    return symmetrize(out if Q is None else out + Q)


def _solve_gain(PHt, S):
    if np.any(~np.isfinite(S)):
        raise NumericalFailureError("non-finite innovation covariance")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("innovation covariance is not positive definite") from exc
    # K = PH^T S^-1 via two triangular solves on the transposed system
    z = np.linalg.solve(L, np.swapaxes(PHt, -1, -2))
    return np.swapaxes(np.linalg.solve(np.swapaxes(L, -1, -2), z), -1, -2)


def ekf_update(fs: FilterState, residual, H, R) -> FilterState:
    """Measurement update with Joseph-form covariance.

    ``residual`` is ``y - h(x)`` with shape ``(..., m)``, ``H`` is
    ``(..., m, n)`` and ``R`` the ``(m, m)`` (or batched) noise covariance.
    Scalar measurements may pass ``residual`` as ``(...)`` and ``H`` as
    ``(..., n)``.
    """
    H = np.asarray(H, dtype=float)
    residual = np.asarray(residual, dtype=float)
    scalar = H.ndim == fs.x.ndim
    if scalar:
        H = H[..., None, :]
        residual = residual[..., None]
    R = np.atleast_2d(np.asarray(R, dtype=float))
    Ht = np.swapaxes(H, -1, -2)
    PHt = fs.P @ Ht
    S = H @ PHt + R
    K = _solve_gain(PHt, S)
    x = fs.x + (K @ residual[..., None])[..., 0]
    ikh = np.eye(fs.x.shape[-1]) - K @ H
    P = ikh @ fs.P @ np.swapaxes(ikh, -1, -2) + K @ R @ np.swapaxes(K, -1, -2)
    return FilterState(x, P, fs.epoch)


def kalman_gain(P, H, R):
    H = np.atleast_2d(H)
    PHt = P @ H.T
    return _solve_gain(PHt, H @ PHt + np.atleast_2d(R))


def skf_predict(cs: ConsiderState, to_epoch: float, constants: SystemConstants = EARTH_MOON,
                q: float = 0.0, rtol: float = 1e-11, atol: float = 1e-14):
    """Time update of the consider filter; the parameters have no dynamics."""
    fs, phi = ekf_predict(cs.filter, to_epoch, constants, q, rtol, atol)
    return ConsiderState(fs, cs.c, cs.Pcc, phi @ cs.Pxc), phi


def skf_update(cs: ConsiderState, residual, H, Hc, R) -> ConsiderState:
    """Schmidt-Kalman update; the consider parameters stay fixed.

    ``Hc`` is the sensitivity of the measurement to the consider parameters,
    shape ``(..., m, p)`` (or ``(..., p)`` for scalars).  ``residual`` is
    ``y - h(x)``; the a-priori parameter value ``c`` is removed here.
    """
    fs = cs.filter
    H = np.asarray(H, dtype=float)
    Hc = np.asarray(Hc, dtype=float)
    residual = np.asarray(residual, dtype=float)
    if H.ndim == fs.x.ndim:
        H = H[..., None, :]
        Hc = Hc[..., None, :]
        residual = residual[..., None]
    R = np.atleast_2d(np.asarray(R, dtype=float))
    P, Pxc, Pcc = fs.P, cs.Pxc, cs.Pcc
    Ht = np.swapaxes(H, -1, -2)
    Hct = np.swapaxes(Hc, -1, -2)
    Pcx = np.swapaxes(Pxc, -1, -2)

    cross = P @ Ht + Pxc @ Hct
    S = H @ cross + Hc @ (Pcx @ Ht + Pcc @ Hct) + R
    K = _solve_gain(cross, S)
    Kt = np.swapaxes(K, -1, -2)

    r = residual - (Hc @ np.asarray(cs.c, dtype=float)[..., None])[..., 0]
    x = fs.x + (K @ r[..., None])[..., 0]
    ikh = np.eye(fs.x.shape[-1]) - K @ H
    ikh_t = np.swapaxes(ikh, -1, -2)
    P_new = (
        ikh @ P @ ikh_t
        - ikh @ Pxc @ Hct @ Kt
        - K @ Hc @ Pcx @ ikh_t
        + K @ (Hc @ Pcc @ Hct + R) @ Kt
    )
    Pxc_new = ikh @ Pxc - K @ Hc @ Pcc
    return ConsiderState(FilterState(x, P_new, fs.epoch), cs.c, Pcc, Pxc_new)


def nees(error, P):
    """Normalised estimation error squared ``e^T P^-1 e``."""
    e = np.asarray(error, dtype=float)
    sol = np.linalg.solve(P, e[..., None])[..., 0]
    return np.sum(e * sol, axis=-1)
