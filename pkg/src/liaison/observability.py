"""Observability Gramian, information matrix and derived metrics.

Measurement rows are mapped to the initial epoch through the state transition
matrix before accumulation.  No a-priori covariance enters any product here:
a prior would make an unobservable system look observable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RANK_TOL = 1e-10
XI_GUARD = 1e-14


@dataclass
class ObservabilityReport:
    singular_values: np.ndarray
    condition_number: float
    unobservability_index: float
    rank: int
    mode_table: np.ndarray  # dominant state index per singular value
    extras: dict = field(default_factory=dict)


def map_jacobian(htilde, stm):
    """Map measurement row(s) at t_k to the initial epoch: ``H_k = Ht_k Phi(t_k, t0)``."""
    m = getattr(stm, "matrix", stm)
    return np.asarray(htilde) @ np.asarray(m)


def _rows(rows):
    r = np.asarray(rows, dtype=float)
    return r.reshape(-1, r.shape[-1])


def gramian(rows) -> np.ndarray:
    """Sum of outer products of the mapped rows."""
    r = _rows(rows)
    if r.shape[0] < 1:
        raise ValueError("need at least one row")
    return r.T @ r


def information_matrix(rows, sigma) -> np.ndarray:
    """Inverse-variance weighted Gramian.

    ``sigma`` is a scalar or one standard deviation per row; with unit sigma
    the result equals :func:`gramian`.
    """
    r = _rows(rows)
    s = np.broadcast_to(np.asarray(sigma, dtype=float), (r.shape[0],))
    if np.any(~(s > 0)):
        raise ValueError("measurement covariance must be positive definite")
    w = r / s[:, None]
    return w.T @ w


def svd_metrics(matrix, rank_tol: float = RANK_TOL) -> ObservabilityReport:
    """Singular values, conditioning and dominant state per mode."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    _, s, vt = np.linalg.svd(m)
    s_min = s[-1]
    cond = s[0] / s_min if s_min > 0 else np.inf
    unobs = 1.0 / s_min if s_min > 0 else np.inf
    rank = int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0
    modes = np.argmax(np.abs(vt), axis=1)
    return ObservabilityReport(s, float(cond), float(unobs), rank, modes)


def effectiveness(phi_rr, phi_rv, los_row, sigma: float):
    """Per-epoch contribution of one range measurement to one spacecraft.

    ``los_row`` is d(range)/d(r_i), i.e. the unit line of sight.  Returns a
    dict with per-axis position and velocity effectiveness (row/column
    contraction form) and the square root of the largest eigenvalue of the
    3x3 position and velocity blocks of ``H_k^T H_k / sigma^2``.
    """
    u = np.asarray(los_row, dtype=float)
    hr = u @ np.asarray(phi_rr)
    hv = u @ np.asarray(phi_rv)
    lam_r = np.outer(hr, hr) / sigma**2
    lam_v = np.outer(hv, hv) / sigma**2
    return {
        "pos": np.abs(hr) / sigma,
        "vel": np.abs(hv) / sigma,
        "pos_maxeig": float(np.sqrt(max(np.linalg.eigvalsh(lam_r)[-1], 0.0))),
        "vel_maxeig": float(np.sqrt(max(np.linalg.eigvalsh(lam_v)[-1], 0.0))),
    }


def xi(range_rows, rate_rows, zeta: float, guard: float = XI_GUARD):
    """Range versus range-rate sensitivity ratio per state and epoch.

    ``zeta`` must be in the time unit of the rows (TU for non-dimensional
    rows).  Entries whose range-rate sensitivity falls below ``guard`` are
    NaN in the series, skipped in the mean and counted.

    Returns ``(series, mean_per_state, excluded_count_per_state)``.
    """
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    hr = np.asarray(range_rows, dtype=float)
    hd = np.asarray(rate_rows, dtype=float)
    if hr.shape != hd.shape:
        raise ValueError("range and range-rate rows must align")
    bad = np.abs(hd) < guard
    with np.errstate(divide="ignore", invalid="ignore"):
        series = np.where(bad, np.nan, np.abs(hr / np.where(bad, 1.0, hd)) / zeta)
    counts = np.sum(~bad, axis=0)
    sums = np.sum(np.where(bad, 0.0, series), axis=0)
    means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return series, means, bad.sum(axis=0)
