"""Crosslink measurement models and synthetic observation generation.

Measurement values are non-dimensional internally (range in DU, range-rate in
DU/TU, angles in rad); ``LinkSpec`` carries sigmas and biases in SI and the
conversion uses exactly ``l_star`` and ``l_star / t_star``.

Relative geometry follows the ``from -> to`` direction of a link:
``d = r_to - r_from``.  Range and range-rate are symmetric under a swap;
azimuth and elevation are the direction of ``to`` as seen from ``from``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EARTH_MOON, SystemConstants

KINDS = ("range", "range_rate", "azimuth", "elevation")
KIND_CODE = {k: i for i, k in enumerate(KINDS)}
SI_UNITS = {"range": "m", "range_rate": "m/s", "azimuth": "rad", "elevation": "rad"}


class ZeroSeparationError(ValueError):
    """The two spacecraft positions coincide."""


def _positions(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b[..., :3] - a[..., :3]
    rho = np.linalg.norm(d, axis=-1)
    if np.any(rho == 0.0):
        raise ZeroSeparationError("spacecraft positions coincide")
    return d, rho


def geometric_range(state_a, state_b):
    """Euclidean distance between the two position vectors."""
    return _positions(state_a, state_b)[1]


def range_rate(state_a, state_b):
    """Projection of the relative velocity onto the line of sight."""
    d, rho = _positions(state_a, state_b)
    dv = np.asarray(state_b, dtype=float)[..., 3:6] - np.asarray(state_a, dtype=float)[..., 3:6]
    return np.sum(d * dv, axis=-1) / rho


def los_angles(state_a, state_b):
    """Four-quadrant azimuth and elevation of ``b`` seen from ``a``."""
    d, rho = _positions(state_a, state_b)
    az = np.arctan2(d[..., 1], d[..., 0])
    el = np.arcsin(np.clip(d[..., 2] / rho, -1.0, 1.0))
    return az, el


def wrap_angle(a):
    """Wrap to [-pi, pi)."""
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


def model_value(kind: str, state_a, state_b):
    if kind == "range":
        return geometric_range(state_a, state_b)
    if kind == "range_rate":
        return range_rate(state_a, state_b)
    if kind == "azimuth":
        return los_angles(state_a, state_b)[0]
    if kind == "elevation":
        return los_angles(state_a, state_b)[1]
    raise ValueError(f"unknown measurement kind {kind!r}")


def si_scale(kind: str, constants: SystemConstants = EARTH_MOON) -> float:
    """Multiply a non-dimensional value of ``kind`` by this to get SI."""
    if kind == "range":
        return constants.l_star_m
    if kind == "range_rate":
        return constants.v_star_m
    return 1.0


@dataclass(frozen=True)
class LinkSpec:
    """One crosslink: spacecraft pair, measured kinds, SI noise and bias."""

    from_id: int
    to_id: int
    kinds: tuple = ("range",)
    sigma: dict = field(default_factory=dict)
    bias: dict = field(default_factory=dict)
    interval: float = 5e-4  # TU

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(k for k in KINDS if k in set(self.kinds)))
        if self.from_id == self.to_id:
            raise ValueError("a link needs two distinct spacecraft")
        if not self.kinds:
            raise ValueError("a link needs at least one measurement kind")
        unknown = set(self.sigma) | set(self.bias)
        unknown -= set(KINDS)
        if unknown:
            raise ValueError(f"unknown measurement kinds {sorted(unknown)}")
        if any(s < 0 for s in self.sigma.values()):
            raise ValueError("sigma must be non-negative")
        if not self.interval > 0:
            raise ValueError("interval must be positive")

    def sigma_nd(self, kind: str, constants: SystemConstants = EARTH_MOON) -> float:
        return self.sigma.get(kind, 0.0) / si_scale(kind, constants)

    def bias_nd(self, kind: str, constants: SystemConstants = EARTH_MOON) -> float:
        return self.bias.get(kind, 0.0) / si_scale(kind, constants)


@dataclass(frozen=True)
class Observation:
    epoch: float
    link: int
    from_id: int
    to_id: int
    kind: str
    value: float  # non-dimensional (rad for angles)
    sigma: float = 0.0
    bias: float = 0.0


def _noisy(kind, value, bias, sigma, rng):
    draw = rng.standard_normal() if rng is not None else 0.0
    out = value + bias + sigma * draw
    return float(wrap_angle(out)) if kind == "azimuth" else float(out)


def range_obs(state_a, state_b, bias: float = 0.0, sigma: float = 0.0, rng=None, *,
              epoch: float = 0.0, link: int = 0, ids=(0, 1)) -> Observation:
    """Pseudorange: geometric range plus constant bias plus Gaussian noise."""
    v = _noisy("range", float(geometric_range(state_a, state_b)), bias, sigma, rng)
    return Observation(epoch, link, ids[0], ids[1], "range", v, sigma, bias)


def range_rate_obs(state_a, state_b, bias: float = 0.0, sigma: float = 0.0, rng=None, *,
                   epoch: float = 0.0, link: int = 0, ids=(0, 1)) -> Observation:
    v = _noisy("range_rate", float(range_rate(state_a, state_b)), bias, sigma, rng)
    return Observation(epoch, link, ids[0], ids[1], "range_rate", v, sigma, bias)


def los_obs(state_a, state_b, biases=(0.0, 0.0), sigmas=(0.0, 0.0), rng=None, *,
            epoch: float = 0.0, link: int = 0, ids=(0, 1)):
    az, el = los_angles(state_a, state_b)
    return (
        Observation(epoch, link, ids[0], ids[1], "azimuth",
                    _noisy("azimuth", float(az), biases[0], sigmas[0], rng), sigmas[0], biases[0]),
        Observation(epoch, link, ids[0], ids[1], "elevation",
                    _noisy("elevation", float(el), biases[1], sigmas[1], rng), sigmas[1], biases[1]),
    )


def link_epochs(span: float, interval: float, t0: float = 0.0) -> np.ndarray:
    """Start-aligned grid ``t0 + k * interval`` up to and including ``t0 + span``."""
    if not span > 0:
        raise ValueError("span must be positive")
    if interval > span:
        return np.empty(0)
    count = int(np.floor(span / interval * (1.0 + 1e-12))) + 1
    return t0 + interval * np.arange(count)


def schedule(span: float, links, t0: float = 0.0):
    """Merged measurement schedule over all links.

    Returns ``(epochs, link_index)`` sorted by epoch, ties broken by link
    index.  Epochs that agree to 1e-12 TU across links are snapped together so
    shared epochs are processed as one filter step.
    """
    epochs, owners = [], []
    for i, link in enumerate(links):
        e = link_epochs(span, link.interval, t0)
        epochs.append(e)
        owners.append(np.full(len(e), i, dtype=int))
    if not epochs:
        return np.empty(0), np.empty(0, dtype=int)
    e = np.concatenate(epochs)
    o = np.concatenate(owners)
    e = np.round(e, 12)
    order = np.lexsort((o, e))
    return e[order], o[order]


def stream(master_seed: int, run: int, slot: int) -> np.random.Generator:
    """Independent generator for one (run, slot); slot 0 is the filter's initial draw."""
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(run), int(slot))))


@dataclass
class ObservationBatch:
    """Observations of many Monte Carlo runs sharing one schedule.

    Row ``m`` is one scalar measurement; ``values`` has shape ``(R, M)``.
    """

    epochs: np.ndarray
    link: np.ndarray
    kind: np.ndarray  # KIND_CODE values
    truth: np.ndarray
    sigma: np.ndarray
    bias: np.ndarray
    values: np.ndarray
    runs: np.ndarray

    def for_run(self, r: int) -> list:
        """Observations of the r-th stored run as ``Observation`` records."""
        return [
            Observation(float(self.epochs[m]), int(self.link[m]), -1, -1, KINDS[self.kind[m]],
                        float(self.values[r, m]), float(self.sigma[m]), float(self.bias[m]))
            for m in range(len(self.epochs))
        ]


def simulate(links, truth_at, epochs, owners, runs, master_seed: int,
             constants: SystemConstants = EARTH_MOON, noiseless: bool = False) -> ObservationBatch:
    """Synthesise observations for the given runs.

    ``truth_at`` has shape ``(K, nsc, 6)`` with one row per entry of the
    unique schedule epochs; ``epochs``/``owners`` come from :func:`schedule`.
    Noise for link ``i`` of run ``r`` comes from ``stream(master_seed, r, i + 1)``
    so adding runs or links never changes existing draws.
    """
    unique = np.unique(epochs)
    index = np.searchsorted(unique, epochs)
    rows_epoch, rows_link, rows_kind, rows_k = [], [], [], []
    for m, (e, i) in enumerate(zip(epochs, owners)):
        for kind in links[i].kinds:
            rows_epoch.append(e)
            rows_link.append(i)
            rows_kind.append(KIND_CODE[kind])
            rows_k.append(index[m])
    rows_epoch = np.array(rows_epoch)
    rows_link = np.array(rows_link, dtype=int)
    rows_kind = np.array(rows_kind, dtype=int)
    rows_k = np.array(rows_k, dtype=int)

    truth = np.empty(len(rows_epoch))
    sigma = np.empty(len(rows_epoch))
    bias = np.empty(len(rows_epoch))
    for i, link in enumerate(links):
        for kind in link.kinds:
            sel = (rows_link == i) & (rows_kind == KIND_CODE[kind])
            a = truth_at[rows_k[sel], link.from_id]
            b = truth_at[rows_k[sel], link.to_id]
            truth[sel] = model_value(kind, a, b)
            sigma[sel] = link.sigma_nd(kind, constants)
            bias[sel] = link.bias_nd(kind, constants)

    runs = np.atleast_1d(np.asarray(runs, dtype=int))
    values = np.empty((len(runs), len(rows_epoch)))
    for r_i, run in enumerate(runs):
        noise = np.zeros(len(rows_epoch))
        if not noiseless:
            for i in range(len(links)):
                sel = np.flatnonzero(rows_link == i)
                noise[sel] = stream(master_seed, run, i + 1).standard_normal(len(sel))
        v = truth + bias + sigma * noise
        ang = rows_kind == KIND_CODE["azimuth"]
        v[ang] = wrap_angle(v[ang])
        values[r_i] = v
    return ObservationBatch(rows_epoch, rows_link, rows_kind, truth, sigma, bias, values, runs)


def write_csv(path, batch: ObservationBatch, links, run_row: int = 0,
              constants: SystemConstants = EARTH_MOON) -> None:
    """Export one run's observations with SI values."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch_tu", "from", "to", "kind", "value_si", "sigma_si", "bias_si"])
        for m in range(len(batch.epochs)):
            kind = KINDS[batch.kind[m]]
            link = links[batch.link[m]]
            s = si_scale(kind, constants)
            w.writerow([
                f"{batch.epochs[m]:.12g}", link.from_id, link.to_id, kind,
                f"{batch.values[run_row, m] * s:.17g}", f"{batch.sigma[m] * s:.17g}", f"{batch.bias[m] * s:.17g}",
            ])
