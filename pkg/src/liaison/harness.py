"""Scenario execution: truth, observations, filtering, Monte Carlo statistics.

Monte Carlo runs share one truth trajectory and differ in the initial
estimate draw and the measurement noise.  Runs are advanced together as a
batch (leading array axis) so one integrator call serves the whole ensemble.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimation as est
from .config import ScenarioConfig, TopologyConfig
from .dynamics import IntegrationError, block_diag_stm, sample_trajectory
from .observability import effectiveness, gramian, information_matrix, map_jacobian, svd_metrics, xi
from .observations import KIND_CODE, KINDS, LinkSpec, schedule, si_scale, simulate, stream

log = logging.getLogger(__name__)

BATCH = 50
TRUTH_RTOL = 1e-13
TRUTH_ATOL = 1e-15


def expand_topology(topology: TopologyConfig, names) -> list:
    """Concrete ``(from, to)`` index pairs for a topology."""
    names = list(names)
    n = len(names)

    def idx(name):
        if isinstance(name, int):
            if not 0 <= name < n:
                raise IndexError(f"spacecraft index {name} out of range")
            return name
        if name not in names:
            raise IndexError(f"unknown spacecraft {name!r}")
        return names.index(name)

    if topology.kind == "mesh":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    if topology.kind == "centralized":
        h = idx(topology.hub)
        return [(h, i) for i in range(n) if i != h]
    return [(idx(a), idx(b)) for a, b in topology.pairs]


def build_links(cfg: ScenarioConfig) -> list:
    m = cfg.measurement
    return [
        LinkSpec(i, j, m.kinds, m.sigmas_si(), m.biases_si(), m.interval_tu)
        for i, j in expand_topology(cfg.topology, cfg.names)
    ]


def initial_truth(cfg: ScenarioConfig) -> np.ndarray:
    return np.stack([s.initial_state(cfg.system) for s in cfg.spacecraft])


def truth_along(cfg: ScenarioConfig, epochs, with_stm: bool = False):
    """Truth states ``(K, nsc, 6)`` (and per-spacecraft STMs) at ``epochs``.

    The truth is integrated tighter than the filter so that its own error
    (sub-millimetre per day) stays well below any estimation error.
    """
    return sample_trajectory(initial_truth(cfg), 0.0, epochs, cfg.system, with_stm=with_stm,
                             rtol=TRUTH_RTOL, atol=TRUTH_ATOL)


@dataclass
class Plan:
    """Everything a filter pass needs that does not depend on the run."""

    cfg: ScenarioConfig
    links: list
    epochs: np.ndarray  # unique filter epochs
    truth: np.ndarray  # (K, nsc, 6)
    sched_epochs: np.ndarray
    sched_links: np.ndarray

    @property
    def nsc(self) -> int:
        return self.truth.shape[1]


def make_plan(cfg: ScenarioConfig) -> Plan:
    links = build_links(cfg)
    e, o = schedule(cfg.span_tu, links)
    if len(e) == 0:
        raise ValueError("measurement interval exceeds the scenario span")
    epochs = np.unique(e)
    truth = truth_along(cfg, epochs)
    return Plan(cfg, links, epochs, truth, e, o)


@dataclass
class History:
    """Per-run, per-epoch filter diagnostics (posterior, after all updates)."""

    runs: np.ndarray
    epochs: np.ndarray
    pos_err: np.ndarray  # (R, K, nsc) m
    vel_err: np.ndarray  # (R, K, nsc) m/s
    pos_sigma: np.ndarray  # (R, K, nsc) sqrt(trace P_rr), m
    vel_sigma: np.ndarray
    nees: np.ndarray  # (R, K)
    estimate: np.ndarray | None = None  # (R, K, n) when requested


def _measurement_groups(batch, plan: Plan):
    """Row indices per epoch, azimuth/elevation of one link joined."""
    starts = np.searchsorted(batch.epochs, plan.epochs, side="left")
    ends = np.searchsorted(batch.epochs, plan.epochs, side="right")
    groups = []
    for a, b in zip(starts, ends):
        items = []
        m = a
        while m < b:
            if (batch.kind[m] == KIND_CODE["azimuth"] and m + 1 < b
                    and batch.kind[m + 1] == KIND_CODE["elevation"] and batch.link[m + 1] == batch.link[m]):
                items.append((m, m + 1))
                m += 2
            else:
                items.append((m,))
                m += 1
        groups.append(items)
    return groups


def _initial_estimates(cfg: ScenarioConfig, runs, truth0, P0, truth_init: bool):
    x0 = np.tile(truth0.ravel(), (len(runs), 1))
    if truth_init:
        return x0
    L = np.linalg.cholesky(P0)
    for r_i, run in enumerate(runs):
        x0[r_i] += L @ stream(cfg.montecarlo.master_seed, run, 0).standard_normal(P0.shape[0])
    return x0


def _update_rows(x, P, rows, batch, links, values, consider=None):
    """Sequentially process one measurement group for all runs."""
    kinds = [KINDS[batch.kind[m]] for m in rows]
    link = links[batch.link[rows[0]]]
    hs, Hs = zip(*(est.measurement(k, x, link.from_id, link.to_id) for k in kinds))
    res = np.stack([est.innovation(k, values[:, m], h) for k, m, h in zip(kinds, rows, hs)], axis=-1)
    H = np.stack(Hs, axis=-2)
    R = np.diag(batch.sigma[list(rows)] ** 2)
    fs = est.FilterState(x, P)
    if consider is None:
        out = est.ekf_update(fs, res, H, R)
        return out.x, out.P, None
    c, Pcc, Pxc, link_index = consider
    Hc = np.zeros(H.shape[:-1] + (len(c),))
    for r, k in enumerate(kinds):
        if k == "range":
            Hc[..., r, link_index[batch.link[rows[0]]]] = 1.0
    cs = est.ConsiderState(fs, c, Pcc, Pxc)
    out = est.skf_update(cs, res, H, Hc, R)
    return out.x, out.P, out.Pxc


def _record(h, k, x, P, truth_k, nsc, constants):
    err = x - truth_k.ravel()
    e = err.reshape(err.shape[:-1] + (nsc, 6))
    h["pos_err"][:, k] = np.linalg.norm(e[..., :3], axis=-1) * constants.l_star_m
    h["vel_err"][:, k] = np.linalg.norm(e[..., 3:], axis=-1) * constants.v_star_m
    d = np.diagonal(P, axis1=-2, axis2=-1).reshape(P.shape[:-2] + (nsc, 6))
    h["pos_sigma"][:, k] = np.sqrt(np.sum(d[..., :3], axis=-1)) * constants.l_star_m
    h["vel_sigma"][:, k] = np.sqrt(np.sum(d[..., 3:], axis=-1)) * constants.v_star_m
    h["nees"][:, k] = est.nees(err, P)
    if "estimate" in h:
        h["estimate"][:, k] = x


def run_filter(plan: Plan, runs, *, noiseless: bool = False, truth_init: bool = False,
               keep_estimate: bool = False) -> History:
    """EKF pass over the plan's schedule for a batch of Monte Carlo runs."""
    cfg = plan.cfg
    runs = np.atleast_1d(np.asarray(runs, dtype=int))
    nsc, K = plan.nsc, len(plan.epochs)
    n = 6 * nsc
    batch = simulate(plan.links, plan.truth, plan.sched_epochs, plan.sched_links, runs,
                     cfg.montecarlo.master_seed, cfg.system, noiseless=noiseless)
    groups = _measurement_groups(batch, plan)

    P0 = cfg.filter.p0(nsc, cfg.system)
    x = _initial_estimates(cfg, runs, plan.truth[0], P0, truth_init)
    P = np.broadcast_to(P0, (len(runs), n, n)).copy()
    h = {key: np.empty((len(runs), K, nsc)) for key in ("pos_err", "vel_err", "pos_sigma", "vel_sigma")}
    h["nees"] = np.empty((len(runs), K))
    if keep_estimate:
        h["estimate"] = np.empty((len(runs), K, n))

    t_prev = plan.epochs[0]
    for k, t in enumerate(plan.epochs):
        if t > t_prev:
            x, phi = est.propagate_estimate(x, t_prev, t, cfg.system, cfg.filter.rtol, cfg.filter.atol)
            Q = est.process_noise(cfg.filter.q, t - t_prev, nsc) if cfg.filter.q > 0 else None
            P = est.covariance_predict(P, phi, Q)
        for rows in groups[k]:
            x, P, _ = _update_rows(x, P, rows, batch, plan.links, batch.values)
        _record(h, k, x, P, plan.truth[k], nsc, cfg.system)
        t_prev = t
    return History(runs, plan.epochs, estimate=h.pop("estimate", None), **h)


def run_single(cfg: ScenarioConfig, run_index: int = 0, *, noiseless: bool = False,
               truth_init: bool = False, plan: Plan | None = None) -> History:
    """One filter run; deterministic in ``(master_seed, run_index)``."""
    plan = plan or make_plan(cfg)
    try:
        return run_filter(plan, [run_index], noiseless=noiseless, truth_init=truth_init, keep_estimate=True)
    except (IntegrationError, est.NumericalFailureError) as exc:
        raise type(exc)(f"run {run_index}: {exc}") from exc


def rmse(errors, axis=0):
    """Root mean square across Monte Carlo runs (axis 0 by default)."""
    e = np.asarray(errors, dtype=float)
    return np.sqrt(np.mean(e**2, axis=axis))


def _window(days, cutoff):
    mask = np.asarray(days) >= cutoff
    if not mask.any():
        log.warning("span ends before the %.3g-day cutoff; statistics use every epoch", cutoff)
        return np.ones_like(mask)
    return mask


@dataclass
class CampaignResult:
    scenario_id: str
    epochs: np.ndarray
    rmse_pos: np.ndarray  # (K, nsc) m
    rmse_vel: np.ndarray  # (K, nsc) m/s
    sigma_pos: np.ndarray  # (K, nsc) m, RMS over runs of sqrt(trace P_rr)
    nees: np.ndarray  # (R, K)
    runs: np.ndarray
    cutoff_days: float
    t_star: float
    failures: dict = field(default_factory=dict)
    observability: dict = field(default_factory=dict)

    @property
    def epoch_days(self):
        return self.epochs * self.t_star / 86400.0

    @property
    def window(self):
        """Post-cutoff epochs; all epochs when the span ends before the cutoff."""
        return _window(self.epoch_days, self.cutoff_days)

    @property
    def rms_pos_m(self) -> float:
        """Mean over post-cutoff epochs and spacecraft of the per-epoch RMSE."""
        return float(np.mean(self.rmse_pos[self.window]))

    @property
    def rms_vel_mms(self) -> float:
        return float(np.mean(self.rmse_vel[self.window]) * 1e3)

    def anees(self, window: bool = False) -> float:
        """NEES averaged over runs and epochs (all epochs unless ``window``)."""
        sel = self.window if window else slice(None)
        return float(np.mean(self.nees[:, sel]))


def run_monte_carlo(cfg: ScenarioConfig, runs=None, plan: Plan | None = None,
                    with_observability: bool = False) -> CampaignResult:
    """Monte Carlo campaign; failed runs are recorded and left out of the statistics."""
    plan = plan or make_plan(cfg)
    n_runs = cfg.montecarlo.runs if runs is None else int(runs)
    all_runs = np.arange(n_runs)
    histories, failures = [], {}
    for start in range(0, n_runs, BATCH):
        chunk = all_runs[start : start + BATCH]
        try:
            histories.append(run_filter(plan, chunk))
        except (IntegrationError, est.NumericalFailureError):
            for r in chunk:
                try:
                    histories.append(run_filter(plan, [r]))
                except (IntegrationError, est.NumericalFailureError) as exc:
                    failures[int(r)] = str(exc)
                    log.warning("run %d failed: %s", r, exc)
    if not histories:
        raise RuntimeError(f"all {n_runs} runs failed: {failures}")
    pos = np.concatenate([h.pos_err for h in histories])
    vel = np.concatenate([h.vel_err for h in histories])
    sig = np.concatenate([h.pos_sigma for h in histories])
    result = CampaignResult(
        cfg.scenario_id, plan.epochs, rmse(pos), rmse(vel), rmse(sig),
        np.concatenate([h.nees for h in histories]), np.concatenate([h.runs for h in histories]),
        cfg.montecarlo.cutoff_days, cfg.system.t_star, failures,
    )
    if with_observability:
        rep = observability_report(cfg)
        result.observability = {"cond_number": rep["gramian"].condition_number,
                                "unobs_index": rep["gramian"].unobservability_index}
    return result


@dataclass
class ConsiderResult:
    epochs: np.ndarray
    neglect_sigma: np.ndarray  # (K, nsc) m, sqrt(trace P_rr)
    consider_sigma: np.ndarray
    t_star: float
    cutoff_days: float

    @property
    def window(self):
        return _window(self.epochs * self.t_star / 86400.0, self.cutoff_days)

    def mean_sigma(self, which: str):
        s = self.neglect_sigma if which == "neglect" else self.consider_sigma
        return s.mean(axis=1)

    def relative_increase(self):
        """Per-epoch (consider - neglect) / neglect of the spacecraft-averaged 1-sigma."""
        a, b = self.mean_sigma("neglect"), self.mean_sigma("consider")
        return (b - a) / a


def run_consider(cfg: ScenarioConfig, run_index: int = 0, bias_sigma_m: float | None = None,
                 plan: Plan | None = None) -> ConsiderResult:
    """Neglect-bias EKF and Schmidt-Kalman consider filter on the same data.

    Every range link carries one constant bias parameter with a-priori value
    zero and standard deviation ``bias_sigma_m`` (default: the filter config's
    ``consider_bias_sigma_m``).  The truth measurements carry the configured
    ``bias_range_m``.
    """
    plan = plan or make_plan(cfg)
    sig_c = cfg.filter.consider_bias_sigma_m if bias_sigma_m is None else bias_sigma_m
    range_links = [i for i, link in enumerate(plan.links) if "range" in link.kinds]
    if not range_links:
        raise ValueError("consider analysis needs at least one range link")
    link_index = {l_i: p for p, l_i in enumerate(range_links)}
    n_c = len(range_links)
    nsc, K = plan.nsc, len(plan.epochs)
    n = 6 * nsc
    cs = cfg.system

    batch = simulate(plan.links, plan.truth, plan.sched_epochs, plan.sched_links, [run_index],
                     cfg.montecarlo.master_seed, cs)
    groups = _measurement_groups(batch, plan)
    P0 = cfg.filter.p0(nsc, cs)
    x0 = _initial_estimates(cfg, [run_index], plan.truth[0], P0, False)[0]
    x = np.stack([x0, x0])  # row 0 neglects the bias, row 1 considers it
    P = np.stack([P0, P0])
    c = np.zeros(n_c)
    Pcc = np.eye(n_c) * (sig_c / si_scale("range", cs)) ** 2
    Pxc = np.zeros((n, n_c))
    out = np.empty((2, K, nsc))

    t_prev = plan.epochs[0]
    for k, t in enumerate(plan.epochs):
        if t > t_prev:
            x, phi = est.propagate_estimate(x, t_prev, t, cs, cfg.filter.rtol, cfg.filter.atol)
            Q = est.process_noise(cfg.filter.q, t - t_prev, nsc) if cfg.filter.q > 0 else None
            P = est.covariance_predict(P, phi, Q)
            Pxc = phi[1] @ Pxc
        for rows in groups[k]:
            v = batch.values
            xa, Pa, _ = _update_rows(x[:1], P[:1], rows, batch, plan.links, v)
            xb, Pb, Pxc = _update_rows(x[1:2], P[1:2], rows, batch, plan.links, v,
                                       consider=(c, Pcc, Pxc[None], link_index))
            Pxc = Pxc[0]
            x = np.concatenate([xa, xb])
            P = np.concatenate([Pa, Pb])
        d = np.diagonal(P, axis1=-2, axis2=-1).reshape(2, nsc, 6)
        out[:, k] = np.sqrt(np.sum(d[..., :3], axis=-1)) * cs.l_star_m
        t_prev = t
    return ConsiderResult(plan.epochs, out[0], out[1], cs.t_star, cfg.montecarlo.cutoff_days)


# observability -------------------------------------------------------------

def mapped_rows(cfg: ScenarioConfig, kinds=None, span_tu: float | None = None,
                interval_tu: float | None = None):
    """Measurement rows mapped to t0 along the truth, per kind.

    Returns ``(epochs, rows, sigmas, extra)`` where ``rows[kind]`` has shape
    ``(K, L, n)`` for K epochs and L links, and ``extra`` holds the truth
    states and block STMs for further analysis.
    """
    kinds = tuple(kinds or cfg.measurement.kinds)
    span = cfg.span_tu if span_tu is None else span_tu
    step = cfg.measurement.interval_tu if interval_tu is None else interval_tu
    pairs = expand_topology(cfg.topology, cfg.names)
    count = int(np.floor(span / step * (1.0 + 1e-12))) + 1
    epochs = step * np.arange(count)
    states, phis = truth_along(cfg, epochs, with_stm=True)
    big = block_diag_stm(phis)
    x = states.reshape(len(epochs), -1)
    rows, sigmas = {}, {}
    sig = cfg.measurement.sigmas_si()
    for kind in kinds:
        per_link = []
        for i, j in pairs:
            if kind in ("azimuth", "elevation"):
                ht = est.htilde_los(x, i, j)[:, 0 if kind == "azimuth" else 1]
            elif kind == "range":
                ht = est.htilde_range(x, i, j)
            else:
                ht = est.htilde_range_rate(x, i, j)
            per_link.append(map_jacobian(ht[:, None, :], big)[:, 0, :])
        rows[kind] = np.stack(per_link, axis=1)
        sigmas[kind] = sig[kind] / si_scale(kind, cfg.system)
    return epochs, rows, sigmas, {"states": states, "phis": phis, "pairs": pairs}


def observability_report(cfg: ScenarioConfig, kinds=None, span_tu=None, interval_tu=None) -> dict:
    """SVD metrics of the Gramian and of the information matrix."""
    epochs, rows, sigmas, extra = mapped_rows(cfg, kinds, span_tu, interval_tu)
    all_rows = np.concatenate([r.reshape(-1, r.shape[-1]) for r in rows.values()])
    all_sig = np.concatenate([np.full(r.shape[0] * r.shape[1], sigmas[k]) for k, r in rows.items()])
    N = gramian(all_rows)
    Lam = information_matrix(all_rows, all_sig)
    report = {"epochs": epochs, "gramian": svd_metrics(N), "information": svd_metrics(Lam), "N": N, "Lambda": Lam}
    if "range" in rows:
        report["effectiveness"] = _effectiveness_series(extra, sigmas["range"])
    return report


def _effectiveness_series(extra, sigma):
    """Per-epoch, per-link, per-spacecraft position/velocity effectiveness."""
    states, phis, pairs = extra["states"], extra["phis"], extra["pairs"]
    out = []
    for k in range(states.shape[0]):
        for l_i, (i, j) in enumerate(pairs):
            d = states[k, i, :3] - states[k, j, :3]
            u = d / np.linalg.norm(d)
            for sc, sign in ((i, 1.0), (j, -1.0)):
                e = effectiveness(phis[k, sc, :3, :3], phis[k, sc, :3, 3:], sign * u, sigma)
                out.append((k, l_i, sc, *e["pos"], *e["vel"], e["pos_maxeig"], e["vel_maxeig"]))
    return np.array(out)


def xi_report(cfg: ScenarioConfig, zeta_s: float, span_tu=None, interval_tu=None) -> dict:
    """Range/range-rate sensitivity ratio for every state along the truth."""
    epochs, rows, _, _ = mapped_rows(cfg, ("range", "range_rate"), span_tu, interval_tu)
    hr = rows["range"].reshape(-1, rows["range"].shape[-1])
    hd = rows["range_rate"].reshape(-1, rows["range_rate"].shape[-1])
    series, means, excluded = xi(hr, hd, zeta_s / cfg.system.t_star)
    n_links = rows["range"].shape[1]
    with np.errstate(all="ignore"):
        medians = np.nanmedian(series, axis=0) if np.any(~np.isnan(series)) else np.full(series.shape[1], np.nan)
    return {"epochs": np.repeat(epochs, n_links), "series": series, "means": means, "medians": medians,
            "excluded": excluded, "overall": float(np.nanmean(means))}


# reporting -----------------------------------------------------------------

def _fmt(v):
    return f"{v:.10g}"


def write_rmse_csv(path, res: CampaignResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch_tu", "epoch_days", "rmse_pos_m", "rmse_vel_mms", "sigma3_pos_m"])
        for k in range(len(res.epochs)):
            w.writerow([_fmt(res.epochs[k]), _fmt(res.epoch_days[k]), _fmt(res.rmse_pos[k].mean()),
                        _fmt(res.rmse_vel[k].mean() * 1e3), _fmt(3.0 * res.sigma_pos[k].mean())])


def write_summary_csv(path, rows) -> None:
    """``rows`` are dicts with the summary columns."""
    cols = ["scenario_id", "rms_pos_m", "rms_vel_mms", "cond_number", "unobs_index"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([r["scenario_id"]] + [_fmt(r.get(c, float("nan"))) for c in cols[1:]])


def summary_row(res: CampaignResult) -> dict:
    return {"scenario_id": res.scenario_id, "rms_pos_m": res.rms_pos_m, "rms_vel_mms": res.rms_vel_mms,
            "cond_number": res.observability.get("cond_number", float("nan")),
            "unobs_index": res.observability.get("unobs_index", float("nan"))}


def write_xi_csv(path, rep: dict, nsc: int) -> None:
    labels = [f"{a}{i + 1}" for i in range(nsc) for a in ("x", "y", "z", "vx", "vy", "vz")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch_tu"] + labels)
        for e, row in zip(rep["epochs"], rep["series"]):
            w.writerow([_fmt(e)] + ["" if np.isnan(v) else _fmt(v) for v in row])
        w.writerow(["mean"] + [_fmt(v) for v in rep["means"]])
        w.writerow(["median"] + [_fmt(v) for v in rep["medians"]])
        w.writerow(["excluded"] + [str(int(v)) for v in rep["excluded"]])


def write_consider_csv(path, res: ConsiderResult) -> None:
    nsc = res.neglect_sigma.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch_tu", "epoch_days"]
                   + [f"neglect_sigma_pos_m_sc{i + 1}" for i in range(nsc)]
                   + [f"consider_sigma_pos_m_sc{i + 1}" for i in range(nsc)] + ["relative_increase"])
        inc = res.relative_increase()
        for k, e in enumerate(res.epochs):
            w.writerow([_fmt(e), _fmt(e * res.t_star / 86400.0)]
                       + [_fmt(v) for v in res.neglect_sigma[k]] + [_fmt(v) for v in res.consider_sigma[k]]
                       + [_fmt(inc[k])])


def write_history_csv(path, hist: History, row: int = 0) -> None:
    nsc = hist.pos_err.shape[-1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["epoch_tu"]
        for i in range(nsc):
            head += [f"pos_err_m_sc{i + 1}", f"vel_err_mms_sc{i + 1}", f"sigma3_pos_m_sc{i + 1}",
                     f"sigma3_vel_mms_sc{i + 1}"]
        w.writerow(head + ["nees"])
        for k, e in enumerate(hist.epochs):
            vals = [_fmt(e)]
            for i in range(nsc):
                vals += [_fmt(hist.pos_err[row, k, i]), _fmt(hist.vel_err[row, k, i] * 1e3),
                         _fmt(3 * hist.pos_sigma[row, k, i]), _fmt(3 * hist.vel_sigma[row, k, i] * 1e3)]
            w.writerow(vals + [_fmt(hist.nees[row, k])])


def write_observability_csvs(out_dir, rep: dict) -> None:
    out = Path(out_dir)
    with open(out / "singular_values.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "gramian", "information", "gramian_dominant_state", "information_dominant_state"])
        g, i = rep["gramian"], rep["information"]
        for k in range(len(g.singular_values)):
            w.writerow([k, _fmt(g.singular_values[k]), _fmt(i.singular_values[k]),
                        int(g.mode_table[k]), int(i.mode_table[k])])
    with open(out / "observability_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["matrix", "cond_number", "unobs_index", "rank"])
        for name in ("gramian", "information"):
            r = rep[name]
            w.writerow([name, _fmt(r.condition_number), _fmt(r.unobservability_index), r.rank])
    if "effectiveness" in rep:
        with open(out / "effectiveness.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch_tu", "link", "spacecraft", "pos_x", "pos_y", "pos_z", "vel_x", "vel_y", "vel_z",
                        "pos_maxeig", "vel_maxeig"])
            for row in rep["effectiveness"]:
                k = int(row[0])
                w.writerow([_fmt(rep["epochs"][k]), int(row[1]), int(row[2])] + [_fmt(v) for v in row[3:]])
