"""Command-line entry point: ``liaison <subcommand> CONFIG [options]``.

CONFIG is a scenario TOML file or the name of a shipped preset.  Results go to
``--out`` if given, else ``$LIAISON_OUTPUT_ROOT/<scenario_id>/<subcommand>``,
else ``results/<scenario_id>/<subcommand>``.  Every subcommand computes first
and writes afterwards, so a failure leaves no partial output directory.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np
import tomli

from . import harness
from .config import ConfigError, resolve, with_overrides
from .dynamics import IntegrationError, SingularityError, jacobi_constant
from .estimation import GimbalSingularityError, NumericalFailureError
from .linkbudget import FeasibilityError, PnRangingConfig, db_to_linear, ranging_sweep
from .observations import ZeroSeparationError, simulate, write_csv
from .periodic import ConvergenceError, FamilyRangeError

ENV_OUTPUT_ROOT = "LIAISON_OUTPUT_ROOT"
DEFAULT_ZETA_S = 3333.0

TYPED_ERRORS = (ConfigError, IntegrationError, SingularityError, NumericalFailureError, GimbalSingularityError,
                ZeroSeparationError, FeasibilityError, ConvergenceError, FamilyRangeError)


def _out_dir(args, scenario_id: str) -> Path:
    if args.out:
        return Path(args.out)
    root = Path(os.environ.get(ENV_OUTPUT_ROOT, "results"))
    return root / scenario_id / args.command


def _load(args):
    cfg = resolve(args.config)
    return with_overrides(cfg, runs=getattr(args, "runs", None), seed=getattr(args, "seed", None),
                          span_tu=getattr(args, "span", None))


def cmd_propagate(args):
    cfg = _load(args)
    step = args.step or cfg.measurement.interval_tu
    epochs = step * np.arange(int(np.floor(cfg.span_tu / step * (1 + 1e-12))) + 1)
    states = harness.truth_along(cfg, epochs)
    jac = jacobi_constant(states, cfg.system)
    drift = float(np.max(np.abs(jac - jac[0])))

    def write(out):
        with open(out / "trajectory.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch_tu", "spacecraft", "x", "y", "z", "vx", "vy", "vz", "jacobi"])
            for k, e in enumerate(epochs):
                for i, name in enumerate(cfg.names):
                    w.writerow([f"{e:.12g}", name] + [f"{v:.17g}" for v in states[k, i]] + [f"{jac[k, i]:.17g}"])

    return cfg, write, f"propagated {len(cfg.names)} spacecraft over {cfg.span_tu} TU; max Jacobi drift {drift:.2e}"


def cmd_simulate(args):
    cfg = _load(args)
    plan = harness.make_plan(cfg)
    batch = simulate(plan.links, plan.truth, plan.sched_epochs, plan.sched_links, [args.run],
                     cfg.montecarlo.master_seed, cfg.system)

    def write(out):
        write_csv(out / "observations.csv", batch, plan.links, 0, cfg.system)

    return cfg, write, f"simulated {len(batch.epochs)} observations on {len(plan.links)} link(s), run {args.run}"


def cmd_estimate(args):
    cfg = _load(args)
    plan = harness.make_plan(cfg)
    hist = harness.run_single(cfg, args.run, noiseless=args.noiseless, truth_init=args.truth_init, plan=plan)
    batch = simulate(plan.links, plan.truth, plan.sched_epochs, plan.sched_links, [args.run],
                     cfg.montecarlo.master_seed, cfg.system, noiseless=args.noiseless)
    final = hist.pos_err[0, -1]

    def write(out):
        harness.write_history_csv(out / "history.csv", hist)
        write_csv(out / "observations.csv", batch, plan.links, 0, cfg.system)

    msg = "final position error " + ", ".join(f"{n} {e:.3g} m" for n, e in zip(cfg.names, final))
    return cfg, write, f"estimated run {args.run}; {msg}"


def cmd_observability(args):
    cfg = _load(args)
    rep = harness.observability_report(cfg, kinds=args.kinds)
    xi = harness.xi_report(cfg, args.zeta) if not args.no_xi else None

    def write(out):
        harness.write_observability_csvs(out, rep)
        if xi is not None:
            harness.write_xi_csv(out / "xi.csv", xi, len(cfg.names))

    g = rep["gramian"]
    return cfg, write, (f"rank {g.rank}/{6 * len(cfg.names)}, condition number {g.condition_number:.3e}, "
                        f"unobservability index {g.unobservability_index:.3e}")


def cmd_montecarlo(args):
    cfg = _load(args)
    res = harness.run_monte_carlo(cfg, with_observability=True)
    row = harness.summary_row(res)

    def write(out):
        harness.write_rmse_csv(out / "rmse_timeseries.csv", res)
        harness.write_summary_csv(out / "summary.csv", [row])
        if res.failures:
            with open(out / "failures.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["run", "error"])
                w.writerows(sorted(res.failures.items()))

    return cfg, write, (f"{cfg.scenario_id}: {len(res.runs)} runs, rms position {row['rms_pos_m']:.2f} m, "
                        f"rms velocity {row['rms_vel_mms']:.3f} mm/s, failures {len(res.failures)}")


def cmd_compare_xi(args):
    cfg = _load(args)
    rep = harness.xi_report(cfg, args.zeta)

    def write(out):
        harness.write_xi_csv(out / "xi.csv", rep, len(cfg.names))

    return cfg, write, f"{cfg.scenario_id}: mean xi {rep['overall']:.3f} (zeta {args.zeta:g} s)"


def cmd_consider(args):
    cfg = with_overrides(_load(args), bias_range_m=args.bias, consider_bias_sigma_m=args.bias_sigma)
    res = harness.run_consider(cfg, args.run)
    inc = res.relative_increase()[res.window]

    def write(out):
        harness.write_consider_csv(out / "consider.csv", res)

    return cfg, write, (f"{cfg.scenario_id}: consider/neglect 1-sigma increase after cutoff "
                        f"min {inc.min():.1%}, max {inc.max():.1%}")


def _linkbudget_inputs(path):
    """PN config and sweep settings from an optional TOML; ``*_db`` keys are converted here."""
    data = {}
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = tomli.loads(p.read_text())
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"syntax error: {exc}") from None

    def linear(table, key):
        if key + "_db" in table:
            table[key] = float(db_to_linear(table.pop(key + "_db")))

    pn_t = dict(data.get("pn", {}))
    linear(pn_t, "Prc_N0")
    names = {f.name for f in fields(PnRangingConfig)}
    if set(pn_t) - names:
        raise ConfigError(f"pn: unknown key(s) {sorted(set(pn_t) - names)}")
    try:
        pn = PnRangingConfig(**pn_t)
    except ValueError as exc:
        raise ConfigError(f"pn: {exc}") from None
    sw = dict(data.get("sweep", {}))
    linear(sw, "Es_N0")
    rates = np.asarray(sw.pop("data_rates_bps", np.logspace(2, 6, 17)), dtype=float)
    return pn, rates, {"T_l": float(sw.pop("T_l", 1.0)), "Es_N0": float(sw.pop("Es_N0", 1.0)),
                       "v": float(sw.pop("v", 0.0))}


def cmd_linkbudget(args):
    pn, rates, sweep = _linkbudget_inputs(args.config)
    table = ranging_sweep(rates, pn, **sweep)

    def write(out):
        with open(out / "linkbudget.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["data_rate_bps", "sigma_pn_m", "sigma_tm_m", "sigma_td_m"])
            w.writerows([[f"{v:.10g}" for v in row] for row in table])
        with open(out / "linkbudget_config.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "value"])
            w.writerows([[f"pn.{k}", v] for k, v in asdict(pn).items()])
            w.writerows([[f"sweep.{k}", v] for k, v in sweep.items()])

    return "linkbudget", write, f"ranging sweep over {len(rates)} data rates; PN sigma {table[0, 1]:.4g} m"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="liaison", description="Crosslink-only cislunar orbit determination")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, runs=False, run=False, config_optional=False):
        p = sub.add_parser(name, help=help_)
        if config_optional:
            p.add_argument("config", nargs="?", help="link-budget TOML (defaults used when omitted)")
        else:
            p.add_argument("config", help="scenario TOML file or preset name")
            p.add_argument("--seed", type=int, help="override the master seed")
            p.add_argument("--span", type=float, help="override the scenario span (TU)")
        if runs:
            p.add_argument("--runs", type=int, help="override the Monte Carlo run count")
        if run:
            p.add_argument("--run", type=int, default=0, help="Monte Carlo run index (default 0)")
        p.add_argument("--out", help="output directory")
        p.set_defaults(func=fn)
        return p

    p = add("propagate", cmd_propagate, "propagate the truth trajectories")
    p.add_argument("--step", type=float, help="output step (TU); default the measurement interval")
    add("simulate", cmd_simulate, "synthesise crosslink observations", run=True)
    p = add("estimate", cmd_estimate, "run one EKF pass", run=True)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--truth-init", action="store_true")
    p = add("observability", cmd_observability, "Gramian / information-matrix analysis")
    p.add_argument("--kinds", nargs="+", help="measurement kinds (default: the config's)")
    p.add_argument("--zeta", type=float, default=DEFAULT_ZETA_S, help="range/range-rate equivalence ratio (s)")
    p.add_argument("--no-xi", action="store_true")
    add("montecarlo", cmd_montecarlo, "Monte Carlo campaign", runs=True)
    p = add("compare-xi", cmd_compare_xi, "range versus range-rate sensitivity ratio")
    p.add_argument("--zeta", type=float, default=DEFAULT_ZETA_S)
    p = add("consider", cmd_consider, "neglect-bias EKF versus consider filter", run=True)
    p.add_argument("--bias", type=float, default=20.0, help="true range bias (m)")
    p.add_argument("--bias-sigma", type=float, default=20.0, help="considered bias sigma (m)")
    add("linkbudget", cmd_linkbudget, "ranging error versus data rate", config_optional=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg, write, summary = args.func(args)
        sid = cfg if isinstance(cfg, str) else cfg.scenario_id
        out = _out_dir(args, sid)
        out.mkdir(parents=True, exist_ok=True)
        write(out)
    except TYPED_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"{summary} -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
