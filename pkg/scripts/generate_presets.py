"""Regenerate the shipped scenario presets in src/liaison/presets/.

Every seed orbit is computed once (halo continuation, Lyapunov continuation,
two-body lunar orbit) and written at full precision so loading a preset never
re-runs the differential corrector.

    python3 scripts/generate_presets.py [--out DIR]
"""

import argparse
import logging
import time
from pathlib import Path

from liaison.config import ScenarioConfig, SpacecraftConfig, TopologyConfig, save
from liaison.dynamics import EARTH_MOON
from liaison.periodic import halo_seed, lunar_orbit_state, lyapunov_seed

SPAN_14D = 3.2236
L1_PERIODS = (2.786, 2.778, 2.759, 2.721)
L2_PERIODS = (3.306, 3.276, 3.240, 3.195)
NRHO_PERIOD = 1.8285
LYAPUNOV_X0 = 1.22
LLO = (1837.4, 90.0)

log = logging.getLogger("presets")


def _timed(label, fn, *args, **kw):
    t = time.time()
    out = fn(*args, **kw)
    log.info("%-22s %6.1f s", label, time.time() - t)
    return out


class Seeds:
    """Lazily computed and cached seed states."""

    def __init__(self):
        self._cache = {}

    def _get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    def halo(self, point, period, branch="southern"):
        def make():
            orb = _timed(f"{point} {branch} {period}", halo_seed, point, period, branch)
            return tuple(orb.state.as_array().tolist()), orb.period
        return self._get(("halo", point, period, branch), make)

    def spacecraft(self, name, kind, period=None, branch="southern"):
        if kind in ("L1Halo", "L2Halo"):
            point = kind[:2]
            state, p = self.halo(point, period, branch)
            return SpacecraftConfig(name, kind, state=state, point=point, period_tu=p, branch=branch,
                                    note=f"{point} {branch} halo, period {p:.4f} TU")
        if kind == "NRHO":
            state, p = self.halo("L2", NRHO_PERIOD)
            return SpacecraftConfig(name, kind, state=state, point="L2", period_tu=p,
                                    note=f"L2 southern near-rectilinear halo, period {p:.4f} TU")
        if kind == "Lyapunov":
            def make():
                orb = _timed("L2 Lyapunov", lyapunov_seed, "L2", LYAPUNOV_X0)
                return tuple(orb.state.as_array().tolist()), orb.period
            state, p = self._get(("lyap",), make)
            return SpacecraftConfig(name, kind, state=state, point="L2", period_tu=p,
                                    note=f"L2 planar Lyapunov, period {p:.4f} TU")
        if kind == "Lunar":
            state = tuple(lunar_orbit_state(*LLO).as_array().tolist())
            return SpacecraftConfig(name, kind, state=state,
                                    note=f"circular lunar orbit, radius {LLO[0]} km, inclination {LLO[1]} deg")
        raise ValueError(kind)


def scenarios(seeds: Seeds):
    sc = seeds.spacecraft

    def two(sid, a, b, desc, span=SPAN_14D):
        return ScenarioConfig(sid, span, (a, b), TopologyConfig("explicit", pairs=((a.name, b.name),)),
                              description=desc)

    l1, l2 = L1_PERIODS[0], L2_PERIODS[0]
    yield two("eml2_lunar", sc("EML2", "L2Halo", l2), sc("Lunar", "Lunar"), "L2 halo with a polar lunar orbiter")
    yield two("eml1_l2", sc("EML1", "L1Halo", l1), sc("EML2", "L2Halo", l2), "L1 halo with an L2 halo")
    yield two("eml1_lunar", sc("EML1", "L1Halo", l1), sc("Lunar", "Lunar"), "L1 halo with a polar lunar orbiter")

    # sensitivity-ratio pairs: four period pairings, span of one halo period
    for k, (p1, p2) in enumerate(zip(L1_PERIODS, L2_PERIODS), start=1):
        a, b = sc("EML1", "L1Halo", p1), sc("EML2", "L2Halo", p2)
        yield two(f"xi_eml1_l2_{k}", a, b, "sensitivity ratio, L1/L2 halo pair", span=b.period_tu)
        a = sc("EML1", "L1Halo", p1)
        yield two(f"xi_eml1_lunar_{k}", a, sc("Lunar", "Lunar"), "sensitivity ratio, L1 halo/lunar", span=a.period_tu)
        b = sc("EML2", "L2Halo", p2)
        yield two(f"xi_eml2_lunar_{k}", b, sc("Lunar", "Lunar"), "sensitivity ratio, L2 halo/lunar", span=b.period_tu)

    eml2, eml1, lunar = sc("EML2", "L2Halo", l2), sc("EML1", "L1Halo", l1), sc("Lunar", "Lunar")
    nc = sc("EML2nc", "L2Halo", l2, "northern")
    nrho, lyap = sc("NRHO", "NRHO"), sc("Lyapunov", "Lyapunov")
    triples = {
        "C1": ((eml2, eml1, lunar), "EML2"),
        "C2": ((eml1, eml2, lunar), "EML1"),
        "C3": ((lunar, eml2, eml1), "Lunar"),
        "C4": ((eml2, nc, lunar), "EML2"),
        "C5": ((eml2, nrho, lunar), "EML2"),
        "C6": ((eml2, lyap, lunar), "EML2"),
    }
    for sid, (craft, hub) in triples.items():
        yield ScenarioConfig(sid, SPAN_14D, craft, TopologyConfig("centralized", hub=hub),
                             description=f"centralized, hub {hub}")
    meshes = {"M1": (eml2, eml1, lunar), "M2": (eml2, nc, lunar), "M3": (eml2, nrho, lunar),
              "M4": (eml2, lyap, lunar)}
    for sid, craft in meshes.items():
        yield ScenarioConfig(sid, SPAN_14D, craft, TopologyConfig("mesh"), description="mesh, all pairs")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src/liaison/presets")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out.mkdir(parents=True, exist_ok=True)
    seeds = Seeds()
    n = 0
    for cfg in scenarios(seeds):
        assert cfg.system == EARTH_MOON
        save(cfg, args.out / f"{cfg.scenario_id}.toml")
        n += 1
    log.info("wrote %d presets to %s", n, args.out)


if __name__ == "__main__":
    main()
