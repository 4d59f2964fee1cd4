"""Scenario configuration: dataclasses plus TOML load/dump.

A scenario file has the tables ``[scenario]``, ``[system]``,
``[spacecraft.<name>]`` (one per spacecraft, in order), ``[links.topology]``,
``[links.measurement]``, ``[filter]``, ``[montecarlo]`` and ``[output]``.
Seeds are stored as full-precision decimals so reloading reproduces them
bit for bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .dynamics import SystemConstants
from .estimation import FilterConfig
from .observations import KINDS

ORBIT_KINDS = ("L1Halo", "L2Halo", "Lyapunov", "NRHO", "Lunar")
TOPOLOGIES = ("explicit", "centralized", "mesh")


class ConfigError(ValueError):
    """Invalid scenario file; the message names the offending key path."""


@dataclass(frozen=True)
class SpacecraftConfig:
    name: str
    kind: str
    state: tuple | None = None
    point: str | None = None
    period_tu: float | None = None
    branch: str = "southern"
    note: str = ""

    def __post_init__(self):
        if self.kind not in ORBIT_KINDS:
            raise ValueError(f"orbit kind must be one of {ORBIT_KINDS}, got {self.kind!r}")
        if self.state is None and (self.point is None or self.period_tu is None):
            raise ValueError("give either a seed state or a (point, period_tu) pair")
        if self.state is not None:
            s = tuple(float(v) for v in self.state)
            if len(s) != 6:
                raise ValueError("seed state needs six components")
            object.__setattr__(self, "state", s)

    def initial_state(self, constants: SystemConstants) -> np.ndarray:
        if self.state is not None:
            return np.array(self.state)
        from .periodic import halo_seed

        return halo_seed(self.point, self.period_tu, self.branch, constants).state.as_array()


@dataclass(frozen=True)
class TopologyConfig:
    kind: str = "explicit"
    hub: str = ""
    pairs: tuple = ()

    def __post_init__(self):
        if self.kind not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, got {self.kind!r}")
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        if self.kind == "centralized" and not self.hub:
            raise ValueError("centralized topology needs a hub")
        if self.kind == "explicit" and not self.pairs:
            raise ValueError("explicit topology needs at least one pair")


@dataclass(frozen=True)
class MeasurementConfig:
    kinds: tuple = ("range",)
    interval_tu: float = 5e-4
    sigma_range_m: float = 1.0
    sigma_range_rate_mps: float = 3e-4
    sigma_angle_deg: float = 0.5
    bias_range_m: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        bad = [k for k in self.kinds if k not in KINDS]
        if bad or not self.kinds:
            raise ValueError(f"measurement kinds must be a non-empty subset of {KINDS}, got {self.kinds}")
        if not self.interval_tu > 0:
            raise ValueError("interval_tu must be positive")
        if min(self.sigma_range_m, self.sigma_range_rate_mps, self.sigma_angle_deg) < 0:
            raise ValueError("sigmas must be non-negative")

    def sigmas_si(self) -> dict:
        ang = np.deg2rad(self.sigma_angle_deg)
        return {"range": self.sigma_range_m, "range_rate": self.sigma_range_rate_mps,
                "azimuth": ang, "elevation": ang}

    def biases_si(self) -> dict:
        return {"range": self.bias_range_m}


@dataclass(frozen=True)
class MonteCarloConfig:
    runs: int = 100
    master_seed: int = 0
    cutoff_days: float = 3.0

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.cutoff_days < 0:
            raise ValueError("cutoff_days must be non-negative")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    span_tu: float
    spacecraft: tuple
    topology: TopologyConfig
    measurement: MeasurementConfig = MeasurementConfig()
    filter: FilterConfig = FilterConfig()
    montecarlo: MonteCarloConfig = MonteCarloConfig()
    system: SystemConstants = SystemConstants()
    description: str = ""
    output_dir: str = ""

    def __post_init__(self):
        object.__setattr__(self, "spacecraft", tuple(self.spacecraft))
        if len(self.spacecraft) < 2:
            raise ValueError("a scenario needs at least two spacecraft")
        if not self.span_tu > 0:
            raise ValueError("span_tu must be positive")
        names = [s.name for s in self.spacecraft]
        if len(set(names)) != len(names):
            raise ValueError("spacecraft names must be unique")

    @property
    def names(self) -> list:
        return [s.name for s in self.spacecraft]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError(f"links: unknown spacecraft {name!r}") from None


def _build(cls, table: dict, path: str, **extra):
    known = {f.name for f in fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    try:
        return cls(**table, **extra)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def from_dict(data: dict) -> ScenarioConfig:
    """Build a ``ScenarioConfig`` from the parsed TOML structure."""
    data = dict(data)
    scen = dict(data.pop("scenario", {}))
    if "id" not in scen or "span_tu" not in scen:
        raise ConfigError("scenario: 'id' and 'span_tu' are required")

    sysd = dict(data.pop("system", {}))
    key_map = {"mu": "mu", "l_star_km": "l_star", "t_star_s": "t_star"}
    unknown = set(sysd) - set(key_map)
    if unknown:
        raise ConfigError(f"system: unknown key(s) {sorted(unknown)}")
    try:
        system = SystemConstants(**{key_map[k]: v for k, v in sysd.items()})
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from None

    sc_tables = data.pop("spacecraft", {})
    if not isinstance(sc_tables, dict) or len(sc_tables) < 2:
        raise ConfigError("spacecraft: at least two [spacecraft.<name>] tables are required")
    spacecraft = tuple(
        _build(SpacecraftConfig, dict(t), f"spacecraft.{name}", name=name) for name, t in sc_tables.items()
    )

    links = dict(data.pop("links", {}))
    topology = _build(TopologyConfig, dict(links.pop("topology", {})), "links.topology")
    measurement = _build(MeasurementConfig, dict(links.pop("measurement", {})), "links.measurement")
    if links:
        raise ConfigError(f"links: unknown table(s) {sorted(links)}")
    filt = _build(FilterConfig, dict(data.pop("filter", {})), "filter")
    mc = _build(MonteCarloConfig, dict(data.pop("montecarlo", {})), "montecarlo")
    out = dict(data.pop("output", {}))
    if data:
        raise ConfigError(f"unknown table(s) {sorted(data)}")

    try:
        cfg = ScenarioConfig(
            scenario_id=str(scen.pop("id")), span_tu=float(scen.pop("span_tu")),
            description=str(scen.pop("description", "")), spacecraft=spacecraft, topology=topology,
            measurement=measurement, filter=filt, montecarlo=mc, system=system,
            output_dir=str(out.pop("dir", "")),
        )
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None
    if scen or out:
        raise ConfigError(f"scenario/output: unknown key(s) {sorted(set(scen) | set(out))}")
    for name in [topology.hub] * bool(topology.hub) + [n for p in topology.pairs for n in p]:
        cfg.index(name)
    return cfg


def to_dict(cfg: ScenarioConfig) -> dict:
    def clean(d):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items() if v is not None}

    sc = {}
    for s in cfg.spacecraft:
        d = clean(asdict(s))
        d.pop("name")
        sc[s.name] = d
    topo = clean(asdict(cfg.topology))
    topo["pairs"] = [list(p) for p in cfg.topology.pairs]
    return {
        "scenario": {"id": cfg.scenario_id, "description": cfg.description, "span_tu": cfg.span_tu},
        "system": {"mu": cfg.system.mu, "l_star_km": cfg.system.l_star, "t_star_s": cfg.system.t_star},
        "spacecraft": sc,
        "links": {"topology": topo, "measurement": clean(asdict(cfg.measurement))},
        "filter": asdict(cfg.filter),
        "montecarlo": asdict(cfg.montecarlo),
        "output": {"dir": cfg.output_dir},
    }


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def loads(text: str) -> ScenarioConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    return from_dict(data)


def load(path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        return loads(p.read_text())
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from None


def save(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps(cfg))


def preset_names() -> list:
    root = resources.files("liaison") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def load_preset(name: str) -> ScenarioConfig:
    root = resources.files("liaison") / "presets"
    f = root / f"{name}.toml"
    if not f.is_file():
        raise ConfigError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    return loads(f.read_text())


def resolve(spec: str) -> ScenarioConfig:
    """Load a config from a file path, or from a shipped preset by name."""
    if Path(spec).suffix == ".toml" or Path(spec).exists():
        return load(spec)
    return load_preset(spec)


def with_overrides(cfg: ScenarioConfig, *, runs=None, seed=None, kinds=None, interval_tu=None,
                   sigma_range_m=None, sigma_range_rate_mps=None, bias_range_m=None,
                   consider_bias_sigma_m=None, span_tu=None) -> ScenarioConfig:
    """Copy of ``cfg`` with selected fields replaced (``None`` keeps the value)."""
    mc = cfg.montecarlo
    if runs is not None:
        mc = replace(mc, runs=int(runs))
    if seed is not None:
        mc = replace(mc, master_seed=int(seed))
    meas = {k: v for k, v in dict(kinds=kinds, interval_tu=interval_tu, sigma_range_m=sigma_range_m,
                                  sigma_range_rate_mps=sigma_range_rate_mps,
                                  bias_range_m=bias_range_m).items() if v is not None}
    filt = cfg.filter
    if consider_bias_sigma_m is not None:
        filt = replace(filt, consider_bias_sigma_m=consider_bias_sigma_m)
    out = replace(cfg, montecarlo=mc, measurement=replace(cfg.measurement, **meas), filter=filt)
    if span_tu is not None:
        out = replace(out, span_tu=float(span_tu))
    return out

