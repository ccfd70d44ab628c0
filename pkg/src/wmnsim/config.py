"""Scenario files: INI-style ``key = value`` sections, one per module.

Every tunable default lives in a dataclass below; a scenario file only
overrides what it names. Unknown sections or keys are rejected with the
offending ``section.key`` in the message.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .mobility import MobilityConfig
from .protocols.batman import BatmanConfig
from .protocols.olsr import OlsrConfig
from .protocols.sdn import SdnConfig
from .radio import RadioParams
from .topology import LAYOUTS
from .traffic import TrafficConfig

PROTOCOLS = ("olsr", "batman", "sdn", "sdn-no-mobility")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TopologySpec:
    name: str = "T2"
    n_nodes: int | None = None
    area: tuple[float, float] | None = None
    backbone: tuple[tuple[float, float], ...] | None = None
    grid: tuple[int, int] | None = None
    diameter: int | None = None
    n_clients: int | None = None
    central: int | None = None


@dataclass(frozen=True)
class Timings:
    monotone: float = 60.0
    mobility: float = 120.0
    convergence_cap: float = 60.0
    convergence_interval: float = 1.0

    def __post_init__(self):
        if self.monotone <= 0 or self.mobility <= 0:
            raise ValueError("monotone/mobility: must be positive")
        if self.convergence_cap <= 0 or self.convergence_interval <= 0:
            raise ValueError("convergence_cap/convergence_interval: must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    protocols: tuple[str, ...] = ("olsr", "batman", "sdn")
    replications: int = 30
    base_seed: int = 1
    topology: TopologySpec = field(default_factory=TopologySpec)
    mobility: MobilityConfig | None = field(default_factory=MobilityConfig)
    trace_file: str | None = None
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    radio: RadioParams = field(default_factory=RadioParams)
    timings: Timings = field(default_factory=Timings)
    olsr: OlsrConfig = field(default_factory=OlsrConfig)
    batman: BatmanConfig = field(default_factory=BatmanConfig)
    sdn: SdnConfig = field(default_factory=SdnConfig)

    @property
    def mobility_label(self) -> str:
        if self.trace_file is not None:
            return "trace"
        return "static" if self.mobility is None else self.mobility.model


# value conversion ------------------------------------------------------------

def _numbers(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").replace("x", " ").split()]


def _convert(key: str, raw: str, annotation: str):
    raw = raw.strip()
    if annotation.endswith("| None") and raw.lower() in ("", "none"):
        return None
    base = annotation.replace(" | None", "")
    if base == "bool":
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if base == "int":
        return int(raw)
    if base == "float":
        return float(raw)
    if base == "str":
        return raw
    if base == "tuple[str, ...]":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    if base in ("tuple[float, float]", "tuple[int, int]"):
        values = _numbers(raw)
        if len(values) != 2:
            raise ValueError(f"expected two numbers, got {raw!r}")
        kind = int if "int" in base else float
        return kind(values[0]), kind(values[1])
    if base == "tuple[tuple[float, float], ...]":
        points = []
        for chunk in raw.split(";"):
            if chunk.strip():
                values = _numbers(chunk)
                if len(values) != 2:
                    raise ValueError(f"expected 'x y' pairs separated by ';', got {chunk!r}")
                points.append((values[0], values[1]))
        return tuple(points)
    raise ValueError(f"unsupported field type {annotation}")


def _build(cls, section: str, items: dict[str, str], extra: dict | None = None):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = dict(extra or {})
    for key, raw in items.items():
        if key not in known:
            raise ConfigError(f"{section}.{key}: unknown key")
        try:
            kwargs[key] = _convert(key, raw, str(known[key].type))
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}") from None
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{section}.{exc}") from None


SECTIONS = ("scenario", "topology", "mobility", "traffic", "radio", "timings",
            "olsr", "batman", "sdn")


def parse_config(text: str, base_dir: Path | None = None) -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{section}: unknown section")
    sect = {s: dict(parser[s]) if parser.has_section(s) else {} for s in SECTIONS}

    scenario = dict(sect["scenario"])
    if "protocol" in scenario:
        scenario["protocols"] = scenario.pop("protocol")
    trace_file = scenario.pop("trace_file", "").strip() or None
    head = _build(_ScenarioHead, "scenario", scenario)
    for p in head.protocols:
        if p not in PROTOCOLS:
            raise ConfigError(f"scenario.protocol: unknown protocol {p!r}")
    if head.replications < 1:
        raise ConfigError("scenario.replications: must be >= 1")

    topology = _build(TopologySpec, "topology", sect["topology"])
    if topology.name not in LAYOUTS and topology.area is None:
        raise ConfigError("topology.area: required for a custom topology")
    area = LAYOUTS[topology.name].area if topology.name in LAYOUTS else topology.area

    mob_items = dict(sect["mobility"])
    model = mob_items.get("model", "RWP").strip()
    if model.lower() in ("none", "static"):
        mobility = None
    else:
        mob_items.setdefault("area", f"{area[0]} {area[1]}")
        mobility = _build(MobilityConfig, "mobility", mob_items)

    timings = _build(Timings, "timings", sect["timings"])
    traffic = _build(TrafficConfig, "traffic", sect["traffic"],
                     {"start": timings.monotone, "stop": timings.monotone + timings.mobility})
    if trace_file is not None and base_dir is not None and not Path(trace_file).is_absolute():
        trace_file = str(base_dir / trace_file)
    return ScenarioConfig(
        name=head.name, protocols=head.protocols, replications=head.replications,
        base_seed=head.base_seed, topology=topology, mobility=mobility, trace_file=trace_file,
        traffic=traffic, radio=_build(RadioParams, "radio", sect["radio"]), timings=timings,
        olsr=_build(OlsrConfig, "olsr", sect["olsr"]),
        batman=_build(BatmanConfig, "batman", sect["batman"]),
        sdn=_build(SdnConfig, "sdn", sect["sdn"]))


@dataclass(frozen=True)
class _ScenarioHead:
    name: str = "scenario"
    protocols: tuple[str, ...] = ("olsr", "batman", "sdn")
    replications: int = 30
    base_seed: int = 1


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)
