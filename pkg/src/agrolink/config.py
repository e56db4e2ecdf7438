"""Scenario configuration: YAML schema, defaults, and object builders.

A scenario fixes everything a run needs: the environment parameters and
initial state, the sensor fleet with its transducer choices and injected
faults, the radio channel, gateway and server settings, the irrigation
schedule, and the finance model.  Unknown keys anywhere are an error, so a
typo cannot silently fall back to a default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .analysis import ExpenditureParams, FinanceParams
from .envsim import EnvParams, EnvState
from .fieldctl import ScheduleEntry, Thresholds, spray_cycle
from .xducer import (AdcSpec, AffineTransfer, CapacitiveLevelTransfer,
                     SENSOR_KINDS, SensorChannel, ThermistorBridgeTransfer,
                     WindmillTransfer)

DEFAULT_BANDS = {
    "temperature": (-20.0, 60.0),
    "lake_level": (0.0, 50.0),
    "tank_level": (0.0, 4.0),
    "wind_speed": (0.0, 40.0),
    "soil_moisture": (0.0, 1.0),
    "soil_ph": (0.0, 14.0),
    "humidity": (0.0, 1.0),
    "fire_risk": (0.0, 1.0),
    "stream_flow": (0.0, 3.0),
    "light_level": (0.0, 1.0),
}


class ConfigError(ValueError):
    """Malformed scenario document."""


@dataclass(frozen=True)
class FaultSpec:
    unit: str      # "primary" | "standby"
    type: str      # "stuck" | "open"
    at: float      # sim seconds

    def __post_init__(self) -> None:
        if self.unit not in ("primary", "standby"):
            raise ConfigError(f"fault unit must be primary/standby, got {self.unit!r}")
        if self.type not in ("stuck", "open"):
            raise ConfigError(f"fault type must be stuck/open, got {self.type!r}")


@dataclass(frozen=True)
class SensorSpec:
    kind: str
    node_id: int
    sample_period: float = 60.0
    test_period: float = 60.0
    epsilon_frac: float = 0.02
    noise_sigma: float = 0.00025   # volts rms, see SensorNode.DEFAULT_NOISE_SIGMA
    band: tuple[float, float] | None = None
    adc_bits: int = 12
    faults: tuple[FaultSpec, ...] = ()


@dataclass(frozen=True)
class ChannelSpec:
    p_drop: float = 0.0
    p_bit: float = 0.0
    ebn0_db: float | None = None   # overrides p_bit when given
    latency_s: float = 0.0


@dataclass(frozen=True)
class GatewaySpec:
    history_len: int = 86_400
    sync_period_s: float = 5.0


@dataclass(frozen=True)
class ServerSpec:
    users: dict = field(default_factory=lambda: {"admin": "fieldops"})
    session_ttl_s: float = 1800.0
    max_login_failures: int = 10
    lockout_s: float = 300.0
    ack_timeout_s: float = 120.0


@dataclass(frozen=True)
class ControlSpec:
    thresholds: Thresholds = field(default_factory=Thresholds)
    schedule: tuple[ScheduleEntry, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int = 0
    dt: float = 60.0
    duration_s: float = 86_400.0
    env_params: EnvParams = field(default_factory=EnvParams)
    env_initial: EnvState = field(default_factory=EnvState)
    env_frozen: bool = False
    sensors: tuple[SensorSpec, ...] = ()
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    gateway: GatewaySpec = field(default_factory=GatewaySpec)
    server: ServerSpec = field(default_factory=ServerSpec)
    control: ControlSpec = field(default_factory=ControlSpec)
    finance: FinanceParams = field(default_factory=FinanceParams)
    expenditure: ExpenditureParams = field(default_factory=ExpenditureParams)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _take(doc: dict, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _fill(cls, doc: dict, where: str):
    """Construct a dataclass from a dict, rejecting unknown keys."""
    names = {f.name for f in dataclasses.fields(cls)}
    _take(doc, names, where)
    return cls(**doc)


def _time_of_day(value) -> float:
    """Accept seconds or an HH:MM string."""
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 2:
            raise ConfigError(f"bad time of day {value!r}")
        return int(parts[0]) * 3600.0 + int(parts[1]) * 60.0
    return float(value)


def parse_scenario(doc: dict, name: str = "inline") -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a mapping")
    _take(doc, {"name", "seed", "dt", "duration_s", "env", "sensors",
                "channel", "gateway", "server", "control", "finance",
                "expenditure"}, "scenario")

    env_doc = dict(doc.get("env") or {})
    _take(env_doc, {"frozen", "params", "initial"}, "env")
    env_params_doc = dict(env_doc.get("params") or {})
    env_params_doc.setdefault("dt", float(doc.get("dt", 60.0)))
    env_params = _fill(EnvParams, env_params_doc, "env.params")
    env_initial = _fill(EnvState, dict(env_doc.get("initial") or {}), "env.initial")

    sensors = []
    seen_ids = set()
    for i, s in enumerate(doc.get("sensors") or []):
        s = dict(s)
        if "faults" in s:
            s["faults"] = tuple(
                _fill(FaultSpec, dict(f), f"sensors[{i}].faults") for f in s["faults"])
        if "band" in s and s["band"] is not None:
            s["band"] = tuple(float(x) for x in s["band"])
        s.setdefault("node_id", SENSOR_KINDS.index(s.get("kind", "")) + 1
                     if s.get("kind") in SENSOR_KINDS else i + 1)
        spec = _fill(SensorSpec, s, f"sensors[{i}]")
        if spec.kind not in SENSOR_KINDS:
            raise ConfigError(f"unknown sensor kind {spec.kind!r}")
        if spec.node_id in seen_ids:
            raise ConfigError(f"duplicate node_id {spec.node_id}")
        seen_ids.add(spec.node_id)
        sensors.append(spec)

    control_doc = dict(doc.get("control") or {})
    _take(control_doc, {"thresholds", "schedule", "spray"}, "control")
    thresholds = _fill(Thresholds, dict(control_doc.get("thresholds") or {}),
                       "control.thresholds")
    entries: list[ScheduleEntry] = []
    for i, e in enumerate(control_doc.get("schedule") or []):
        e = dict(e)
        _take(e, {"device", "start", "duration_s", "period_days", "phase_days"},
              f"control.schedule[{i}]")
        entries.append(ScheduleEntry(
            device=e["device"], start_s=_time_of_day(e["start"]),
            duration_s=float(e["duration_s"]),
            period_days=int(e.get("period_days", 1)),
            phase_days=int(e.get("phase_days", 0))))
    for i, e in enumerate(control_doc.get("spray") or []):
        e = dict(e)
        _take(e, {"start", "duration_s", "period_days", "phase_days"},
              f"control.spray[{i}]")
        entries.extend(spray_cycle(
            _time_of_day(e["start"]), float(e["duration_s"]),
            int(e.get("period_days", 1)), int(e.get("phase_days", 0))))

    return Scenario(
        name=str(doc.get("name", name)),
        seed=int(doc.get("seed", 0)),
        dt=float(doc.get("dt", 60.0)),
        duration_s=float(doc.get("duration_s", 86_400.0)),
        env_params=env_params,
        env_initial=env_initial,
        env_frozen=bool(env_doc.get("frozen", False)),
        sensors=tuple(sensors),
        channel=_fill(ChannelSpec, dict(doc.get("channel") or {}), "channel"),
        gateway=_fill(GatewaySpec, dict(doc.get("gateway") or {}), "gateway"),
        server=_fill(ServerSpec, dict(doc.get("server") or {}), "server"),
        control=ControlSpec(thresholds=thresholds, schedule=tuple(entries)),
        finance=_fill(FinanceParams, dict(doc.get("finance") or {}), "finance"),
        expenditure=_fill(ExpenditureParams, dict(doc.get("expenditure") or {}),
                          "expenditure"),
    )


def load_scenario(name_or_path: str) -> Scenario:
    """Load a shipped scenario by name or any YAML file by path."""
    path = Path(name_or_path)
    if path.suffix in (".yaml", ".yml") or path.exists():
        text = path.read_text(encoding="utf-8")
        return parse_scenario(yaml.safe_load(text), name=path.stem)
    ref = resources.files("agrolink.scenarios").joinpath(f"{name_or_path}.yaml")
    if not ref.is_file():
        raise ConfigError(f"no scenario named {name_or_path!r}")
    return parse_scenario(yaml.safe_load(ref.read_text(encoding="utf-8")),
                          name=name_or_path)


def shipped_scenarios() -> list[str]:
    out = []
    for entry in resources.files("agrolink.scenarios").iterdir():
        if entry.name.endswith(".yaml"):
            out.append(entry.name[:-5])
    return sorted(out)


# ---------------------------------------------------------------------------
# Object builders
# ---------------------------------------------------------------------------

def build_channel_for(spec: SensorSpec) -> SensorChannel:
    band = spec.band or DEFAULT_BANDS[spec.kind]
    adc = AdcSpec(bits=spec.adc_bits)
    if spec.kind == "temperature":
        transfer = ThermistorBridgeTransfer()
    elif spec.kind in ("lake_level", "tank_level"):
        transfer = CapacitiveLevelTransfer(height=band[1])
    elif spec.kind == "wind_speed":
        transfer = WindmillTransfer(cutout=band[1])
    else:
        transfer = AffineTransfer()
    return SensorChannel(spec.kind, band, transfer, adc)
