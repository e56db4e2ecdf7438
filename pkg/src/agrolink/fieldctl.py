"""On-site controller: schedule, remote overrides, pump selection.

The controller runs a repeating daily schedule for irrigation and periodic
pest-spray cycles, and executes operator commands relayed from the base
station.  An unexpired override always beats the schedule for its device;
ON overrides carry a duration and revert on their own, OFF overrides hold
until superseded.  The two supply pumps are mutually exclusive: scheduled
pumping windows are resolved to a concrete pump from the latest readings
and accumulated runtimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

DAY_S = 86_400.0

ACTUATORS = ("deep_well_pump", "lake_pump", "fwgs_water_feed", "fwgs_drug_feed")
PUMPS = ("deep_well_pump", "lake_pump")
DEVICES = ACTUATORS + ("standby_selector",)
PUMP_WINDOW = "pump"  # schedule target resolved to one of PUMPS at tick time

ACTION_ON = "ON"
ACTION_OFF = "OFF"
ACTION_CONNECT_STANDBY = "ConnectStandby"


@dataclass(frozen=True)
class ScheduleEntry:
    """Daily (or every-Nth-day) window during which a device is driven on."""

    device: str               # one of ACTUATORS or PUMP_WINDOW
    start_s: float            # seconds after local midnight
    duration_s: float
    period_days: int = 1
    phase_days: int = 0

    def __post_init__(self) -> None:
        if self.device not in ACTUATORS and self.device != PUMP_WINDOW:
            raise ValueError(f"not a schedulable device: {self.device!r}")
        if not 0.0 <= self.start_s < DAY_S:
            raise ValueError("start_s must lie within the day")
        if self.duration_s <= 0.0 or self.start_s + self.duration_s > DAY_S:
            raise ValueError("window must fit within one day")
        if self.period_days < 1:
            raise ValueError("period_days must be >= 1")

    def active_at(self, t: float) -> bool:
        day = int(t // DAY_S)
        if (day - self.phase_days) % self.period_days != 0:
            return False
        tod = t - day * DAY_S
        return self.start_s <= tod < self.start_s + self.duration_s


def spray_cycle(start_s: float, duration_s: float, period_days: int,
                phase_days: int = 0) -> list[ScheduleEntry]:
    """Pest-control cycle: the drug feed runs with water as its carrier."""
    return [
        ScheduleEntry("fwgs_water_feed", start_s, duration_s, period_days, phase_days),
        ScheduleEntry("fwgs_drug_feed", start_s, duration_s, period_days, phase_days),
    ]


@dataclass(frozen=True)
class Thresholds:
    moisture_low: float = 0.25    # demand irrigation head below this
    moisture_hyst: float = 0.05   # slack on the closed-loop band
    tank_low_m: float = 2.0       # refill the tank below this head
    lake_min_m: float = 2.0       # spare the lake below this
    runtime_balance_s: float = 18_000.0  # tolerated pump runtime skew


@dataclass(frozen=True)
class FieldCommand:
    id: int
    device: str
    action: str
    duration_s: float | None = None
    target: str | None = None     # sensor kind for standby connection


@dataclass
class Override:
    on: bool
    expires_at: float | None      # None: holds until superseded
    cmd_id: int


def select_pump(sensors: Mapping[str, float], runtime_s: Mapping[str, float],
                th: Thresholds) -> str | None:
    """Pick the pump to run during a pumping window, or None if no demand.

    Readings the gateway has not (yet) produced count as healthy levels, so
    a blind controller never pumps on missing data.
    """
    moisture = sensors.get("soil_moisture", 1.0)
    tank = sensors.get("tank_level", math.inf)
    lake = sensors.get("lake_level", math.inf)
    if moisture >= th.moisture_low and tank >= th.tank_low_m:
        return None
    if lake > th.lake_min_m:
        skew = runtime_s.get("lake_pump", 0.0) - runtime_s.get("deep_well_pump", 0.0)
        if skew > th.runtime_balance_s:
            return "deep_well_pump"
        return "lake_pump"
    return "deep_well_pump"


class FieldController:
    """Relay/valve driver with override-beats-schedule semantics."""

    def __init__(self, schedule: list[ScheduleEntry] | None = None,
                 thresholds: Thresholds | None = None,
                 connect_standby: Callable[[str | None], bool] | None = None) -> None:
        self.schedule = list(schedule or [])
        self.thresholds = thresholds or Thresholds()
        self._connect_standby = connect_standby or (lambda target: False)
        self.overrides: dict[str, Override] = {}
        self.runtime_s: dict[str, float] = {a: 0.0 for a in ACTUATORS}
        self.state: dict[str, bool] = {a: False for a in ACTUATORS}
        self._sched_bits: dict[str, bool] = {a: False for a in ACTUATORS}
        self._sched_bits[PUMP_WINDOW] = False
        self._queue: list[FieldCommand] = []
        self._seen_ids: set[int] = set()

    def enqueue(self, cmd: FieldCommand) -> None:
        self._queue.append(cmd)

    # -- schedule layer -----------------------------------------------------

    def schedule_bits(self, t: float) -> dict[str, bool]:
        """Scheduled drive for each actuator plus the virtual pump window."""
        bits = self._sched_bits
        for key in bits:
            bits[key] = False
        for entry in self.schedule:
            if entry.active_at(t):
                bits[entry.device] = True
        return bits

    # -- command execution --------------------------------------------------

    def _apply_command(self, cmd: FieldCommand, t: float, events: list) -> None:
        if cmd.id in self._seen_ids:
            return
        self._seen_ids.add(cmd.id)
        if cmd.action == ACTION_CONNECT_STANDBY or cmd.device == "standby_selector":
            ok = self._connect_standby(cmd.target)
            events.append({"type": "ack", "id": cmd.id, "t": t,
                           "device": cmd.device, "ok": ok})
            events.append({"type": "completed", "id": cmd.id, "t": t,
                           "reason": "standby_connected" if ok else "no_such_sensor"})
            return
        if cmd.device not in ACTUATORS or cmd.action not in (ACTION_ON, ACTION_OFF):
            events.append({"type": "ack", "id": cmd.id, "t": t,
                           "device": cmd.device, "ok": False})
            events.append({"type": "completed", "id": cmd.id, "t": t,
                           "reason": "rejected"})
            return
        on = cmd.action == ACTION_ON
        prev = self.overrides.get(cmd.device)
        if prev is not None:
            events.append({"type": "completed", "id": prev.cmd_id, "t": t,
                           "reason": "superseded"})
        expires = t + cmd.duration_s if (on and cmd.duration_s) else None
        self.overrides[cmd.device] = Override(on, expires, cmd.id)
        events.append({"type": "ack", "id": cmd.id, "t": t,
                       "device": cmd.device, "ok": True, "on": on})

    # -- main loop ----------------------------------------------------------

    def tick(self, t: float, sensors: Mapping[str, float],
             dt: float) -> tuple[dict[str, bool], list[dict]]:
        """Advance one control period: commands, expiries, then drive bits.

        The returned state dict is owned by the controller and refreshed in
        place on the next tick; callers treat it as read-only.
        """
        events: list[dict] = []
        if self._queue:
            for cmd in self._queue:
                self._apply_command(cmd, t, events)
            self._queue.clear()

        overrides = self.overrides
        if overrides:
            for device in list(overrides):
                ov = overrides[device]
                if ov.expires_at is not None and t >= ov.expires_at:
                    del overrides[device]
                    events.append({"type": "completed", "id": ov.cmd_id,
                                   "t": t, "reason": "duration_elapsed"})

        sched = self.schedule_bits(t)
        state = self.state
        for device in ("fwgs_water_feed", "fwgs_drug_feed"):
            ov = overrides.get(device)
            state[device] = ov.on if ov is not None else sched[device]

        selected = None
        if sched[PUMP_WINDOW] and not (
                "deep_well_pump" in overrides or "lake_pump" in overrides):
            selected = select_pump(sensors, self.runtime_s, self.thresholds)
        for pump in PUMPS:
            ov = overrides.get(pump)
            if ov is not None:
                state[pump] = ov.on
            else:
                state[pump] = sched[pump] or selected == pump

        self._repair_exclusion(state)
        runtime = self.runtime_s
        for device in ACTUATORS:
            if state[device]:
                runtime[device] += dt
        return state, events

    def _repair_exclusion(self, state: dict[str, bool]) -> None:
        """At most one supply pump may run; an override-driven pump wins,
        otherwise the lake pump does."""
        if not (state["deep_well_pump"] and state["lake_pump"]):
            return
        deep_ov = "deep_well_pump" in self.overrides
        lake_ov = "lake_pump" in self.overrides
        if deep_ov and not lake_ov:
            state["lake_pump"] = False
        else:
            state["deep_well_pump"] = False
