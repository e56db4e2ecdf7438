"""Single-process deterministic wiring of the whole platform.

One `SimRunner.step()` advances: environment, sensor nodes (self test then
sample), radio links, gateway ingestion, upstream sync with command relay,
and the field controller whose actuator choices feed the next environment
step.  Everything is driven by named substreams of one master seed, so a
scenario re-run reproduces every byte of history.
"""

from __future__ import annotations

import hashlib
import heapq
from pathlib import Path

from .config import Scenario, build_channel_for
from .ctrlserver.core import ControlServer
from .envsim import Environment, EnvState
from .fieldctl import FieldCommand, FieldController
from .fieldnet import BitChannel, SensorNode
from .gateway import Gateway


class SimRunner:
    def __init__(self, scenario: Scenario, *, event_log=None,
                 wall_clock=None) -> None:
        self.scenario = scenario
        self.dt = scenario.dt
        self.t = 0.0
        self.env = Environment(scenario.env_params, scenario.env_initial,
                               seed=scenario.seed, frozen=scenario.env_frozen)
        self.gateway = Gateway(history_len=scenario.gateway.history_len,
                               sync_period=scenario.gateway.sync_period_s)
        server_kwargs = {}
        if wall_clock is not None:
            server_kwargs["wall_clock"] = wall_clock
        self.server = ControlServer(
            users=dict(scenario.server.users),
            history_len=scenario.gateway.history_len,
            session_ttl_s=scenario.server.session_ttl_s,
            max_login_failures=scenario.server.max_login_failures,
            lockout_s=scenario.server.lockout_s,
            ack_timeout_s=scenario.server.ack_timeout_s,
            event_log=event_log, **server_kwargs)

        self.nodes: list[SensorNode] = []
        self.links: dict[int, BitChannel] = {}
        self._pending_faults: dict[int, list] = {}
        self._node_by_kind: dict[str, SensorNode] = {}
        for spec in sorted(scenario.sensors, key=lambda s: s.node_id):
            channel = build_channel_for(spec)
            node = SensorNode(spec.node_id, spec.kind, channel,
                              dt=scenario.dt,
                              sample_period=spec.sample_period,
                              test_period=spec.test_period,
                              epsilon_frac=spec.epsilon_frac,
                              noise_sigma=spec.noise_sigma,
                              seed=scenario.seed)
            self.nodes.append(node)
            self._node_by_kind[spec.kind] = node
            p_bit = scenario.channel.p_bit
            if scenario.channel.ebn0_db is not None:
                link = BitChannel.from_ebn0(scenario.channel.ebn0_db,
                                            p_drop=scenario.channel.p_drop,
                                            latency_s=scenario.channel.latency_s,
                                            seed=scenario.seed,
                                            name=f"node{spec.node_id}")
            else:
                link = BitChannel(p_drop=scenario.channel.p_drop, p_bit=p_bit,
                                  latency_s=scenario.channel.latency_s,
                                  seed=scenario.seed,
                                  name=f"node{spec.node_id}")
            self.links[spec.node_id] = link
            self.gateway.register_sensor(spec.node_id, spec.kind,
                                         spec.test_period)
            self._pending_faults[spec.node_id] = sorted(
                spec.faults, key=lambda f: f.at)

        self.fieldctl = FieldController(
            schedule=list(scenario.control.schedule),
            thresholds=scenario.control.thresholds,
            connect_standby=self._connect_standby)
        self.actuators: dict[str, bool] = self.fieldctl.state
        self._in_flight: list = []   # (deliver_t, tiebreak, frame bytes)
        self._flight_seq = 0
        self._next_sync = 0.0
        self._field_events: list[dict] = []
        self._node_links = [
            (node, self.links[node.node_id],
             EnvState._FIELD_BY_KIND[node.kind])
            for node in self.nodes]
        self._faulty = any(self._pending_faults.values())

    # Standby connection request from the operator side; unknown target
    # falls back to the last selected sensor default (overhead tank).
    def _connect_standby(self, target: str | None) -> bool:
        node = self._node_by_kind.get(target or "tank_level")
        if node is None:
            return False
        return node.connect_standby()

    def step(self) -> None:
        t_next = self.t + self.dt
        env_state = self.env.step(self.actuators)
        env_vals = env_state.__dict__

        if self._faulty:
            self._inject_due_faults(env_state)

        gateway_receive = self.gateway.receive
        in_flight = self._in_flight
        for node, link, attr in self._node_links:
            frame = node.step(env_vals[attr])
            if frame is not None:
                outcome = link.transmit(frame, t_next)
                if outcome is not None:
                    if outcome[0] <= t_next and not in_flight:
                        # Sub-step latency: deliver in emission order now.
                        gateway_receive(outcome[1], outcome[0])
                    else:
                        self._flight_seq += 1
                        heapq.heappush(in_flight,
                                       (outcome[0], self._flight_seq, outcome[1]))

        while in_flight and in_flight[0][0] <= t_next:
            deliver_t, _, data = heapq.heappop(in_flight)
            gateway_receive(data, deliver_t)

        if t_next >= self._next_sync:
            batch = self.gateway.sync(t_next, self.fieldctl.state,
                                      self.fieldctl.runtime_s)
            self.server.apply_sync(batch)
            if self._field_events:
                self.server.apply_field_events(self._field_events)
                self._field_events = []
            fresh = self.gateway.relay_commands(self.server.fetch_pending(t_next))
            for env in fresh:
                self.fieldctl.enqueue(FieldCommand(
                    id=env.id, device=env.device, action=env.action,
                    duration_s=env.duration_s, target=env.target))
            while self._next_sync <= t_next:
                self._next_sync += self.gateway.sync_period

        self.actuators, events = self.fieldctl.tick(
            t_next, self.gateway.kind_values, self.dt)
        if events:
            self._field_events.extend(events)
        self.t = t_next

    def _inject_due_faults(self, env_state) -> None:
        for node in self.nodes:
            faults = self._pending_faults[node.node_id]
            while faults and faults[0].at <= self.t:
                f = faults.pop(0)
                node.inject_fault(f.unit, f.type,
                                  env_state.value_for(node.kind))
        self._faulty = any(self._pending_faults.values())

    def run(self, duration_s: float | None = None) -> None:
        end = self.t + (duration_s if duration_s is not None
                        else self.scenario.duration_s)
        while self.t < end - 1e-9:
            self.step()

    # -- outputs ------------------------------------------------------------

    def history_csv(self, node_id: int) -> str:
        row = self.gateway.rows[node_id]
        lines = ["time,kind,value,flags"]
        for t, value, flags, _seq in self.gateway.history[node_id]:
            lines.append(f"{t:.3f},{row.kind},{value!r},{flags}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Stable hash over every sensor history and the final site state."""
        h = hashlib.sha256()
        for node_id in sorted(self.gateway.history):
            h.update(self.history_csv(node_id).encode("utf-8"))
        s = self.env.state
        h.update(repr([s.time_s, s.temperature_c, s.soil_moisture,
                       s.lake_level_m, s.tank_level_m, s.wind_speed_ms,
                       s.soil_ph, s.humidity, s.fire_risk, s.stream_flow_m3s,
                       s.light_level]).encode("utf-8"))
        h.update(repr(sorted(self.fieldctl.runtime_s.items())).encode("utf-8"))
        return h.hexdigest()

    def write_histories(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for node_id, row in sorted(self.gateway.rows.items()):
            path = out / f"{row.kind}.csv"
            path.write_text(self.history_csv(node_id), encoding="utf-8")
            written.append(path)
        return written
