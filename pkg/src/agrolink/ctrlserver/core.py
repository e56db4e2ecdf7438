"""Control-server state: status/control tables, command lifecycle, auth.

The server is the operator's view of the site.  It holds the synced live
table and bounded reading histories, manages the command envelope state
machine (pending -> dispatched -> acked -> completed, with expiry on a
missed acknowledgement), authenticates operators with salted password
hashes and lockout on repeated failure, and fans events out to stream
subscribers.  All methods are thread safe; the simulation thread and the
HTTP workers share one instance.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import queue
import threading
import time
from collections import deque
from dataclasses import asdict, dataclass

from ..fieldctl import (ACTION_CONNECT_STANDBY, ACTION_OFF, ACTION_ON,
                        ACTUATORS, DEVICES)
from ..xducer import SENSOR_KINDS

PENDING = "pending"
DISPATCHED = "dispatched"
ACKED = "acked"
COMPLETED = "completed"
EXPIRED = "expired"

TERMINAL_STATES = (COMPLETED, EXPIRED)

DISPLAY_NAMES = {
    "temperature": "Temperature",
    "lake_level": "Lake water level",
    "tank_level": "Overhead tank water level",
    "wind_speed": "Wind speed",
    "soil_moisture": "Soil moisture",
    "soil_ph": "Soil pH",
    "humidity": "Air humidity",
    "fire_risk": "Fire risk",
    "stream_flow": "Stream flow",
    "light_level": "Ambient light",
}

UNITS = {
    "temperature": "deg C",
    "lake_level": "m",
    "tank_level": "m",
    "wind_speed": "m/s",
    "soil_moisture": "fraction",
    "soil_ph": "pH",
    "humidity": "fraction",
    "fire_risk": "index",
    "stream_flow": "m3/s",
    "light_level": "fraction",
}

DEVICE_NAMES = {
    "deep_well_pump": "Deep well pump",
    "lake_pump": "Lake pump",
    "fwgs_water_feed": "FWGS water feed",
    "fwgs_drug_feed": "FWGS drug feed",
    "standby_selector": "Standby transducer selector",
}

STATUS_LABELS = {"ok": "OK", "error": "Error", "needs_replacement": "Replace"}

_PBKDF2_ITERS = 100_000


class AuthError(Exception):
    """Bad credentials or a missing/expired session."""


class LockedOutError(AuthError):
    """Account locked after too many consecutive failures."""


class CommandError(ValueError):
    """Command request rejected by validation."""


def _hash_password(password: str, salt: bytes) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt,
                               _PBKDF2_ITERS)


@dataclass
class CommandEnvelope:
    id: int
    device: str
    action: str
    duration_s: float | None
    target: str | None
    issued_by: str
    state: str = PENDING
    created_t: float = 0.0        # sim seconds
    dispatched_t: float | None = None
    acked_t: float | None = None
    closed_t: float | None = None
    reason: str | None = None
    ack_ok: bool | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _StatusRow:
    node_id: int
    kind: str
    value: float = 0.0
    flags: int = 0
    test_age_s: float | None = None
    last_update_t: float | None = None


class EventBus:
    """Fan-out of server events to any number of thread-safe subscribers."""

    def __init__(self, maxsize: int = 1000) -> None:
        self._subs: list[queue.Queue] = []
        self._lock = threading.Lock()
        self._maxsize = maxsize

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(self._maxsize)
        with self._lock:
            self._subs.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subs:
                self._subs.remove(q)

    def publish(self, event_type: str, payload: dict) -> None:
        if not self._subs:   # benign race; headless runs pay nothing here
            return
        with self._lock:
            subs = list(self._subs)
        for q in subs:
            try:
                q.put_nowait({"type": event_type, **payload})
            except queue.Full:
                pass  # slow consumer loses events rather than blocking the sim


class ControlServer:
    def __init__(self, users: dict[str, str] | None = None, *,
                 history_len: int = 86_400, session_ttl_s: float = 1800.0,
                 max_login_failures: int = 10, lockout_s: float = 300.0,
                 ack_timeout_s: float = 120.0, event_log=None,
                 wall_clock=time.time) -> None:
        self._lock = threading.RLock()
        self.history_len = history_len
        self.session_ttl_s = session_ttl_s
        self.max_login_failures = max_login_failures
        self.lockout_s = lockout_s
        self.ack_timeout_s = ack_timeout_s
        self.event_log = event_log
        self.wall_clock = wall_clock
        self.bus = EventBus()

        self._users: dict[str, dict] = {}
        for name, password in (users or {}).items():
            self.add_user(name, password)
        self._sessions: dict[str, dict] = {}
        self._failures: dict[str, int] = {}
        self._locked_until: dict[str, float] = {}

        self.sim_time = 0.0
        self.rows: dict[int, _StatusRow] = {}
        self.histories: dict[int, deque] = {}
        self._hist_last_t: dict[int, float] = {}
        self._kind_to_node: dict[str, int] = {}
        self.field_state: dict[str, bool] = {a: False for a in ACTUATORS}
        self.field_runtime_s: dict[str, float] = {}
        self.envelopes: dict[int, CommandEnvelope] = {}
        self._next_cmd_id = 1
        self._pending_count = 0
        self._open_count = 0    # envelopes not yet terminal
        self.last_command: dict[str, int] = {}
        self.standby_target: str | None = "tank_level"

    # -- authentication -----------------------------------------------------

    def add_user(self, name: str, password: str) -> None:
        salt = os.urandom(16)
        self._users[name] = {"salt": salt,
                             "hash": _hash_password(password, salt)}

    def login(self, username: str, password: str) -> str:
        """Authenticate and open a session; returns the bearer token."""
        now = self.wall_clock()
        with self._lock:
            until = self._locked_until.get(username, 0.0)
            if now < until:
                self._log("login_locked", user=username)
                raise LockedOutError(f"account locked for {until - now:.0f} s")
            rec = self._users.get(username)
            ok = (rec is not None and
                  hmac.compare_digest(_hash_password(password, rec["salt"]),
                                      rec["hash"]))
            if not ok:
                n = self._failures.get(username, 0) + 1
                self._failures[username] = n
                if n >= self.max_login_failures:
                    self._locked_until[username] = now + self.lockout_s
                    self._failures[username] = 0
                    self._log("lockout", user=username)
                    self.bus.publish("lockout", {"user": username})
                    raise LockedOutError("too many failures, account locked")
                self._log("login_fail", user=username)
                raise AuthError("invalid credentials")
            self._failures[username] = 0
            token = os.urandom(24).hex()
            self._sessions[token] = {"user": username,
                                     "expires_at": now + self.session_ttl_s}
            self._log("login_ok", user=username)
            return token

    def authenticate(self, token: str | None) -> str:
        """Map a bearer token to a username or raise AuthError."""
        if not token:
            raise AuthError("missing token")
        now = self.wall_clock()
        with self._lock:
            sess = self._sessions.get(token)
            if sess is None:
                raise AuthError("unknown session")
            if now >= sess["expires_at"]:
                del self._sessions[token]
                raise AuthError("session expired")
            return sess["user"]

    def logout(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)

    # -- sync ingestion -----------------------------------------------------

    def apply_sync(self, batch) -> None:
        """Ingest one gateway sync batch; repeated batches are harmless."""
        with self._lock:
            self.sim_time = max(self.sim_time, batch.time)
            for node_id, kind, value, flags, _seq, last_update_t, age in batch.rows:
                sr = self.rows.get(node_id)
                if sr is None:
                    sr = _StatusRow(node_id=node_id, kind=kind)
                    self.rows[node_id] = sr
                    self.histories[node_id] = deque(maxlen=self.history_len)
                    self._hist_last_t[node_id] = -1.0
                    self._kind_to_node[kind] = node_id
                sr.value = value
                sr.flags = flags
                sr.test_age_s = age
                sr.last_update_t = last_update_t
            for node_id, entries in batch.history_new.items():
                hist = self.histories.get(node_id)
                if hist is None:
                    continue
                last = self._hist_last_t.get(node_id, -1.0)
                for entry in entries:
                    if entry[0] > last:   # duplicate-safe: time is monotone
                        hist.append(entry)
                        last = entry[0]
                self._hist_last_t[node_id] = last
            if batch.actuators:
                self.field_state.update(batch.actuators)
            if batch.runtime_s:
                self.field_runtime_s.update(batch.runtime_s)
            self.expire_stale(batch.time)
        self.bus.publish("status", {"sim_time": batch.time})

    # -- command lifecycle --------------------------------------------------

    def issue_command(self, user: str, device: str, action: str,
                      duration_s: float | None = None,
                      target: str | None = None) -> CommandEnvelope:
        self._validate_command(device, action, duration_s, target)
        with self._lock:
            env = CommandEnvelope(id=self._next_cmd_id, device=device,
                                  action=action, duration_s=duration_s,
                                  target=target, issued_by=user,
                                  created_t=self.sim_time)
            self._next_cmd_id += 1
            self._pending_count += 1
            self._open_count += 1
            self.envelopes[env.id] = env
            self.last_command[device] = env.id
            if device == "standby_selector" and target:
                self.standby_target = target
            self._log("command_issued", **env.to_dict())
        self.bus.publish("command", env.to_dict())
        return env

    @staticmethod
    def _validate_command(device: str, action: str, duration_s, target) -> None:
        if device not in DEVICES:
            raise CommandError(f"unknown device {device!r}")
        if device == "standby_selector":
            if action != ACTION_CONNECT_STANDBY:
                raise CommandError("standby selector only takes ConnectStandby")
        elif action not in (ACTION_ON, ACTION_OFF):
            raise CommandError(f"unknown action {action!r}")
        if action in (ACTION_ON, ACTION_CONNECT_STANDBY):
            if duration_s is None or not duration_s > 0:
                raise CommandError(f"{action} needs a positive duration")
            if duration_s > 7 * 86_400:
                raise CommandError("duration above one week is not accepted")
        elif duration_s is not None:
            raise CommandError("OFF takes no duration")
        if target is not None and target not in SENSOR_KINDS:
            raise CommandError(f"unknown sensor {target!r}")

    def fetch_pending(self, t: float) -> list[CommandEnvelope]:
        """Hand pending envelopes to the relay, marking them dispatched."""
        if not self._pending_count:   # benign race, rechecked under the lock
            return []
        with self._lock:
            out = []
            for env in self.envelopes.values():
                if env.state == PENDING:
                    env.state = DISPATCHED
                    env.dispatched_t = t
                    self._log("command_dispatched", id=env.id, t=t)
                    out.append(env)
            self._pending_count -= len(out)
        for env in out:
            self.bus.publish("command", env.to_dict())
        return out

    def apply_field_events(self, events: list[dict]) -> None:
        """Acks and completions reported back from the field controller."""
        changed = []
        with self._lock:
            for ev in events:
                env = self.envelopes.get(ev.get("id", -1))
                if env is None:
                    continue
                if ev["type"] == "ack" and env.state == DISPATCHED:
                    env.state = ACKED
                    env.acked_t = ev["t"]
                    env.ack_ok = ev.get("ok", True)
                    self._log("command_acked", id=env.id, t=ev["t"],
                              ok=env.ack_ok)
                    changed.append(env)
                elif ev["type"] == "completed" and env.state not in TERMINAL_STATES:
                    if env.state == PENDING:
                        self._pending_count -= 1
                    env.state = COMPLETED
                    env.closed_t = ev["t"]
                    env.reason = ev.get("reason")
                    self._open_count -= 1
                    self._log("command_completed", id=env.id, t=ev["t"],
                              reason=env.reason)
                    changed.append(env)
        for env in changed:
            self.bus.publish("command", env.to_dict())

    def expire_stale(self, t: float) -> None:
        """Expire dispatched envelopes whose acknowledgement never arrived.

        A standby connection uses its own duration as the ack window; other
        commands get the server default.
        """
        if not self._open_count:   # benign race, rechecked under the lock
            return
        changed = []
        with self._lock:
            for env in self.envelopes.values():
                if env.state != DISPATCHED:
                    continue
                window = self.ack_timeout_s
                if env.action == ACTION_CONNECT_STANDBY and env.duration_s:
                    window = env.duration_s
                if env.dispatched_t is not None and t - env.dispatched_t > window:
                    env.state = EXPIRED
                    env.closed_t = t
                    env.reason = "ack timeout"
                    self._open_count -= 1
                    self._log("command_expired", id=env.id, t=t)
                    changed.append(env)
        for env in changed:
            self.bus.publish("command", env.to_dict())

    # -- table rendering ----------------------------------------------------

    def status_rows(self) -> list[dict]:
        with self._lock:
            out = []
            for sr in sorted(self.rows.values(), key=lambda r: SENSOR_KINDS.index(r.kind)):
                standby = bool(sr.flags & 0x01)
                if sr.flags & 0x04:
                    status = STATUS_LABELS["needs_replacement"]
                elif sr.flags & 0x02:
                    status = STATUS_LABELS["error"]
                else:
                    status = STATUS_LABELS["ok"]
                out.append({
                    "sensor": sr.kind,
                    "name": DISPLAY_NAMES.get(sr.kind, sr.kind),
                    "value": sr.value,
                    "unit": UNITS.get(sr.kind, ""),
                    "status": status,
                    "standby_active": standby,
                    "test_done_before_s": sr.test_age_s,
                })
            return out

    def control_rows(self) -> list[dict]:
        with self._lock:
            out = []
            for device in DEVICES:
                env = self.envelopes.get(self.last_command.get(device, -1))
                command = env.action if env else None
                duration = env.duration_s if env else None
                remaining = None
                if (env and env.state == ACKED and env.action == ACTION_ON
                        and env.duration_s and env.acked_t is not None):
                    remaining = max(env.acked_t + env.duration_s - self.sim_time, 0.0)
                if device == "standby_selector":
                    present = DISPLAY_NAMES.get(self.standby_target or "", "none")
                else:
                    present = "ON" if self.field_state.get(device) else "OFF"
                out.append({
                    "device": device,
                    "name": DEVICE_NAMES[device],
                    "command": command,
                    "command_state": env.state if env else None,
                    "duration_s": duration,
                    "remaining_s": remaining,
                    "present_status": present,
                })
            return out

    def command_list(self) -> list[dict]:
        with self._lock:
            return [e.to_dict() for e in self.envelopes.values()]

    # -- history ------------------------------------------------------------

    def history_for(self, kind: str, limit: int | None = None) -> list[tuple]:
        with self._lock:
            node_id = self._kind_to_node.get(kind)
            if node_id is None:
                raise KeyError(kind)
            hist = list(self.histories[node_id])
        return hist[-limit:] if limit else hist

    def history_csv(self, kind: str) -> str:
        rows = self.history_for(kind)
        lines = ["time,kind,value,flags"]
        for t, value, flags, _seq in rows:
            lines.append(f"{t:.3f},{kind},{value!r},{flags}")
        return "\n".join(lines) + "\n"

    # -- persistence hooks --------------------------------------------------

    def _log(self, event_type: str, **payload) -> None:
        if self.event_log is not None:
            self.event_log.append({"type": event_type,
                                   "wall_t": self.wall_clock(),
                                   "sim_t": self.sim_time, **payload})

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "sim_time": self.sim_time,
                "rows": [vars(r).copy() for r in self.rows.values()],
                "histories": {str(k): list(v) for k, v in self.histories.items()},
                "hist_last_t": {str(k): v for k, v in self._hist_last_t.items()},
                "field_state": dict(self.field_state),
                "field_runtime_s": dict(self.field_runtime_s),
                "envelopes": [e.to_dict() for e in self.envelopes.values()],
                "next_cmd_id": self._next_cmd_id,
                "last_command": dict(self.last_command),
                "standby_target": self.standby_target,
                "event_seq": self.event_log.seq if self.event_log else 0,
            }

    def restore(self, snap: dict) -> None:
        with self._lock:
            self.sim_time = snap["sim_time"]
            self.rows = {}
            self.histories = {}
            self._hist_last_t = {}
            self._kind_to_node = {}
            for r in snap["rows"]:
                sr = _StatusRow(**r)
                self.rows[sr.node_id] = sr
                self._kind_to_node[sr.kind] = sr.node_id
            for key, entries in snap["histories"].items():
                node_id = int(key)
                dq = deque(maxlen=self.history_len)
                for e in entries:
                    dq.append(tuple(e))
                self.histories[node_id] = dq
            for key, t in snap["hist_last_t"].items():
                self._hist_last_t[int(key)] = t
            self.field_state = dict(snap["field_state"])
            self.field_runtime_s = dict(snap["field_runtime_s"])
            self.envelopes = {}
            for ed in snap["envelopes"]:
                env = CommandEnvelope(**ed)
                self.envelopes[env.id] = env
            self._next_cmd_id = snap["next_cmd_id"]
            self.last_command = dict(snap["last_command"])
            self.standby_target = snap["standby_target"]
            self._recount_envelopes()

    def replay_events(self, events: list[dict]) -> None:
        """Re-apply command lifecycle events logged after the snapshot."""
        with self._lock:
            for ev in events:
                etype = ev.get("type", "")
                if etype == "command_issued":
                    env = CommandEnvelope(
                        id=ev["id"], device=ev["device"], action=ev["action"],
                        duration_s=ev.get("duration_s"), target=ev.get("target"),
                        issued_by=ev.get("issued_by", "?"), state=ev.get("state", PENDING),
                        created_t=ev.get("created_t", ev.get("sim_t", 0.0)))
                    self.envelopes[env.id] = env
                    self._next_cmd_id = max(self._next_cmd_id, env.id + 1)
                    self.last_command[env.device] = env.id
                    continue
                env = self.envelopes.get(ev.get("id", -1))
                if env is None:
                    continue
                if etype == "command_dispatched":
                    env.state = DISPATCHED
                    env.dispatched_t = ev["t"]
                elif etype == "command_acked":
                    env.state = ACKED
                    env.acked_t = ev["t"]
                    env.ack_ok = ev.get("ok", True)
                elif etype == "command_completed":
                    env.state = COMPLETED
                    env.closed_t = ev["t"]
                    env.reason = ev.get("reason")
                elif etype == "command_expired":
                    env.state = EXPIRED
                    env.closed_t = ev["t"]
                    env.reason = "ack timeout"
            self._recount_envelopes()

    def _recount_envelopes(self) -> None:
        # caller holds the lock
        self._pending_count = sum(
            1 for e in self.envelopes.values() if e.state == PENDING)
        self._open_count = sum(
            1 for e in self.envelopes.values() if e.state not in TERMINAL_STATES)
