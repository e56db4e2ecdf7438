"""Base-station gateway: live table, bounded history, upstream sync, relay.

The gateway terminates the field radio links.  Good frames update a live
table (newest reading per sensor) and append to a bounded FIFO history.
Every sync period it ships the live table plus the history entries that
appeared since the previous sync to the control server, and relays pending
operator commands down to the field controller exactly once each.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .fieldnet import FrameError, parse_frame_fields
from .xducer import KIND_CODE

DEFAULT_HISTORY_LEN = 86_400
DEFAULT_SYNC_PERIOD = 5.0


@dataclass(slots=True)
class LiveRow:
    node_id: int
    kind: str
    kind_code: int = 0
    value: float = 0.0
    flags: int = 0
    seq: int = -1
    last_update_t: float | None = None
    test_period: float = 60.0

    def test_age(self, now: float) -> float | None:
        """Seconds since the node's last scheduled self test, None before
        any frame has arrived."""
        if self.last_update_t is None:
            return None
        if now < self.test_period:
            return now
        return now - (now // self.test_period) * self.test_period


ROW_FIELDS = ("node_id", "kind", "value", "flags", "seq",
              "last_update_t", "test_age_s")


@dataclass
class SyncBatch:
    """One upstream delta: full live snapshot plus history since last sync.

    Rows are tuples laid out per ROW_FIELDS; the sync runs every few seconds
    of sim time, so this stays deliberately allocation-light.
    """

    time: float
    rows: list[tuple]
    history_new: dict[int, list[tuple]]
    actuators: dict[str, bool] = field(default_factory=dict)
    runtime_s: dict[str, float] = field(default_factory=dict)


class Gateway:
    def __init__(self, history_len: int = DEFAULT_HISTORY_LEN,
                 sync_period: float = DEFAULT_SYNC_PERIOD) -> None:
        self.history_len = history_len
        self.sync_period = sync_period
        self.rows: dict[int, LiveRow] = {}
        self.history: dict[int, deque] = {}
        self.kind_values: dict[str, float] = {}  # latest reading per kind
        self._unsynced: dict[int, deque] = {}    # entries since last sync
        self._relayed_ids: set[int] = set()
        self.frames_ok = 0
        self.frames_rejected = 0
        self.duplicates = 0

    def register_sensor(self, node_id: int, kind: str, test_period: float) -> None:
        self.rows[node_id] = LiveRow(node_id=node_id, kind=kind,
                                     kind_code=KIND_CODE[kind],
                                     test_period=test_period)
        self.history[node_id] = deque(maxlen=self.history_len)
        # Bounded like the history: if syncs stall long enough, the oldest
        # unshipped entries fall off rather than growing without limit.
        self._unsynced[node_id] = deque(maxlen=self.history_len)

    # -- uplink -------------------------------------------------------------

    def receive(self, data: bytes, t: float) -> bool:
        """Ingest one frame; corrupt or unknown frames are counted and dropped."""
        try:
            node_id, kind_code, seq, value, flags = parse_frame_fields(data)
        except FrameError:
            self.frames_rejected += 1
            return False
        row = self.rows.get(node_id)
        if row is None or row.kind_code != kind_code:
            self.frames_rejected += 1
            return False
        if seq == row.seq:
            self.duplicates += 1
            return False
        self.frames_ok += 1
        row.value = value
        row.flags = flags
        row.seq = seq
        row.last_update_t = t
        self.kind_values[row.kind] = value
        entry = (t, value, flags, seq)
        self.history[node_id].append(entry)
        self._unsynced[node_id].append(entry)
        return True

    # -- upstream sync ------------------------------------------------------

    def sync(self, t: float, actuators: dict[str, bool] | None = None,
             runtime_s: dict[str, float] | None = None) -> SyncBatch:
        """Snapshot for the control server; repeat calls resend nothing."""
        rows = []
        new: dict[int, list[tuple]] = {}
        for node_id, row in self.rows.items():
            if row.last_update_t is None:
                age = None
            elif t < row.test_period:
                age = t
            else:
                age = t - (t // row.test_period) * row.test_period
            rows.append((node_id, row.kind, row.value, row.flags, row.seq,
                         row.last_update_t, age))
            pending = self._unsynced[node_id]
            if pending:
                new[node_id] = list(pending)
                pending.clear()
        return SyncBatch(time=t, rows=rows, history_new=new,
                         actuators=actuators or {},
                         runtime_s=runtime_s or {})

    # -- downlink relay -----------------------------------------------------

    def relay_commands(self, envelopes: list) -> list:
        """Filter already-relayed envelopes so the field sees each id once."""
        fresh = []
        for env in envelopes:
            if env.id not in self._relayed_ids:
                self._relayed_ids.add(env.id)
                fresh.append(env)
        return fresh
