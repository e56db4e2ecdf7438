"""Durability for the control server: JSONL event log and state snapshots.

The event log is append-only; every record carries a monotonically
increasing sequence number.  Snapshots capture the full server state along
with the sequence reached, so recovery is: load the latest snapshot, then
replay logged events with a higher sequence.  Reading history older than
the snapshot horizon is not reconstructed; the bounded history buffers are
persisted inside the snapshot itself.
"""

from __future__ import annotations

import json
import os
from pathlib import Path


class EventLog:
    def __init__(self, path: str | os.PathLike) -> None:
        self.path = Path(path)
        self.seq = 0
        if self.path.exists():
            # Resume numbering after the last durable record.
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self.seq = json.loads(line).get("seq", self.seq)
        self._fh = self.path.open("a", encoding="utf-8")

    def append(self, record: dict) -> int:
        self.seq += 1
        record = {"seq": self.seq, **record}
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fh.flush()
        return self.seq

    def read_all(self) -> list[dict]:
        self._fh.flush()
        out = []
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def read_after(self, seq: int) -> list[dict]:
        return [r for r in self.read_all() if r.get("seq", 0) > seq]

    def close(self) -> None:
        self._fh.close()


def save_snapshot(path: str | os.PathLike, snap: dict) -> None:
    """Atomic snapshot write (tmp file + rename)."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        json.dump(snap, fh, separators=(",", ":"))
    tmp.replace(path)


def load_snapshot(path: str | os.PathLike) -> dict | None:
    path = Path(path)
    if not path.exists():
        return None
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def recover(server, snapshot_path, log_path) -> bool:
    """Rebuild `server` from the latest snapshot plus newer logged events.

    Returns True when a snapshot was found and applied.
    """
    snap = load_snapshot(snapshot_path)
    if snap is None:
        return False
    server.restore(snap)
    log = EventLog(log_path)
    try:
        server.replay_events(log.read_after(snap.get("event_seq", 0)))
    finally:
        log.close()
    return True
