"""Event log durability, atomic snapshots, crash recovery."""

import json

from agrolink.ctrlserver.core import ACKED, COMPLETED, ControlServer, EXPIRED
from agrolink.ctrlserver.persist import (
    EventLog, load_snapshot, recover, save_snapshot,
)
from agrolink.gateway import SyncBatch


def test_append_assigns_sequence_numbers(tmp_path):
    log = EventLog(tmp_path / "events.jsonl")
    assert log.append({"type": "a"}) == 1
    assert log.append({"type": "b"}) == 2
    records = log.read_all()
    log.close()
    assert [r["seq"] for r in records] == [1, 2]
    assert [r["type"] for r in records] == ["a", "b"]


def test_sequence_resumes_across_reopen(tmp_path):
    path = tmp_path / "events.jsonl"
    log = EventLog(path)
    log.append({"type": "a"})
    log.append({"type": "b"})
    log.close()
    log = EventLog(path)
    assert log.append({"type": "c"}) == 3
    log.close()


def test_read_after_filters_by_sequence(tmp_path):
    log = EventLog(tmp_path / "events.jsonl")
    for k in range(5):
        log.append({"k": k})
    assert [r["k"] for r in log.read_after(3)] == [3, 4]
    assert log.read_after(5) == []
    log.close()


def test_log_lines_are_json(tmp_path):
    path = tmp_path / "events.jsonl"
    log = EventLog(path)
    log.append({"type": "x", "value": 1.5})
    log.close()
    lines = path.read_text().strip().splitlines()
    assert json.loads(lines[0]) == {"seq": 1, "type": "x", "value": 1.5}


def test_snapshot_round_trip(tmp_path):
    path = tmp_path / "snap.json"
    save_snapshot(path, {"a": [1, 2], "b": "x"})
    assert load_snapshot(path) == {"a": [1, 2], "b": "x"}


def test_snapshot_write_leaves_no_temp_file(tmp_path):
    path = tmp_path / "snap.json"
    save_snapshot(path, {"a": 1})
    save_snapshot(path, {"a": 2})
    assert [p.name for p in tmp_path.iterdir()] == ["snap.json"]
    assert load_snapshot(path) == {"a": 2}


def test_load_missing_snapshot_returns_none(tmp_path):
    assert load_snapshot(tmp_path / "absent.json") is None


def test_recover_without_snapshot_is_noop(tmp_path, fake_clock):
    server = ControlServer(wall_clock=fake_clock)
    assert recover(server, tmp_path / "snap.json",
                   tmp_path / "events.jsonl") is False
    assert server.sim_time == 0.0


def _exercised_server(tmp_path, fake_clock):
    """Server with live state: rows, history, one command mid-flight."""
    log = EventLog(tmp_path / "events.jsonl")
    server = ControlServer(users={"admin": "pw"}, event_log=log,
                           wall_clock=fake_clock)
    server.apply_sync(SyncBatch(
        time=60.0,
        rows=[(3, "tank_level", 2.5, 0, 7, 55.0, 5.0)],
        history_new={3: [(30.0, 2.4, 0, 6), (55.0, 2.5, 0, 7)]},
        actuators={"lake_pump": True}, runtime_s={"lake_pump": 120.0}))
    done = server.issue_command("admin", "lake_pump", "ON", duration_s=30.0)
    server.fetch_pending(t=60.0)
    server.apply_field_events([
        {"type": "ack", "id": done.id, "t": 61.0},
        {"type": "completed", "id": done.id, "t": 91.0,
         "reason": "duration_elapsed"}])
    inflight = server.issue_command("admin", "fwgs_water_feed", "ON",
                                    duration_s=100.0)
    server.fetch_pending(t=95.0)
    return server, log, inflight


def _observable(server):
    return (server.sim_time, server.status_rows(), server.control_rows(),
            sorted((e["id"], e["state"]) for e in server.command_list()),
            server.history_for("tank_level"), server.field_state,
            server._next_cmd_id)


def test_snapshot_restore_preserves_observable_state(tmp_path, fake_clock):
    server, log, _ = _exercised_server(tmp_path, fake_clock)
    snap = server.snapshot()
    log.close()

    fresh = ControlServer(wall_clock=fake_clock)
    fresh.restore(snap)
    assert _observable(fresh) == _observable(server)


def test_restored_server_keeps_working(tmp_path, fake_clock):
    server, log, inflight = _exercised_server(tmp_path, fake_clock)
    snap = server.snapshot()
    log.close()

    fresh = ControlServer(wall_clock=fake_clock)
    fresh.restore(snap)
    # the in-flight command still expires and new ids continue the series
    fresh.expire_stale(95.0 + fresh.ack_timeout_s + 1.0)
    assert fresh.envelopes[inflight.id].state == EXPIRED
    nxt = fresh.issue_command("admin", "lake_pump", "OFF")
    assert nxt.id == inflight.id + 1
    assert [e.id for e in fresh.fetch_pending(t=300.0)] == [nxt.id]


def test_recover_replays_events_after_snapshot(tmp_path, fake_clock):
    server, log, inflight = _exercised_server(tmp_path, fake_clock)
    snap = server.snapshot()
    save_snapshot(tmp_path / "snap.json", snap)
    # lifecycle continues after the snapshot: ack lands, command completes
    server.apply_field_events([
        {"type": "ack", "id": inflight.id, "t": 96.0},
        {"type": "completed", "id": inflight.id, "t": 196.0,
         "reason": "duration_elapsed"}])
    late = server.issue_command("admin", "deep_well_pump", "ON",
                                duration_s=60.0)
    log.close()

    fresh = ControlServer(wall_clock=fake_clock)
    assert recover(fresh, tmp_path / "snap.json", tmp_path / "events.jsonl")
    assert fresh.envelopes[inflight.id].state == COMPLETED
    assert fresh.envelopes[inflight.id].reason == "duration_elapsed"
    assert fresh.envelopes[late.id].state == late.state
    assert fresh._next_cmd_id == late.id + 1
    # replayed pending work is visible to the dispatch path again
    assert [e.id for e in fresh.fetch_pending(t=200.0)] == [late.id]


def test_recover_is_idempotent(tmp_path, fake_clock):
    server, log, _ = _exercised_server(tmp_path, fake_clock)
    save_snapshot(tmp_path / "snap.json", server.snapshot())
    log.close()

    a = ControlServer(wall_clock=fake_clock)
    recover(a, tmp_path / "snap.json", tmp_path / "events.jsonl")
    b = ControlServer(wall_clock=fake_clock)
    recover(b, tmp_path / "snap.json", tmp_path / "events.jsonl")
    assert _observable(a) == _observable(b)


def test_replay_reconstructs_acked_state(tmp_path, fake_clock):
    # snapshot taken before the command existed: the log alone rebuilds it
    log = EventLog(tmp_path / "events.jsonl")
    server = ControlServer(users={"admin": "pw"}, event_log=log,
                           wall_clock=fake_clock)
    save_snapshot(tmp_path / "snap.json", server.snapshot())
    env = server.issue_command("admin", "lake_pump", "ON", duration_s=30.0)
    server.fetch_pending(t=10.0)
    server.apply_field_events([{"type": "ack", "id": env.id, "t": 11.0}])
    log.close()

    fresh = ControlServer(wall_clock=fake_clock)
    recover(fresh, tmp_path / "snap.json", tmp_path / "events.jsonl")
    rebuilt = fresh.envelopes[env.id]
    assert rebuilt.state == ACKED
    assert rebuilt.acked_t == 11.0
    assert rebuilt.device == "lake_pump"
