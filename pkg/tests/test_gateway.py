"""Gateway behavior: live table, dedupe, bounded history, sync, relay."""

from dataclasses import dataclass

from hypothesis import given, strategies as st

from agrolink.fieldnet import pack_frame
from agrolink.gateway import Gateway, LiveRow, ROW_FIELDS


def _gw(**kw):
    gw = Gateway(**kw)
    gw.register_sensor(3, "tank_level", test_period=600.0)
    return gw


def frame(seq, value=2.0, flags=0, node=3, kind="tank_level"):
    return pack_frame(node, kind, seq, value, flags)


# ---------------------------------------------------------------------------
# Uplink ingest
# ---------------------------------------------------------------------------

def test_good_frame_updates_live_row():
    gw = _gw()
    assert gw.receive(frame(0, 2.5, flags=1), t=10.0)
    row = gw.rows[3]
    assert row.seq == 0
    assert row.flags == 1
    assert row.last_update_t == 10.0
    assert abs(row.value - 2.5) < 1e-3
    assert gw.kind_values["tank_level"] == row.value
    assert gw.frames_ok == 1


def test_unregistered_node_rejected():
    gw = _gw()
    assert not gw.receive(frame(0, node=9), t=0.0)
    assert gw.frames_rejected == 1
    assert gw.frames_ok == 0


def test_kind_mismatch_rejected():
    # node 3 is registered as a tank sensor; a frame claiming another kind
    # under the same id must not poison the row
    gw = _gw()
    assert not gw.receive(frame(0, kind="humidity"), t=0.0)
    assert gw.frames_rejected == 1
    assert gw.rows[3].seq == -1


def test_corrupt_frame_rejected_and_counted():
    gw = _gw()
    data = bytearray(frame(0))
    data[6] ^= 0x40
    assert not gw.receive(bytes(data), t=0.0)
    assert gw.frames_rejected == 1
    assert not gw.history[3]


def test_duplicate_seq_dropped():
    gw = _gw()
    gw.receive(frame(7, 2.0), t=0.0)
    assert not gw.receive(frame(7, 3.0), t=1.0)
    assert gw.duplicates == 1
    assert abs(gw.rows[3].value - 2.0) < 1e-3
    assert len(gw.history[3]) == 1


def test_seq_advance_accepted_after_duplicate():
    gw = _gw()
    gw.receive(frame(7), t=0.0)
    gw.receive(frame(7), t=1.0)
    assert gw.receive(frame(8), t=2.0)
    assert gw.rows[3].seq == 8


def test_history_is_bounded_fifo():
    gw = _gw(history_len=5)
    for k in range(8):
        gw.receive(frame(k, float(k)), t=float(k))
    hist = list(gw.history[3])
    assert len(hist) == 5
    assert [e[3] for e in hist] == [3, 4, 5, 6, 7]


def test_history_entry_layout():
    gw = _gw()
    gw.receive(frame(2, 1.5, flags=5), t=42.0)
    t, value, flags, seq = gw.history[3][0]
    assert (t, flags, seq) == (42.0, 5, 2)
    assert abs(value - 1.5) < 1e-3


# ---------------------------------------------------------------------------
# Upstream sync
# ---------------------------------------------------------------------------

def test_sync_row_layout_matches_row_fields():
    gw = _gw()
    gw.receive(frame(0, 2.5), t=30.0)
    batch = gw.sync(t=35.0)
    assert len(batch.rows) == 1
    row = batch.rows[0]
    assert len(row) == len(ROW_FIELDS)
    rd = dict(zip(ROW_FIELDS, row))
    assert rd["node_id"] == 3
    assert rd["kind"] == "tank_level"
    assert rd["seq"] == 0
    assert rd["last_update_t"] == 30.0
    assert rd["test_age_s"] == 35.0


def test_sync_age_none_before_first_frame():
    gw = _gw()
    batch = gw.sync(t=50.0)
    assert dict(zip(ROW_FIELDS, batch.rows[0]))["test_age_s"] is None


def test_sync_age_wraps_at_test_period():
    gw = _gw()
    gw.receive(frame(0), t=10.0)
    age = dict(zip(ROW_FIELDS, gw.sync(t=1330.0).rows[0]))["test_age_s"]
    assert age == 1330.0 - 2 * 600.0


@given(st.floats(min_value=0.0, max_value=1e7))
def test_sync_age_agrees_with_live_row_method(t):
    gw = _gw()
    gw.receive(frame(0), t=0.0)
    age = dict(zip(ROW_FIELDS, gw.sync(t=t).rows[0]))["test_age_s"]
    assert age == gw.rows[3].test_age(t)
    assert 0.0 <= age <= max(t, 600.0)


def test_sync_ships_only_new_entries():
    gw = _gw()
    gw.receive(frame(0, 1.0), t=1.0)
    gw.receive(frame(1, 2.0), t=2.0)
    first = gw.sync(t=5.0)
    assert [e[3] for e in first.history_new[3]] == [0, 1]
    gw.receive(frame(2, 3.0), t=6.0)
    second = gw.sync(t=10.0)
    assert [e[3] for e in second.history_new[3]] == [2]


def test_sync_resends_nothing_when_idle():
    gw = _gw()
    gw.receive(frame(0), t=1.0)
    gw.sync(t=5.0)
    assert gw.sync(t=10.0).history_new == {}
    assert gw.sync(t=15.0).history_new == {}


def test_unsynced_backlog_is_bounded():
    gw = _gw(history_len=3)
    for k in range(6):
        gw.receive(frame(k, float(k)), t=float(k))
    batch = gw.sync(t=10.0)
    assert [e[3] for e in batch.history_new[3]] == [3, 4, 5]


def test_sync_carries_actuator_snapshot():
    gw = _gw()
    batch = gw.sync(t=0.0, actuators={"pump": True},
                    runtime_s={"pump": 12.0})
    assert batch.actuators == {"pump": True}
    assert batch.runtime_s == {"pump": 12.0}
    assert gw.sync(t=1.0).actuators == {}


# ---------------------------------------------------------------------------
# Downlink relay
# ---------------------------------------------------------------------------

@dataclass
class _Env:
    id: int


def test_relay_passes_each_envelope_once():
    gw = _gw()
    a, b = _Env(1), _Env(2)
    assert gw.relay_commands([a, b]) == [a, b]
    assert gw.relay_commands([a, b]) == []


def test_relay_filters_mixed_fresh_and_seen():
    gw = _gw()
    a, b, c = _Env(1), _Env(2), _Env(3)
    gw.relay_commands([a])
    assert gw.relay_commands([a, b, c]) == [b, c]


def test_relay_empty_list():
    assert _gw().relay_commands([]) == []


# ---------------------------------------------------------------------------
# Multi-node
# ---------------------------------------------------------------------------

def test_two_nodes_tracked_independently():
    gw = _gw()
    gw.register_sensor(7, "humidity", test_period=600.0)
    gw.receive(frame(0, 2.0), t=1.0)
    gw.receive(frame(4, 0.6, node=7, kind="humidity"), t=2.0)
    assert gw.rows[3].seq == 0
    assert gw.rows[7].seq == 4
    assert set(gw.kind_values) == {"tank_level", "humidity"}
    batch = gw.sync(t=5.0)
    assert {r[0] for r in batch.rows} == {3, 7}
    assert set(batch.history_new) == {3, 7}


def test_live_row_test_age_reference():
    row = LiveRow(node_id=1, kind="humidity", test_period=100.0)
    assert row.test_age(50.0) is None
    row.last_update_t = 10.0
    assert row.test_age(50.0) == 50.0
    assert row.test_age(250.0) == 50.0
    assert row.test_age(300.0) == 0.0
