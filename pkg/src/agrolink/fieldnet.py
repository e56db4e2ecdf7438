"""Sensor-node runtime: framing, lossy radio link, duplicated transducers.

Each node carries a primary and a standby transducer for one quantity.  A
periodic self test compares both units against the live reading; a failing
primary is switched out on the spot, and once both units have failed a test
the node demands replacement and stops tallying.  Readings travel to the
base station as fixed 12-byte frames protected by CRC-16/CCITT-FALSE over a
binary-symmetric channel with optional latency.
"""

from __future__ import annotations

import binascii
import math
import struct
from dataclasses import dataclass

from .rng import substream
from .xducer import KIND_CODE, SENSOR_KINDS, SensorChannel

SYNC_BYTE = 0xA5
FRAME_LEN = 12
FRAME_BITS = FRAME_LEN * 8

FLAG_STANDBY = 0x01       # bit0: standby unit is the active one
FLAG_TEST_ERROR = 0x02    # bit1: last self test failed
FLAG_REPLACE = 0x04       # bit2: both units condemned

STATUS_OK = "ok"
STATUS_ERROR = "error"
STATUS_REPLACE = "needs_replacement"

_PACK = struct.Struct(">BBBHfB")   # sync, node, kind, seq, value, flags
_CRC = struct.Struct(">H")


def crc16_ccitt_false(data: bytes) -> int:
    """CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, xorout 0.

    binascii.crc_hqx implements exactly this polynomial and bit order, so the
    hot path runs in C.
    """
    return binascii.crc_hqx(data, 0xFFFF)


class FrameError(ValueError):
    """Raised when a byte string is not a valid frame."""


@dataclass(frozen=True)
class Frame:
    node_id: int
    kind: str
    seq: int
    value: float
    flags: int

    @property
    def standby_active(self) -> bool:
        return bool(self.flags & FLAG_STANDBY)

    @property
    def test_error(self) -> bool:
        return bool(self.flags & FLAG_TEST_ERROR)

    @property
    def needs_replacement(self) -> bool:
        return bool(self.flags & FLAG_REPLACE)


def pack_frame(node_id: int, kind: str, seq: int, value: float, flags: int) -> bytes:
    """Serialize one reading; seq wraps modulo 2^16."""
    body = _PACK.pack(SYNC_BYTE, node_id & 0xFF, KIND_CODE[kind],
                      seq & 0xFFFF, value, flags & 0xFF)
    return body + _CRC.pack(crc16_ccitt_false(body[1:10]))


def parse_frame_fields(data: bytes) -> tuple[int, int, int, float, int]:
    """Validate a frame and return (node_id, kind_code, seq, value, flags).

    This is the allocation-light form the gateway uses; FrameError carries
    the reason for any defect.
    """
    if len(data) != FRAME_LEN:
        raise FrameError(f"bad length {len(data)}")
    if data[0] != SYNC_BYTE:
        raise FrameError(f"bad sync byte 0x{data[0]:02X}")
    if binascii.crc_hqx(data[1:10], 0xFFFF) != (data[10] << 8) | data[11]:
        raise FrameError("crc mismatch")
    _, node_id, kind_code, seq, value, flags = _PACK.unpack_from(data)
    if kind_code >= len(SENSOR_KINDS):
        raise FrameError(f"unknown sensor kind {kind_code}")
    return node_id, kind_code, seq, value, flags


def parse_frame(data: bytes) -> Frame:
    """Validate and decode a frame; raises FrameError on any defect."""
    node_id, kind_code, seq, value, flags = parse_frame_fields(data)
    return Frame(node_id, SENSOR_KINDS[kind_code], seq, value, flags)


# ---------------------------------------------------------------------------
# Binary-symmetric channel
# ---------------------------------------------------------------------------

def bit_error_rate_from_ebn0(ebn0_db: float) -> float:
    """Coherent BPSK bit error probability for the given Eb/N0 in dB."""
    gamma = 10.0 ** (ebn0_db / 10.0)
    return 0.5 * math.erfc(math.sqrt(gamma))


class BitChannel:
    """Drops whole frames with p_drop and flips bits i.i.d. with p_bit.

    Bit flips are drawn as a binomial count via a cached inverse CDF, then
    placed uniformly, which keeps the hot loop at O(1) draws per frame.
    """

    def __init__(self, p_drop: float = 0.0, p_bit: float = 0.0,
                 latency_s: float = 0.0, seed: int = 0, name: str = "link") -> None:
        if not 0.0 <= p_drop <= 1.0 or not 0.0 <= p_bit <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        self.p_drop = p_drop
        self.p_bit = p_bit
        self.latency_s = latency_s
        self.rng = substream(seed, f"channel.{name}")
        self._rand = self.rng.random
        self._bit_cdf: list[float] = []
        if p_bit > 0.0:
            # Binomial(FRAME_BITS, p_bit) CDF, truncated where it saturates.
            q = (1.0 - p_bit) ** FRAME_BITS
            cum = q
            self._bit_cdf.append(cum)
            k = 0
            while cum < 1.0 - 1e-15 and k < FRAME_BITS:
                q *= (FRAME_BITS - k) / (k + 1) * p_bit / (1.0 - p_bit)
                k += 1
                cum += q
                self._bit_cdf.append(cum)

    @classmethod
    def from_ebn0(cls, ebn0_db: float, **kwargs) -> "BitChannel":
        return cls(p_bit=bit_error_rate_from_ebn0(ebn0_db), **kwargs)

    def _flip_count(self) -> int:
        u = self._rand()
        for k, c in enumerate(self._bit_cdf):
            if u <= c:
                return k
        return len(self._bit_cdf)

    def transmit(self, data: bytes, t: float) -> tuple[float, bytes] | None:
        """Channel outcome for one frame: (delivery time, payload) or None."""
        if self.p_drop > 0.0 and self._rand() < self.p_drop:
            return None
        if self.p_bit > 0.0:
            k = self._flip_count()
            if k:
                buf = bytearray(data)
                nbits = len(data) * 8
                for pos in self.rng.sample(range(nbits), min(k, nbits)):
                    buf[pos >> 3] ^= 0x80 >> (pos & 7)
                data = bytes(buf)
        return (t + self.latency_s, data)


# ---------------------------------------------------------------------------
# Transducer units and nodes
# ---------------------------------------------------------------------------

FAULT_STUCK = "stuck"   # output frozen at the value when the fault hit
FAULT_OPEN = "open"     # broken element, conditioned output at the rail


@dataclass
class SensorUnit:
    """One physical transducer chain; faults distort its analog output."""

    channel: SensorChannel
    fault: str | None = None
    held_volts: float = 0.0

    def inject_fault(self, kind: str, truth: float) -> None:
        if kind not in (FAULT_STUCK, FAULT_OPEN):
            raise ValueError(f"unknown fault {kind!r}")
        if kind == FAULT_STUCK:
            self.held_volts = self.channel.to_volts(truth)
        self.fault = kind

    def read_volts(self, truth: float, noise: float) -> float:
        if self.fault == FAULT_OPEN:
            return self.channel.adc.vfs
        if self.fault == FAULT_STUCK:
            return self.held_volts
        return self.channel.to_volts(truth, noise)


class SensorNode:
    """Duplex sensing node with periodic self test and automatic failover.

    Failover rule, applied at every self test until the node is condemned:
    a failing active unit triggers a switch to the standby unless the other
    unit has also failed at least once, in which case the node goes to
    needs_replacement (absorbing).  A failing inactive unit only raises the
    error status.  Status recovers to ok as soon as every tested unit passes.
    """

    # Default rms noise of the conditioned analog front end, in volts.
    # The level channels compress hard near the top of their range (the
    # oscillator slope collapses), so the 2 % self-test threshold is only a
    # few LSB of headroom there; 0.2 LSB rms keeps false trips negligible
    # even over multi-year runs.
    DEFAULT_NOISE_SIGMA = 0.00025

    def __init__(self, node_id: int, kind: str, channel: SensorChannel, *,
                 dt: float, sample_period: float, test_period: float,
                 epsilon_frac: float = 0.02,
                 noise_sigma: float = DEFAULT_NOISE_SIGMA,
                 seed: int = 0) -> None:
        if not 0 <= node_id <= 0xFF:
            raise ValueError(f"node_id {node_id} does not fit one byte")
        self.node_id = node_id
        self.kind = kind
        self.channel = channel
        self.primary = SensorUnit(channel)
        self.standby = SensorUnit(channel)
        self.sample_every = _period_steps("sample_period", sample_period, dt)
        self.test_every = _period_steps("test_period", test_period, dt)
        self.test_period = test_period
        self.epsilon = epsilon_frac * channel.span
        self.noise_sigma = noise_sigma
        self._rng = substream(seed, f"node.{node_id}.noise")
        self._gauss = self._rng.gauss
        self._step = 0
        self.seq = 0
        self.active = "primary"
        self.status = STATUS_OK
        self.connected_only = False   # primary decommissioned by operator
        self._ever_failed = {"primary": False, "standby": False}
        self._kind_code = KIND_CODE[kind]
        self._flags = 0

    # -- unit helpers -------------------------------------------------------

    def _unit(self, name: str) -> SensorUnit:
        return self.primary if name == "primary" else self.standby

    def _noise(self) -> float:
        if self.noise_sigma == 0.0:
            return 0.0
        return self._gauss(0.0, self.noise_sigma)

    def _unit_reading(self, name: str, truth: float) -> float:
        unit = self.primary if name == "primary" else self.standby
        if unit.fault is None:
            return self.channel.measure(truth, self._noise())
        volts = unit.read_volts(truth, self._noise())
        return self.channel.quantized_engineering(volts)

    def inject_fault(self, unit: str, fault: str, truth: float) -> None:
        self._unit(unit).inject_fault(fault, truth)

    def connect_standby(self) -> bool:
        """Operator action: retire the primary and run on the standby alone."""
        self.active = "standby"
        self.connected_only = True
        self._flags = self.flags
        return True

    # -- self test ----------------------------------------------------------

    def run_self_test(self, truth: float) -> None:
        if self.status == STATUS_REPLACE:
            return
        tested = ["standby"] if self.connected_only else ["primary", "standby"]
        failed_now = {}
        for name in tested:
            bad = abs(self._unit_reading(name, truth) - truth) > self.epsilon
            failed_now[name] = bad
            if bad:
                self._ever_failed[name] = True
        other = "standby" if self.active == "primary" else "primary"
        if failed_now.get(self.active, False):
            if self.connected_only or self._ever_failed[other]:
                self.status = STATUS_REPLACE
                self.active = "standby"
            else:
                self.active = "standby"
                self.status = STATUS_ERROR
        else:
            self.status = STATUS_ERROR if failed_now.get(other, False) else STATUS_OK
        self._flags = self.flags

    def apply_test_outcome(self, primary_bad: bool, standby_bad: bool) -> None:
        """Drive one self-test round from given pass/fail outcomes directly."""
        if self.status == STATUS_REPLACE:
            return
        if primary_bad and not self.connected_only:
            self._ever_failed["primary"] = True
        if standby_bad:
            self._ever_failed["standby"] = True
        active_bad = standby_bad if self.active == "standby" else primary_bad
        other = "standby" if self.active == "primary" else "primary"
        other_bad = standby_bad if other == "standby" else primary_bad
        if active_bad:
            if self.connected_only or self._ever_failed[other]:
                self.status = STATUS_REPLACE
                self.active = "standby"
            else:
                self.active = "standby"
                self.status = STATUS_ERROR
        else:
            if not self.connected_only and other_bad:
                self.status = STATUS_ERROR
            else:
                self.status = STATUS_OK
        self._flags = self.flags

    # -- frame emission -----------------------------------------------------

    @property
    def flags(self) -> int:
        f = 0
        if self.active == "standby":
            f |= FLAG_STANDBY
        if self.status == STATUS_ERROR:
            f |= FLAG_TEST_ERROR
        if self.status == STATUS_REPLACE:
            f |= FLAG_REPLACE
        return f

    def step(self, truth: float) -> bytes | None:
        """One simulation step: self test on schedule, then sample and frame."""
        self._step += 1
        if self._step % self.test_every == 0:
            self.run_self_test(truth)
        if self._step % self.sample_every == 0:
            unit = self.primary if self.active == "primary" else self.standby
            sig = self.noise_sigma
            noise = self._gauss(0.0, sig) if sig else 0.0
            if unit.fault is None:
                reading = self.channel.measure(truth, noise)
            else:
                reading = self.channel.quantized_engineering(
                    unit.read_volts(truth, noise))
            body = _PACK.pack(SYNC_BYTE, self.node_id, self._kind_code,
                              self.seq, reading, self._flags)
            self.seq = (self.seq + 1) & 0xFFFF
            return body + _CRC.pack(binascii.crc_hqx(body[1:10], 0xFFFF))
        return None


def _period_steps(name: str, period: float, dt: float) -> int:
    steps = period / dt
    n = round(steps)
    if n < 1 or abs(steps - n) > 1e-9:
        raise ValueError(f"{name}={period} must be a positive multiple of dt={dt}")
    return n
