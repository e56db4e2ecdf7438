"""Transducer electronics: transfer functions, signal conditioning, ADC.

Every sensing channel is modeled as a physical transfer stage (capacitive
probe + astable + discriminator, thermistor bridge, windmill generator, or a
plain affine element), an analog conditioning stage that places the useful
band inside the ADC window, and a flash ADC.  All stages are pure functions
of their inputs so the same code serves the simulator, the calibration
inverse on the receive side, and the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Platform-wide sensor vocabulary.  The index of a kind in this tuple is its
# wire code, so the order is part of the frame protocol and must not change.
SENSOR_KINDS = (
    "temperature",
    "lake_level",
    "tank_level",
    "wind_speed",
    "soil_moisture",
    "soil_ph",
    "humidity",
    "fire_risk",
    "stream_flow",
    "light_level",
)
KIND_CODE = {name: i for i, name in enumerate(SENSOR_KINDS)}

# Conditioning places the engineering band on this fraction of the ADC
# window, leaving headroom so rail readings are unambiguous fault evidence.
_COND_LO_FRAC = 0.05
_COND_HI_FRAC = 0.95

# Default thermistor linearization network.  A parallel resistor alone cannot
# hold the bridge residual under 1 % of span for high-beta parts, so the
# default channel uses a low-beta element with numerically chosen resistors
# (residual 0.81 % of the [0, 50] C span against the least-squares line).
THERM_R0 = 10_000.0        # ohm at T0
THERM_T0_K = 298.15        # K
THERM_BETA = 2500.0        # K
THERM_R_PARALLEL = 21_248.0  # ohm, linearizing shunt
THERM_R_FIXED = 8_966.0      # ohm, bridge completion leg
THERM_VEX = 2.5              # V bridge excitation


# ---------------------------------------------------------------------------
# Elementary transfer functions
# ---------------------------------------------------------------------------

def capacitance_from_level(level: float, c0: float, eps_r: float, height: float) -> float:
    """Probe capacitance in farads for a liquid column of `level` meters."""
    frac = min(max(level / height, 0.0), 1.0)
    return c0 * (1.0 + (eps_r - 1.0) * frac)


def astable_frequency(cap: float, r1: float, r2: float) -> float:
    """555 astable output frequency in Hz for timing capacitor `cap`."""
    return 1.44 / ((r1 + 2.0 * r2) * cap)


def thermistor_resistance(t_kelvin: float, r0: float = THERM_R0,
                          t0_kelvin: float = THERM_T0_K,
                          beta: float = THERM_BETA) -> float:
    """NTC bead resistance in ohms at `t_kelvin` (beta model)."""
    return r0 * math.exp(beta * (1.0 / t_kelvin - 1.0 / t0_kelvin))


def windmill_volts(wind_speed: float, k_w: float, cutout: float) -> float:
    """DC output of the rotor generator; furling caps response at `cutout`."""
    ws = max(wind_speed, 0.0)
    return k_w * min(ws, cutout)


# ---------------------------------------------------------------------------
# ADC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdcSpec:
    bits: int = 12
    vfs: float = 5.0  # V full scale

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def lsb(self) -> float:
        return self.vfs / self.levels

    def encode(self, volts: float) -> int:
        """Quantize `volts` to a code in [0, 2^bits - 1]."""
        v = min(max(volts, 0.0), self.vfs)
        # grouped exactly like the channel hot path so both quantize alike
        code = int(v * (self.levels / self.vfs))
        return min(code, self.levels - 1)

    def decode(self, code: int) -> float:
        """Mid-tread reconstruction of a code back to volts."""
        if not 0 <= code < self.levels:
            raise ValueError(f"code {code} out of range for {self.bits}-bit ADC")
        return (code + 0.5) * (self.vfs / self.levels)


# ---------------------------------------------------------------------------
# Transfer stages (raw element output before conditioning)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineTransfer:
    """Pass-through element for sensors modeled directly in engineering units."""

    def raw(self, x: float) -> float:
        return x

    def inverse(self, r: float) -> float:
        return r


@dataclass(frozen=True)
class CapacitiveLevelTransfer:
    """Capacitive probe into a 555 astable and a frequency discriminator."""

    height: float            # m, probe length
    c0: float = 100e-12      # F, dry capacitance
    eps_r: float = 80.0      # relative permittivity of the liquid
    r1: float = 10_000.0     # ohm astable timing
    r2: float = 10_000.0     # ohm astable timing
    k_d: float = 1.0e-5      # V/Hz discriminator slope
    vfs: float = 5.0         # V discriminator rail

    def frequency(self, level: float) -> float:
        cap = capacitance_from_level(level, self.c0, self.eps_r, self.height)
        return astable_frequency(cap, self.r1, self.r2)

    @property
    def f0(self) -> float:
        # Empty-probe frequency; the discriminator reads downward from here.
        return astable_frequency(self.c0, self.r1, self.r2)

    def raw(self, level: float) -> float:
        v = self.k_d * (self.f0 - self.frequency(level))
        return min(max(v, 0.0), self.vfs)

    def inverse(self, r: float) -> float:
        freq = self.f0 - r / self.k_d
        cap = 1.44 / ((self.r1 + 2.0 * self.r2) * freq)
        frac = (cap / self.c0 - 1.0) / (self.eps_r - 1.0)
        return frac * self.height


@dataclass(frozen=True)
class ThermistorBridgeTransfer:
    """Shunt-linearized NTC in a half bridge, differential output."""

    r0: float = THERM_R0
    t0_kelvin: float = THERM_T0_K
    beta: float = THERM_BETA
    r_parallel: float = THERM_R_PARALLEL
    r_fixed: float = THERM_R_FIXED
    vex: float = THERM_VEX

    def effective_resistance(self, t_celsius: float) -> float:
        rt = thermistor_resistance(t_celsius + 273.15, self.r0,
                                   self.t0_kelvin, self.beta)
        return rt * self.r_parallel / (rt + self.r_parallel)

    def raw(self, t_celsius: float) -> float:
        reff = self.effective_resistance(t_celsius)
        return self.vex * (reff / (reff + self.r_fixed) - 0.5)

    def inverse(self, r: float) -> float:
        y = r / self.vex + 0.5
        reff = self.r_fixed * y / (1.0 - y)
        # Un-shunt, then invert the beta law.
        rt = reff * self.r_parallel / (self.r_parallel - reff)
        inv_t = 1.0 / self.t0_kelvin + math.log(rt / self.r0) / self.beta
        return 1.0 / inv_t - 273.15


@dataclass(frozen=True)
class WindmillTransfer:
    k_w: float = 0.1     # V per m/s
    cutout: float = 40.0  # m/s furling limit

    def raw(self, ws: float) -> float:
        return windmill_volts(ws, self.k_w, self.cutout)

    def inverse(self, r: float) -> float:
        return min(max(r, 0.0), self.k_w * self.cutout) / self.k_w


# ---------------------------------------------------------------------------
# Complete channel
# ---------------------------------------------------------------------------

@dataclass
class SensorChannel:
    """One calibrated sensing chain from physical quantity to ADC code and back.

    The conditioning affine is derived at build time so that the declared
    engineering band lands on the central portion of the ADC window, with the
    sign chosen to keep conditioned output non-decreasing in the measurand.
    """

    kind: str
    band: tuple[float, float]      # engineering units (lo, hi)
    transfer: object = field(default_factory=AffineTransfer)
    adc: AdcSpec = field(default_factory=AdcSpec)
    gain: float = field(init=False)
    offset: float = field(init=False)

    def __post_init__(self) -> None:
        lo, hi = self.band
        if not hi > lo:
            raise ValueError(f"band for {self.kind} must be increasing, got {self.band}")
        r_lo = self.transfer.raw(lo)
        r_hi = self.transfer.raw(hi)
        if r_hi == r_lo:
            raise ValueError(f"transfer for {self.kind} is flat over {self.band}")
        v_lo = _COND_LO_FRAC * self.adc.vfs
        v_hi = _COND_HI_FRAC * self.adc.vfs
        self.gain = (v_hi - v_lo) / (r_hi - r_lo)
        self.offset = v_lo - self.gain * r_lo
        self._raw_lo = min(r_lo, r_hi)
        self._raw_hi = max(r_lo, r_hi)
        # Hot-path constants: quantizer scale factors and an identity-transfer
        # fast path for the sensors modeled directly in engineering units.
        self._vfs = self.adc.vfs
        self._enc_k = self.adc.levels / self.adc.vfs
        self._dec_k = self.adc.vfs / self.adc.levels
        self._max_code = self.adc.levels - 1
        self._is_affine = type(self.transfer) is AffineTransfer

    def to_volts(self, x: float, noise: float = 0.0) -> float:
        """Conditioned output for measurand `x`, clamped to the ADC window."""
        raw = x if self._is_affine else self.transfer.raw(x)
        v = self.gain * raw + self.offset + noise
        return min(max(v, 0.0), self._vfs)

    def sample(self, x: float, noise: float = 0.0) -> int:
        return self.adc.encode(self.to_volts(x, noise))

    def to_engineering(self, code: int) -> float:
        """Receive-side calibration: ADC code back to engineering units."""
        raw = ((code + 0.5) * self._dec_k - self.offset) / self.gain
        if raw < self._raw_lo:
            raw = self._raw_lo
        elif raw > self._raw_hi:
            raw = self._raw_hi
        x = raw if self._is_affine else self.transfer.inverse(raw)
        lo, hi = self.band
        return lo if x < lo else hi if x > hi else x

    def quantized_engineering(self, volts: float) -> float:
        """Engineering value as seen through the ADC for a conditioned voltage."""
        code = int(volts * self._enc_k)
        if code > self._max_code:
            code = self._max_code
        return self.to_engineering(code)

    def measure(self, x: float, noise: float) -> float:
        """Full chain in one call: condition, quantize, calibrate back.

        Semantically identical to to_engineering(sample(x, noise)); kept as
        a single body because it runs millions of times per simulated year.
        """
        raw = x if self._is_affine else self.transfer.raw(x)
        v = self.gain * raw + self.offset + noise
        if v < 0.0:
            v = 0.0
        elif v > self._vfs:
            v = self._vfs
        code = int(v * self._enc_k)
        if code > self._max_code:
            code = self._max_code
        raw = ((code + 0.5) * self._dec_k - self.offset) / self.gain
        if raw < self._raw_lo:
            raw = self._raw_lo
        elif raw > self._raw_hi:
            raw = self._raw_hi
        x = raw if self._is_affine else self.transfer.inverse(raw)
        lo, hi = self.band
        return lo if x < lo else hi if x > hi else x

    def engineering_from_volts(self, volts: float) -> float:
        """Calibration applied to an unquantized conditioned voltage."""
        raw = (volts - self.offset) / self.gain
        raw = min(max(raw, self._raw_lo), self._raw_hi)
        x = self.transfer.inverse(raw)
        lo, hi = self.band
        return min(max(x, lo), hi)

    @property
    def span(self) -> float:
        lo, hi = self.band
        return hi - lo
