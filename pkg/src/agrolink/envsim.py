"""Deterministic discrete-time model of the field site.

One `Environment.step()` advances every physical quantity by `dt` seconds
given the actuator states chosen by the controller.  Weather-like quantities
combine deterministic seasonal/diurnal terms with mean-reverting or event
noise; the water budget quantities integrate simple balance equations.

Water routing: the deep-well and lake pumps both fill the overhead tank and
the tank feeds the fertilizer/water sprayer that irrigates the field, so the
tank balance is exactly (pump inflow - sprayer outflow) * dt / area whenever
no clamp engages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

from .rng import substream

DAY_S = 86_400.0
YEAR_S = 365.0 * DAY_S


@dataclass(frozen=True)
class EnvParams:
    dt: float = 60.0                 # s per step
    day_length: float = DAY_S        # s
    year_length: float = YEAR_S      # s

    # Air temperature, deg C
    t_mean: float = 18.0
    t_season_amp: float = 10.0
    t_diurnal_amp: float = 6.0
    t_noise_sigma: float = 0.3       # deg C, AR(1) disturbance scale
    t_noise_tau: float = 7_200.0     # s relaxation

    # Soil moisture, volumetric fraction [0, 1]
    evap_coeff: float = 0.004        # fraction/day per deg C at saturation
    irrigation_rate: float = 5.0e-5  # fraction/s while the sprayer runs

    # Rain events
    rain_rate_per_day: float = 0.3
    rain_moisture_jump: float = 0.02  # fraction per event
    rain_lake_jump: float = 0.01      # m per event

    # Lake, m of depth
    lake_depth: float = 50.0
    lake_inflow: float = 2.0e-7      # m/s baseline stream recharge
    lake_evap: float = 2.0e-7        # m/s
    lake_pump_draw: float = 2.0e-6   # m/s of lake depth while lake pump on

    # Overhead tank
    tank_height: float = 4.0         # m
    tank_area: float = 20.0          # m^2
    pump_inflow_m3s: float = 0.02    # m^3/s delivered by either pump
    sprayer_outflow_m3s: float = 0.01  # m^3/s drawn by the sprayer

    # Wind, m/s (mean-reverting)
    wind_mean: float = 5.0
    wind_tau: float = 1_800.0
    wind_sigma: float = 1.2          # m/s per sqrt(tau)

    # Humidity, fraction (mean-reverting)
    humidity_mean: float = 0.6
    humidity_tau: float = 14_400.0
    humidity_sigma: float = 0.08

    # Soil pH random walk, reflected into [ph_lo, ph_hi]
    ph_sigma_day: float = 0.05
    ph_lo: float = 4.0
    ph_hi: float = 8.0

    # Stream flow, m^3/s (mean-reverting, non-negative)
    stream_mean: float = 0.7
    stream_tau: float = 7_200.0
    stream_sigma: float = 0.15

    # Light, normalized [0, 1]
    light_noise_sigma: float = 0.02

    # Fire risk index [0, 1]: dryness-modulated jumps with exponential decay
    fire_rate_per_day: float = 0.05  # events/day at zero humidity
    fire_jump: float = 0.3
    fire_tau: float = 21_600.0       # s decay


@dataclass
class EnvState:
    time_s: float = 0.0
    temperature_c: float = 18.0
    soil_moisture: float = 0.5
    lake_level_m: float = 40.0
    tank_level_m: float = 2.5
    wind_speed_ms: float = 5.0
    soil_ph: float = 5.0
    humidity: float = 0.6
    fire_risk: float = 0.2
    stream_flow_m3s: float = 0.7
    light_level: float = 0.3

    _FIELD_BY_KIND = {
        "temperature": "temperature_c",
        "lake_level": "lake_level_m",
        "tank_level": "tank_level_m",
        "wind_speed": "wind_speed_ms",
        "soil_moisture": "soil_moisture",
        "soil_ph": "soil_ph",
        "humidity": "humidity",
        "fire_risk": "fire_risk",
        "stream_flow": "stream_flow_m3s",
        "light_level": "light_level",
    }

    def value_for(self, kind: str) -> float:
        return getattr(self, self._FIELD_BY_KIND[kind])


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


class Environment:
    """Field-site state machine; `step()` is the only mutator."""

    def __init__(self, params: EnvParams | None = None,
                 initial: EnvState | None = None, seed: int = 0,
                 frozen: bool = False) -> None:
        self.params = params or EnvParams()
        self.state = replace(initial) if initial else EnvState()
        self.frozen = frozen  # hold every quantity constant (bench scenarios)
        p = self.params
        self._temp_noise = 0.0
        self._rng_temp = substream(seed, "env.temperature")
        self._rng_rain = substream(seed, "env.rain")
        self._rng_wind = substream(seed, "env.wind")
        self._rng_hum = substream(seed, "env.humidity")
        self._rng_ph = substream(seed, "env.ph")
        self._rng_stream = substream(seed, "env.stream")
        self._rng_light = substream(seed, "env.light")
        self._rng_fire = substream(seed, "env.fire")
        # Precompute per-step constants for the hot loop.
        self._two_pi_year = 2.0 * math.pi / p.year_length
        self._two_pi_day = 2.0 * math.pi / p.day_length
        self._fire_decay = math.exp(-p.dt / p.fire_tau)
        self._ph_step = p.ph_sigma_day * math.sqrt(p.dt / DAY_S)

    def base_temperature(self, t: float) -> float:
        """Deterministic seasonal + diurnal temperature component at time t."""
        p = self.params
        return (p.t_mean
                + p.t_season_amp * math.sin(self._two_pi_year * t)
                + p.t_diurnal_amp * math.sin(self._two_pi_day * t))

    def step(self, actuators: Mapping[str, bool] | None = None) -> EnvState:
        """Advance the site by dt under the given actuator states."""
        s = self.state
        p = self.params
        dt = p.dt
        if self.frozen:
            s.time_s += dt
            return s
        act = actuators or {}
        t_next = s.time_s + dt

        # Temperature: sinusoids plus an AR(1) disturbance.
        if p.t_noise_sigma > 0.0:
            self._temp_noise += (-self._temp_noise * dt / p.t_noise_tau
                                 + p.t_noise_sigma * math.sqrt(dt / p.t_noise_tau)
                                 * self._rng_temp.gauss(0.0, 1.0))
        s.temperature_c = self.base_temperature(t_next) + self._temp_noise

        # Rain: at most one event per step at these rates.
        rain = False
        if p.rain_rate_per_day > 0.0:
            rain = self._rng_rain.random() < p.rain_rate_per_day * dt / DAY_S

        # Soil moisture balance; the sprayer only wets soil while the tank
        # still holds water.
        dm = 0.0
        spraying = bool(act.get("fwgs_water_feed")) and s.tank_level_m > 0.0
        if spraying:
            dm += p.irrigation_rate * dt
        dm -= p.evap_coeff * max(s.temperature_c, 0.0) * s.soil_moisture * dt / DAY_S
        if rain:
            dm += p.rain_moisture_jump
        s.soil_moisture = _clamp(s.soil_moisture + dm, 0.0, 1.0)

        # Lake level.
        dl = (p.lake_inflow - p.lake_evap) * dt
        if act.get("lake_pump"):
            dl -= p.lake_pump_draw * dt
        if rain:
            dl += p.rain_lake_jump
        s.lake_level_m = _clamp(s.lake_level_m + dl, 0.0, p.lake_depth)

        # Overhead tank: exact balance while unclamped.
        inflow = p.pump_inflow_m3s if (act.get("deep_well_pump") or act.get("lake_pump")) else 0.0
        outflow = p.sprayer_outflow_m3s if spraying else 0.0
        s.tank_level_m = _clamp(
            s.tank_level_m + (inflow - outflow) * dt / p.tank_area,
            0.0, p.tank_height)

        # Wind: mean-reverting, floored at zero.
        if p.wind_sigma > 0.0:
            s.wind_speed_ms += ((p.wind_mean - s.wind_speed_ms) * dt / p.wind_tau
                                + p.wind_sigma * math.sqrt(dt / p.wind_tau)
                                * self._rng_wind.gauss(0.0, 1.0))
            s.wind_speed_ms = max(s.wind_speed_ms, 0.0)

        # Humidity: mean-reverting inside [0, 1].
        if p.humidity_sigma > 0.0:
            s.humidity += ((p.humidity_mean - s.humidity) * dt / p.humidity_tau
                           + p.humidity_sigma * math.sqrt(dt / p.humidity_tau)
                           * self._rng_hum.gauss(0.0, 1.0))
            s.humidity = _clamp(s.humidity, 0.0, 1.0)

        # Soil pH: slow reflected random walk.
        if p.ph_sigma_day > 0.0:
            ph = s.soil_ph + self._ph_step * self._rng_ph.gauss(0.0, 1.0)
            if ph < p.ph_lo:
                ph = 2.0 * p.ph_lo - ph
            elif ph > p.ph_hi:
                ph = 2.0 * p.ph_hi - ph
            s.soil_ph = _clamp(ph, 0.0, 14.0)

        # Stream flow: mean-reverting, non-negative.
        if p.stream_sigma > 0.0:
            s.stream_flow_m3s += ((p.stream_mean - s.stream_flow_m3s) * dt / p.stream_tau
                                  + p.stream_sigma * math.sqrt(dt / p.stream_tau)
                                  * self._rng_stream.gauss(0.0, 1.0))
            s.stream_flow_m3s = max(s.stream_flow_m3s, 0.0)

        # Light: clipped diurnal sine with measurement-scale jitter.
        light = max(math.sin(self._two_pi_day * t_next), 0.0)
        if p.light_noise_sigma > 0.0:
            light += p.light_noise_sigma * self._rng_light.gauss(0.0, 1.0)
        s.light_level = _clamp(light, 0.0, 1.0)

        # Fire risk: decay plus dryness-weighted ignition events.
        risk = s.fire_risk * self._fire_decay
        if p.fire_rate_per_day > 0.0:
            rate = p.fire_rate_per_day * (1.0 - s.humidity)
            if self._rng_fire.random() < rate * dt / DAY_S:
                risk += p.fire_jump
        s.fire_risk = _clamp(risk, 0.0, 1.0)

        s.time_s = t_next
        return s
