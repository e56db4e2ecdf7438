"""Planning analysis: seasonal profile, crop fit, cost and payback.

These are the office-side calculations: what the climate model implies per
calendar month, which crops fit the measured soil and season, how a manual
season compares with an automated one in money terms, and when the capital
outlay pays itself back as savings compound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .envsim import DAY_S, EnvParams

MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_MONTH_DAYS = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


# ---------------------------------------------------------------------------
# Seasonal profile
# ---------------------------------------------------------------------------

def monthly_mean_temperature(params: EnvParams, month: int) -> float:
    """Exact mean of the deterministic temperature over calendar month
    `month` (0-based).  The diurnal term integrates to zero over whole days;
    the seasonal sinusoid integrates in closed form.
    """
    if not 0 <= month < 12:
        raise ValueError("month must be 0..11")
    start_day = sum(_MONTH_DAYS[:month])
    t0 = start_day * DAY_S
    t1 = (start_day + _MONTH_DAYS[month]) * DAY_S
    w = 2.0 * math.pi / params.year_length
    seasonal = (math.cos(w * t0) - math.cos(w * t1)) / (w * (t1 - t0))
    return params.t_mean + params.t_season_amp * seasonal


@dataclass(frozen=True)
class MonthRow:
    month: str
    mean_temp_c: float
    season: str   # "cool" | "mild" | "hot"


def seasonal_profile(params: EnvParams, hot_c: float = 24.0,
                     cool_c: float = 12.0) -> list[MonthRow]:
    rows = []
    for m in range(12):
        mean = monthly_mean_temperature(params, m)
        season = "hot" if mean >= hot_c else "cool" if mean < cool_c else "mild"
        rows.append(MonthRow(MONTHS[m], mean, season))
    return rows


# ---------------------------------------------------------------------------
# Crop suitability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Band:
    """Trapezoidal membership: 0 outside [lo, hi], 1 on [ideal_lo, ideal_hi],
    linear ramps between."""

    lo: float
    ideal_lo: float
    ideal_hi: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.ideal_lo <= self.ideal_hi <= self.hi:
            raise ValueError(f"band edges out of order: {self}")

    def score(self, x: float) -> float:
        if x < self.lo or x > self.hi:
            return 0.0
        if x < self.ideal_lo:
            return (x - self.lo) / (self.ideal_lo - self.lo)
        if x > self.ideal_hi:
            return (self.hi - x) / (self.hi - self.ideal_hi)
        return 1.0


@dataclass(frozen=True)
class CropSpec:
    name: str
    temperature: Band
    soil_ph: Band
    soil_moisture: Band


DEFAULT_CROPS = (
    CropSpec("rice",
             temperature=Band(18.0, 24.0, 32.0, 38.0),
             soil_ph=Band(5.0, 5.5, 7.0, 8.0),
             soil_moisture=Band(0.4, 0.6, 1.0, 1.0)),
    CropSpec("millet",
             temperature=Band(20.0, 26.0, 34.0, 42.0),
             soil_ph=Band(5.0, 6.0, 7.5, 8.5),
             soil_moisture=Band(0.1, 0.2, 0.5, 0.7)),
    CropSpec("potato",
             temperature=Band(7.0, 15.0, 21.0, 26.0),
             soil_ph=Band(4.8, 5.2, 6.5, 7.5),
             soil_moisture=Band(0.5, 0.6, 0.8, 0.95)),
)


def crop_score(crop: CropSpec, conditions: dict[str, float]) -> float:
    """Mean membership over the three scored dimensions, in [0, 1]."""
    dims = (
        crop.temperature.score(conditions["temperature"]),
        crop.soil_ph.score(conditions["soil_ph"]),
        crop.soil_moisture.score(conditions["soil_moisture"]),
    )
    return sum(dims) / len(dims)


def rank_crops(conditions: dict[str, float],
               crops: tuple[CropSpec, ...] = DEFAULT_CROPS) -> list[tuple[str, float]]:
    """Crops best-first; ties broken by name for a stable ordering."""
    scored = [(c.name, crop_score(c, conditions)) for c in crops]
    return sorted(scored, key=lambda p: (-p[1], p[0]))


# ---------------------------------------------------------------------------
# Season expenditure: manual vs automated
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpenditureParams:
    """Cost model for one cultivation season (default six months)."""

    manual_setup: float = 400.0     # field preparation with hired labor
    manual_monthly: float = 2000.0  # labor, diesel, losses
    auto_setup: float = 1000.0      # commissioning the installed platform
    auto_monthly: float = 1650.0    # power, upkeep, reduced labor
    months: int = 6


@dataclass(frozen=True)
class ExpenditureRow:
    month: int
    manual_cum: float
    auto_cum: float

    @property
    def saving(self) -> float:
        return self.manual_cum - self.auto_cum


def expenditure_comparison(params: ExpenditureParams | None = None) -> list[ExpenditureRow]:
    p = params or ExpenditureParams()
    rows = []
    for m in range(1, p.months + 1):
        rows.append(ExpenditureRow(
            month=m,
            manual_cum=p.manual_setup + p.manual_monthly * m,
            auto_cum=p.auto_setup + p.auto_monthly * m,
        ))
    return rows


# ---------------------------------------------------------------------------
# Payback
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FinanceParams:
    """Savings grow geometrically as operations tune themselves in."""

    investment: float = 10_000.0
    first_year_saving: float = 5_000.0
    growth: float = 1.105


def yearly_saving(params: FinanceParams, year: int) -> float:
    """Saving booked in calendar year `year` (1-based)."""
    if year < 1:
        raise ValueError("year is 1-based")
    return params.first_year_saving * params.growth ** (year - 1)


def cumulative_cash_flow(params: FinanceParams, year: int) -> float:
    """Net position after `year` years: savings to date minus investment."""
    if year < 0:
        raise ValueError("year must be >= 0")
    g = params.growth
    if g == 1.0:
        total = params.first_year_saving * year
    else:
        total = params.first_year_saving * (g ** year - 1.0) / (g - 1.0)
    return total - params.investment


def break_even_year(params: FinanceParams, horizon: int = 50) -> int | None:
    """First year the cumulative position is non-negative, None if never."""
    for y in range(1, horizon + 1):
        if cumulative_cash_flow(params, y) >= 0.0:
            return y
    return None


def cash_flow_rows(params: FinanceParams | None = None,
                   years: int = 10) -> list[dict]:
    p = params or FinanceParams()
    rows = []
    for y in range(1, years + 1):
        rows.append({
            "year": y,
            "saving": yearly_saving(p, y),
            "cumulative": cumulative_cash_flow(p, y),
            "multiple_of_investment": cumulative_cash_flow(p, y) / p.investment,
        })
    return rows
