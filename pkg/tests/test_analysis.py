"""Planning analysis: monthly climate, crop fit, costs, payback."""

import math

import pytest
from hypothesis import given, strategies as st

from agrolink.analysis import (
    Band, CropSpec, DEFAULT_CROPS, ExpenditureParams, FinanceParams, MONTHS,
    break_even_year, cash_flow_rows, crop_score, cumulative_cash_flow,
    expenditure_comparison, monthly_mean_temperature, rank_crops,
    seasonal_profile, yearly_saving,
)
from agrolink.envsim import DAY_S, EnvParams

P = EnvParams()
MONTH_DAYS = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


# ---------------------------------------------------------------------------
# Monthly temperature means
# ---------------------------------------------------------------------------

def test_monthly_means_match_frozen_values():
    assert monthly_mean_temperature(P, 0) == pytest.approx(20.605480866,
                                                           abs=1e-6)
    assert monthly_mean_temperature(P, 3) == pytest.approx(27.613516500,
                                                           abs=1e-6)
    assert monthly_mean_temperature(P, 6) == pytest.approx(15.641491427,
                                                           abs=1e-6)


@pytest.mark.parametrize("month", range(12))
def test_closed_form_agrees_with_midpoint_rule(month):
    start = sum(MONTH_DAYS[:month]) * DAY_S
    end = start + MONTH_DAYS[month] * DAY_S
    steps = int((end - start) / 3600.0)
    acc = 0.0
    for i in range(steps):
        t = start + (i + 0.5) * 3600.0
        acc += (P.t_mean
                + P.t_season_amp * math.sin(2 * math.pi * t / P.year_length)
                + P.t_diurnal_amp * math.sin(2 * math.pi * t / P.day_length))
    assert monthly_mean_temperature(P, month) == pytest.approx(
        acc / steps, abs=1e-3)


def test_day_weighted_mean_of_months_is_annual_mean():
    total = sum(monthly_mean_temperature(P, m) * MONTH_DAYS[m]
                for m in range(12))
    assert total / 365.0 == pytest.approx(P.t_mean, abs=1e-9)


def test_month_index_bounds():
    for month in (-1, 12):
        with pytest.raises(ValueError):
            monthly_mean_temperature(P, month)


def test_seasonal_profile_labels():
    rows = seasonal_profile(P)
    assert [r.month for r in rows] == list(MONTHS)
    by_month = {r.month: r for r in rows}
    assert by_month["Apr"].season == "hot"       # mean 27.6
    assert by_month["Jul"].season == "mild"      # mean 15.6
    for r in rows:
        expected = ("hot" if r.mean_temp_c >= 24.0
                    else "cool" if r.mean_temp_c < 12.0 else "mild")
        assert r.season == expected


def test_seasonal_profile_custom_thresholds():
    rows = seasonal_profile(P, hot_c=100.0, cool_c=50.0)
    assert all(r.season == "cool" for r in rows)


# ---------------------------------------------------------------------------
# Suitability bands
# ---------------------------------------------------------------------------

def test_band_shape():
    b = Band(10.0, 20.0, 30.0, 40.0)
    assert b.score(9.9) == 0.0
    assert b.score(10.0) == 0.0
    assert b.score(15.0) == 0.5
    assert b.score(20.0) == 1.0
    assert b.score(25.0) == 1.0
    assert b.score(30.0) == 1.0
    assert b.score(35.0) == 0.5
    assert b.score(40.0) == 0.0
    assert b.score(40.1) == 0.0


def test_band_with_degenerate_top_edge():
    b = Band(0.4, 0.6, 1.0, 1.0)
    assert b.score(1.0) == 1.0
    assert b.score(1.0001) == 0.0


def test_band_rejects_unordered_edges():
    with pytest.raises(ValueError):
        Band(10.0, 5.0, 30.0, 40.0)
    with pytest.raises(ValueError):
        Band(10.0, 20.0, 19.0, 40.0)


@given(st.floats(min_value=-1e3, max_value=1e3),
       st.lists(st.floats(min_value=-500, max_value=500), min_size=4,
                max_size=4))
def test_band_score_always_in_unit_interval(x, edges):
    lo, ilo, ihi, hi = sorted(edges)
    if not lo < ilo <= ihi < hi:    # avoid zero-width ramps
        return
    assert 0.0 <= Band(lo, ilo, ihi, hi).score(x) <= 1.0


# ---------------------------------------------------------------------------
# Crop ranking
# ---------------------------------------------------------------------------

COND = {"temperature": 26.0, "soil_ph": 5.8, "soil_moisture": 0.55}


def test_crop_scores_match_frozen_values():
    by_name = {c.name: c for c in DEFAULT_CROPS}
    assert crop_score(by_name["rice"], COND) == pytest.approx(
        0.9166666666666669, abs=1e-12)
    assert crop_score(by_name["millet"], COND) == pytest.approx(
        0.8499999999999998, abs=1e-12)
    assert crop_score(by_name["potato"], COND) == pytest.approx(
        0.5000000000000001, abs=1e-12)


def test_rank_orders_best_first():
    assert [name for name, _ in rank_crops(COND)] == [
        "rice", "millet", "potato"]


def test_rank_breaks_ties_by_name():
    b = Band(0.0, 0.0, 1.0, 1.0)
    twins = (CropSpec("zeta", b, b, b), CropSpec("alpha", b, b, b))
    cond = {"temperature": 0.5, "soil_ph": 0.5, "soil_moisture": 0.5}
    assert [name for name, _ in rank_crops(cond, twins)] == ["alpha", "zeta"]


# ---------------------------------------------------------------------------
# Season expenditure
# ---------------------------------------------------------------------------

def test_expenditure_frozen_table():
    rows = {r.month: r for r in expenditure_comparison()}
    assert len(rows) == 6
    assert (rows[1].manual_cum, rows[1].auto_cum) == (2400.0, 2650.0)
    assert (rows[3].manual_cum, rows[3].auto_cum) == (6400.0, 5950.0)
    assert (rows[6].manual_cum, rows[6].auto_cum) == (12400.0, 10900.0)


def test_expenditure_crossover_in_second_month():
    # the automated season starts more expensive and wins from month two
    rows = expenditure_comparison()
    assert rows[0].saving == -250.0
    assert rows[1].saving == 100.0
    assert all(r.saving > 0 for r in rows[1:])
    assert rows[-1].saving == 1500.0


def test_expenditure_respects_params():
    rows = expenditure_comparison(ExpenditureParams(
        manual_setup=0.0, manual_monthly=10.0,
        auto_setup=5.0, auto_monthly=1.0, months=2))
    assert [(r.manual_cum, r.auto_cum) for r in rows] == [
        (10.0, 6.0), (20.0, 7.0)]


# ---------------------------------------------------------------------------
# Payback
# ---------------------------------------------------------------------------

F = FinanceParams()


def test_cash_flow_frozen_values():
    assert cumulative_cash_flow(F, 0) == -10_000.0
    assert cumulative_cash_flow(F, 1) == pytest.approx(-5000.0, abs=1e-9)
    assert cumulative_cash_flow(F, 2) == pytest.approx(525.0, abs=1e-9)
    assert cumulative_cash_flow(F, 3) == pytest.approx(6630.125, abs=1e-9)
    assert cumulative_cash_flow(F, 5) == pytest.approx(20830.798378, abs=1e-5)
    assert cumulative_cash_flow(F, 10) == pytest.approx(71622.897458,
                                                        abs=1e-5)


def test_closed_form_equals_explicit_sum():
    for year in range(0, 15):
        total = sum(yearly_saving(F, y) for y in range(1, year + 1))
        assert cumulative_cash_flow(F, year) == pytest.approx(
            total - F.investment, rel=1e-12)


def test_break_even_in_second_year():
    assert break_even_year(F) == 2


def test_break_even_none_when_unreachable():
    poor = FinanceParams(investment=1e9, first_year_saving=1.0, growth=1.0)
    assert break_even_year(poor, horizon=10) is None


def test_yearly_saving_growth():
    assert yearly_saving(F, 1) == 5000.0
    assert yearly_saving(F, 2) == pytest.approx(5525.0)
    with pytest.raises(ValueError):
        yearly_saving(F, 0)
    with pytest.raises(ValueError):
        cumulative_cash_flow(F, -1)


def test_unit_growth_is_linear():
    flat = FinanceParams(investment=100.0, first_year_saving=10.0, growth=1.0)
    assert cumulative_cash_flow(flat, 7) == pytest.approx(-30.0)
    assert break_even_year(flat) == 10


def test_cash_flow_rows_consistency():
    rows = cash_flow_rows(F, years=10)
    assert [r["year"] for r in rows] == list(range(1, 11))
    for prev, cur in zip(rows, rows[1:]):
        assert cur["cumulative"] - prev["cumulative"] == pytest.approx(
            cur["saving"], rel=1e-12)
    assert rows[-1]["multiple_of_investment"] == pytest.approx(7.162290,
                                                               abs=1e-5)
