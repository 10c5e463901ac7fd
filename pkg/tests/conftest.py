"""Shared fixtures: the shipped 3-mine corpus and dataset builders."""

from __future__ import annotations

from pathlib import Path

import pytest

from minerent import (
    MarketSeries,
    MarketYear,
    MineDataset,
    MineYearRecord,
    load_market_series,
    load_mine_dataset,
)

DATA_DIR = Path(__file__).parent / "data"
MINES_DIR = DATA_DIR / "mines"
MARKET_FILE = DATA_DIR / "market.csv"


def make_record(
    year,
    revenue=100.0,
    operating_cost=40.0,
    admin_sales_expense=4.0,
    pretax_result=56.0,
    depreciation_amortization=10.0,
    capital_paid_increase=0.0,
    taxes_paid=8.0,
    fixed_asset_additions=12.0,
    net_loan_payments=5.0,
    production=100_000.0,
    exports=None,
    reconstructed=False,
) -> MineYearRecord:
    return MineYearRecord(
        year=year,
        revenue=revenue,
        operating_cost=operating_cost,
        admin_sales_expense=admin_sales_expense,
        pretax_result=pretax_result,
        depreciation_amortization=depreciation_amortization,
        capital_paid_increase=capital_paid_increase,
        taxes_paid=taxes_paid,
        fixed_asset_additions=fixed_asset_additions,
        net_loan_payments=net_loan_payments,
        production=production,
        exports=production if exports is None else exports,
        reconstructed=reconstructed,
    )


def make_mine(
    mine_id="testmine",
    opening_year=1995,
    capital_paid_first_year=500.0,
    records=(),
    physical_history=(),
    escondida_tax_rule=False,
) -> MineDataset:
    records = tuple(sorted(records, key=lambda r: r.year))
    return MineDataset(
        mine_id=mine_id,
        opening_year=opening_year,
        first_reported_year=records[0].year if records else None,
        capital_paid_first_year=capital_paid_first_year,
        records=records,
        escondida_tax_rule=escondida_tax_rule,
        physical_history=tuple(sorted(physical_history, key=lambda p: p.year)),
    )


def make_market(
    years=range(1984, 2013),
    price=2000.0,
    gdp=50_000.0,
    exploration_pct=0.004,
    fund_rate=0.0507,
) -> MarketSeries:
    entries = tuple(
        MarketYear(
            year=year,
            copper_price=price(year) if callable(price) else price,
            gdp=gdp(year) if callable(gdp) else gdp,
            exploration_spend_pct_gdp=exploration_pct(year) if callable(exploration_pct) else exploration_pct,
        )
        for year in years
    )
    return MarketSeries(entries=entries, fund_rate=fund_rate)


@pytest.fixture(scope="session")
def corpus_market() -> MarketSeries:
    return load_market_series(MARKET_FILE)


@pytest.fixture(scope="session")
def corpus_mines() -> list[MineDataset]:
    return [load_mine_dataset(path) for path in sorted(MINES_DIR.glob("*.csv"))]
