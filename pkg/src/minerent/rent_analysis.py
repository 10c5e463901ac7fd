"""RVP trajectories, momento x detection, and rent valuation.

The RVP of a year is the cumulative discounted cash flow up to that year
minus the initial investment; the first strictly positive value marks
momento x, the year the investment is repaid in present value. Rent kept
at the horizon is valued both at t=0 (the final RVP, floored at zero) and
compounded forward to a valuation year at the sovereign-fund rate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .data_model import DiscountSpec, MarketSeries, MineDataset
from .reconstruction import (
    DEFAULT_BASELINE_WINDOW,
    DEFAULT_IMPUTATION_WINDOW,
    ExplorationImputation,
    impute_exploration,
    reconstruct_dataset,
)
from .valuation import (
    CashFlowSeries,
    InitialInvestment,
    Rate,
    as_rate,
    discount_rate,
    initial_investment,
    mine_cash_flows,
)

# Strictly-positive detection threshold: exact payback is not appropriation.
MOMENTO_TOLERANCE = 1e-9

DEFAULT_VALUATION_YEAR = 2012


@dataclass(frozen=True)
class RvpSeries:
    """Per-year rent-in-present-value trajectory for one mine at one rate."""

    mine_id: str
    rate: Rate
    points: tuple[tuple[int, float], ...]
    momento_x: int | None
    rent_pv: float
    rent_forward: float = 0.0
    valuation_year: int = DEFAULT_VALUATION_YEAR


def rvp_series(flows: CashFlowSeries, investment: InitialInvestment, rate: Rate | float, mine_id: str = "") -> RvpSeries:
    """Cumulative discounted cash flow minus the initial investment, per year."""
    r = as_rate(rate)
    cumulative = 0.0
    points: list[tuple[int, float]] = []
    for year, amount in flows.flows:
        cumulative += amount / (1.0 + r.value) ** (year - flows.base_year)
        points.append((year, cumulative - investment.total))
    final = points[-1][1] if points else 0.0
    series = RvpSeries(
        mine_id=mine_id,
        rate=r,
        points=tuple(points),
        momento_x=None,
        rent_pv=max(final, 0.0),
    )
    return replace(series, momento_x=momento_x(series))


def momento_x(series: RvpSeries) -> int | None:
    """First year whose RVP is strictly positive; None when there is none."""
    for year, value in series.points:
        if value > MOMENTO_TOLERANCE:
            return year
    return None


def rent_forward_value(
    flows: CashFlowSeries,
    x: int | None,
    fund_rate: Rate | float,
    valuation_year: int = DEFAULT_VALUATION_YEAR,
) -> float:
    """Nominal flows after year ``x``, compounded forward to ``valuation_year``.

    Returns 0 when ``x`` is absent (no rent appropriated) or when no flow
    lies strictly after ``x``.
    """
    if x is None:
        return 0.0
    if flows.flows and valuation_year < flows.years[-1]:
        raise ValueError(
            f"valuation_year {valuation_year} precedes last flow year {flows.years[-1]}"
        )
    rate = as_rate(fund_rate).value
    return sum(
        (
            amount * (1.0 + rate) ** (valuation_year - year)
            for year, amount in flows.flows
            if year > x
        ),
        start=0.0,
    )


def analyze_mine(
    mine: MineDataset,
    market: MarketSeries,
    rate: Rate | float,
    exploration: ExplorationImputation,
    valuation_year: int = DEFAULT_VALUATION_YEAR,
    baseline_window: tuple[int, int] = DEFAULT_BASELINE_WINDOW,
    audit: list[str] | None = None,
) -> RvpSeries:
    """Full single-mine pipeline: reconstruct, invest, discount, value rent."""
    full = reconstruct_dataset(mine, market, baseline_window, audit)
    flows = mine_cash_flows(full)
    investment = initial_investment(full, exploration)
    series = rvp_series(flows, investment, rate, mine_id=mine.mine_id)
    forward = rent_forward_value(flows, series.momento_x, market.fund_rate, valuation_year)
    return replace(series, rent_forward=forward, valuation_year=valuation_year)


@dataclass(frozen=True)
class SensitivityReport:
    """Per-mine results under each labeled discount rate."""

    rate_labels: tuple[str, ...]
    mine_ids: tuple[str, ...]
    series: dict[tuple[str, str], RvpSeries]  # (mine_id, rate_label) -> series
    valuation_year: int

    def cell(self, mine_id: str, rate_label: str) -> RvpSeries:
        return self.series[(mine_id, rate_label)]


def sensitivity_report(
    mines: Sequence[MineDataset],
    market: MarketSeries,
    specs: Sequence[tuple[str, DiscountSpec | Rate | float]],
    valuation_year: int = DEFAULT_VALUATION_YEAR,
    baseline_window: tuple[int, int] = DEFAULT_BASELINE_WINDOW,
    imputation_window: tuple[int, int] = DEFAULT_IMPUTATION_WINDOW,
    audit: list[str] | None = None,
) -> SensitivityReport:
    """Run the whole pipeline under each labeled rate.

    Reconstruction is rate-independent and runs once per mine; exploration
    imputation is capitalized at each scenario's rate, so the initial
    investment varies across columns.
    """
    if not specs:
        raise ValueError("at least one labeled rate is required")
    labels = [label for label, _ in specs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate rate labels: {labels}")

    full_mines = [reconstruct_dataset(m, market, baseline_window, audit) for m in mines]
    series: dict[tuple[str, str], RvpSeries] = {}
    for label, spec in specs:
        rate = discount_rate(spec) if isinstance(spec, DiscountSpec) else as_rate(spec)
        exploration = impute_exploration(market, full_mines, rate.value, window=imputation_window)
        for mine in full_mines:
            series[(mine.mine_id, label)] = analyze_mine(
                mine, market, rate, exploration, valuation_year, baseline_window
            )
    return SensitivityReport(
        rate_labels=tuple(labels),
        mine_ids=tuple(m.mine_id for m in full_mines),
        series=series,
        valuation_year=valuation_year,
    )


def summary_rows(report: SensitivityReport) -> list[dict[str, object]]:
    """Flatten the report into one row per mine, columns per rate label."""
    rows: list[dict[str, object]] = []
    for mine_id in sorted(report.mine_ids):
        row: dict[str, object] = {"mine_id": mine_id}
        for label in report.rate_labels:
            cell = report.cell(mine_id, label)
            row[f"momento_x_{label}"] = cell.momento_x
            row[f"rent_pv_at_t0_{label}"] = cell.rent_pv
            row[f"rent_at_{report.valuation_year}_{label}"] = cell.rent_forward
        rows.append(row)
    return rows


def write_summary_table(report: SensitivityReport, path: str | Path) -> None:
    """Write the summary as delimited text; absent momento x prints as '-'."""
    rows = summary_rows(report)
    columns = ["mine_id"]
    for label in report.rate_labels:
        columns.append(f"momento_x_{label}")
    for label in report.rate_labels:
        columns.append(f"rent_pv_at_t0_{label}")
    for label in report.rate_labels:
        columns.append(f"rent_at_{report.valuation_year}_{label}")

    def fmt(value) -> str:
        if value is None:
            return "-"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    lines = [",".join(columns)]
    lines.extend(",".join(fmt(row[col]) for col in columns) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_plot_data(series: RvpSeries, path: str | Path) -> None:
    """Two-column year/rvp file for external plotting."""
    lines = ["year,rvp"]
    lines.extend(f"{year},{value!r}" for year, value in series.points)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
