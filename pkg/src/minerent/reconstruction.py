"""Backfill pre-history mine years and prorate cohort exploration spend.

Reconstruction fills the financial columns of physical-history rows:
revenue is the cheaper of price*production and price*exports, unit cost and
the admin/sales ratio come from a baseline window of reported years, and
the remaining line items take baseline averages. Exploration spend is
prorated across mines within five years of their initial investment and
capitalized forward to each mine's opening year.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from statistics import fmean

from .data_model import USD_PER_MUSD, MarketSeries, MineDataset, MineYearRecord

DEFAULT_BASELINE_WINDOW = (2001, 2005)
DEFAULT_IMPUTATION_WINDOW = (1984, 1999)
DEFAULT_COHORT_WINDOW_YEARS = 5
PRIVATE_EXPLORATION_SHARE = 2.0 / 3.0


class ReconstructionError(Exception):
    """Reconstruction refused: overwriting real data or missing inputs."""


class BaselineUnavailableError(ReconstructionError):
    """No usable reported year inside the baseline window."""


class MarketCoverageError(ReconstructionError):
    """The market series does not cover a year needed for reconstruction."""


@dataclass(frozen=True)
class BaselineStats:
    """Averages over the baseline window used to backfill earlier years."""

    avg_unit_cost: float  # million USD per tonne
    gav_ratio: float  # admin/sales expense over operating cost
    avg_nonoperating: float
    avg_fixed_asset_additions: float
    avg_dep_amort: float
    avg_net_loan_payments: float
    baseline_years: tuple[int, int]


@dataclass(frozen=True)
class ExplorationImputation:
    """Exploration spend allocated per mine, capitalized to each t=0.

    ``yearly_allocations`` keeps the pre-capitalization shares per spend
    year for auditing; ``successful_campaigns``/``total_campaigns`` document
    the discovery-odds equivalence (``probability_inverse`` = total/success)
    when campaign counts are known.
    """

    allocations: dict[str, float]
    yearly_allocations: dict[int, dict[str, float]]
    cohort_window_years: int
    total_private_spend: float
    rate: float
    successful_campaigns: int | None = None
    total_campaigns: int | None = None
    probability_inverse: float | None = None
    warnings: tuple[str, ...] = ()


def compute_baseline_stats(
    records: tuple[MineYearRecord, ...] | list[MineYearRecord],
    window: tuple[int, int] = DEFAULT_BASELINE_WINDOW,
) -> BaselineStats:
    """Per-field means over the reported years inside ``window``.

    Years with zero production are excluded from unit-cost averaging, and
    zero-cost years from the admin/sales ratio.
    """
    usable = [rec for rec in records if window[0] <= rec.year <= window[1]]
    if not usable:
        raise BaselineUnavailableError(f"no reported years in baseline window {window}")
    producing = [rec for rec in usable if rec.production > 0]
    if not producing:
        raise BaselineUnavailableError(f"no year with production > 0 in baseline window {window}")

    with_cost = [rec for rec in usable if rec.operating_cost > 0]
    return BaselineStats(
        avg_unit_cost=fmean(rec.operating_cost / rec.production for rec in producing),
        gav_ratio=fmean(rec.admin_sales_expense / rec.operating_cost for rec in with_cost)
        if with_cost
        else 0.0,
        avg_nonoperating=fmean(
            rec.pretax_result - (rec.revenue - rec.operating_cost - rec.admin_sales_expense)
            for rec in usable
        ),
        avg_fixed_asset_additions=fmean(rec.fixed_asset_additions for rec in usable),
        avg_dep_amort=fmean(rec.depreciation_amortization for rec in usable),
        avg_net_loan_payments=fmean(rec.net_loan_payments for rec in usable),
        baseline_years=(window[0], window[1]),
    )


def reconstruct_year(
    mine: MineDataset,
    year: int,
    market: MarketSeries,
    baseline: BaselineStats,
    audit: list[str] | None = None,
) -> MineYearRecord:
    """Build the financial record of one pre-history year.

    Physical quantities come from the mine's physical history; only
    financials are reconstructed. Refuses years that already have a
    reported record.
    """
    if mine.first_reported_year is None:
        raise ReconstructionError(f"{mine.mine_id}: no reported history to reconstruct from")
    if year >= mine.first_reported_year:
        raise ReconstructionError(
            f"{mine.mine_id}: year {year} is not before first reported year "
            f"{mine.first_reported_year}; refusing to overwrite real data"
        )
    entry = market.entry(year)
    if entry is None:
        raise MarketCoverageError(f"market series does not cover year {year}")
    phys = mine.physical_for(year)
    if phys is None:
        raise ReconstructionError(f"{mine.mine_id}: no physical quantities supplied for {year}")

    price = entry.copper_price
    by_production = price * phys.production / USD_PER_MUSD
    by_exports = price * phys.exports / USD_PER_MUSD
    revenue = min(by_production, by_exports)
    operating_cost = baseline.avg_unit_cost * phys.production
    admin = baseline.gav_ratio * operating_cost
    operating_result = revenue - operating_cost - admin
    pretax = operating_result + baseline.avg_nonoperating
    if mine.escondida_tax_rule and phys.taxes_paid is not None:
        taxes = phys.taxes_paid
        tax_rule = "actual payment kept (escondida tax rule)"
    else:
        taxes = 0.0
        tax_rule = "zeroed"

    if audit is not None:
        who = f"{mine.mine_id} {year}"
        audit.extend(
            [
                f"{who} revenue: min(price*production, price*exports) = "
                f"min({by_production!r}, {by_exports!r}) -> {revenue!r}",
                f"{who} operating_cost: avg_unit_cost*production = "
                f"{baseline.avg_unit_cost!r}*{phys.production!r} -> {operating_cost!r}",
                f"{who} admin_sales_expense: gav_ratio*operating_cost = "
                f"{baseline.gav_ratio!r}*{operating_cost!r} -> {admin!r}",
                f"{who} pretax_result: operating result + avg nonoperating = "
                f"{operating_result!r} + {baseline.avg_nonoperating!r} -> {pretax!r}",
                f"{who} dep_amort: baseline average -> {baseline.avg_dep_amort!r}",
                f"{who} fixed_asset_additions: baseline average -> {baseline.avg_fixed_asset_additions!r}",
                f"{who} net_loan_payments: baseline average -> {baseline.avg_net_loan_payments!r}",
                f"{who} taxes_paid: {tax_rule} -> {taxes!r}",
            ]
        )

    return MineYearRecord(
        year=year,
        revenue=revenue,
        operating_cost=operating_cost,
        admin_sales_expense=admin,
        pretax_result=pretax,
        depreciation_amortization=baseline.avg_dep_amort,
        capital_paid_increase=0.0,
        taxes_paid=taxes,
        fixed_asset_additions=baseline.avg_fixed_asset_additions,
        net_loan_payments=baseline.avg_net_loan_payments,
        production=phys.production,
        exports=phys.exports,
        reconstructed=True,
    )


def reconstruct_dataset(
    mine: MineDataset,
    market: MarketSeries,
    baseline_window: tuple[int, int] = DEFAULT_BASELINE_WINDOW,
    audit: list[str] | None = None,
) -> MineDataset:
    """Backfill every physical-history year, returning a full dataset."""
    if not mine.physical_history:
        return mine
    baseline = compute_baseline_stats(mine.records, baseline_window)
    rebuilt = [
        reconstruct_year(mine, phys.year, market, baseline, audit)
        for phys in mine.physical_history
    ]
    merged = tuple(sorted(rebuilt + list(mine.records), key=lambda rec: rec.year))
    return replace(mine, records=merged, physical_history=())


def impute_exploration(
    market: MarketSeries,
    cohort: list[MineDataset] | tuple[MineDataset, ...],
    r: float,
    window: tuple[int, int] = DEFAULT_IMPUTATION_WINDOW,
    private_share: float = PRIVATE_EXPLORATION_SHARE,
    cohort_window_years: int = DEFAULT_COHORT_WINDOW_YEARS,
    successful_campaigns: int | None = None,
    total_campaigns: int | None = None,
) -> ExplorationImputation:
    """Prorate national exploration spend across the mine cohort.

    For each spend year, the private share of national spend (GDP times the
    exploration share) is split among mines within ``cohort_window_years``
    of their opening year, in proportion to mean production; each share is
    then capitalized forward at ``r`` to the mine's opening year. Spend
    years with no eligible mine are left unallocated with a warning.
    """
    mines = sorted(cohort, key=lambda m: m.mine_id)
    mean_production = {m.mine_id: m.mean_production() for m in mines}
    allocations = {m.mine_id: 0.0 for m in mines}
    yearly: dict[int, dict[str, float]] = {}
    warnings: list[str] = []
    total_private = 0.0

    for year in sorted(market.years):
        if not window[0] <= year <= window[1]:
            continue
        entry = market.entry(year)
        national = entry.gdp * entry.exploration_spend_pct_gdp
        private = private_share * national
        total_private += private
        eligible = [m for m in mines if m.opening_year - cohort_window_years <= year <= m.opening_year]
        pool = sum(mean_production[m.mine_id] for m in eligible)
        if not eligible or pool <= 0:
            warnings.append(f"spend-year {year}: no eligible mine; {private!r} left unallocated")
            continue
        shares = {
            m.mine_id: private * mean_production[m.mine_id] / pool for m in eligible
        }
        yearly[year] = shares
        for m in eligible:
            allocations[m.mine_id] += shares[m.mine_id] * (1.0 + r) ** (m.opening_year - year)

    probability_inverse = None
    if successful_campaigns is not None and total_campaigns is not None:
        if successful_campaigns <= 0:
            raise ValueError("successful_campaigns must be positive")
        probability_inverse = total_campaigns / successful_campaigns

    return ExplorationImputation(
        allocations=allocations,
        yearly_allocations=yearly,
        cohort_window_years=cohort_window_years,
        total_private_spend=total_private,
        rate=r,
        successful_campaigns=successful_campaigns,
        total_campaigns=total_campaigns,
        probability_inverse=probability_inverse,
        warnings=tuple(warnings),
    )
