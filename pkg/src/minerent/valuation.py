"""Discount-rate construction, annual project cash flow, and present value."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .data_model import DiscountSpec, MineDataset, MineYearRecord

logger = logging.getLogger(__name__)

#: Named cost-of-capital configurations shipped with the engine.
PRESETS: dict[str, DiscountSpec] = {
    "base": DiscountSpec(risk_free=0.069, beta=0.91, equity_premium=0.03889, country_risk=0.0173),
    "conservative": DiscountSpec(risk_free=0.069, beta=2.0, equity_premium=0.03889, country_risk=0.0411),
}


@dataclass(frozen=True)
class Rate:
    """Annual rate as a dimensionless fraction; must be finite and > -1."""

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value <= -1:
            raise ValueError(f"rate must be finite and > -1, got {self.value!r}")


def as_rate(rate: Rate | float) -> Rate:
    return rate if isinstance(rate, Rate) else Rate(float(rate))


@dataclass(frozen=True)
class CashFlowSeries:
    """End-of-year flows anchored at ``base_year`` (the t=0 outlay date)."""

    base_year: int
    flows: tuple[tuple[int, float], ...]

    def __post_init__(self):
        flows = tuple((int(year), float(amount)) for year, amount in self.flows)
        object.__setattr__(self, "flows", flows)
        years = [year for year, _ in flows]
        if years != sorted(set(years)):
            raise ValueError("flow years must be strictly increasing")
        if years and years[0] < self.base_year:
            raise ValueError(f"base_year {self.base_year} is after first flow year {years[0]}")

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(year for year, _ in self.flows)

    @property
    def amounts(self) -> tuple[float, ...]:
        return tuple(amount for _, amount in self.flows)


@dataclass(frozen=True)
class InitialInvestment:
    """Up-front outlay: first-year paid-in capital plus imputed exploration."""

    extraction: float
    exploration: float
    total: float

    def __post_init__(self):
        if not math.isclose(self.total, self.extraction + self.exploration, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("total must equal extraction + exploration")
        if self.total <= 0:
            raise ValueError(f"total initial investment must be > 0, got {self.total}")


def discount_rate(spec: DiscountSpec) -> Rate:
    """Additive cost of capital: risk_free + beta * equity_premium + country_risk."""
    return Rate(spec.risk_free + spec.beta * spec.equity_premium + spec.country_risk)


def annual_cash_flow(record: MineYearRecord) -> float:
    """Project cash flow of one year.

    Adds the pre-tax result and depreciation/amortization; subtracts the
    paid-in capital increase, taxes, fixed-asset additions, and net loan
    payments.
    """
    return (
        record.pretax_result
        + record.depreciation_amortization
        - record.capital_paid_increase
        - record.taxes_paid
        - record.fixed_asset_additions
        - record.net_loan_payments
    )


def mine_cash_flows(mine: MineDataset) -> CashFlowSeries:
    """Annual cash flows of a mine, anchored at its opening year."""
    return CashFlowSeries(
        base_year=mine.opening_year,
        flows=tuple((rec.year, annual_cash_flow(rec)) for rec in mine.records),
    )


def initial_investment(mine: MineDataset, exploration) -> InitialInvestment:
    """Combine first-year paid-in capital with the mine's imputed exploration.

    A mine absent from the imputation is treated as zero exploration, with a
    warning.
    """
    if mine.mine_id in exploration.allocations:
        imputed = exploration.allocations[mine.mine_id]
    else:
        logger.warning("no exploration imputation for mine %s; treated as 0", mine.mine_id)
        imputed = 0.0
    extraction = mine.capital_paid_first_year
    return InitialInvestment(extraction=extraction, exploration=imputed, total=extraction + imputed)


def present_value(series: CashFlowSeries, rate: Rate | float) -> float:
    """Sum of flows discounted end-of-year: flow / (1+r)^(year - base_year)."""
    r = as_rate(rate).value
    return sum(amount / (1.0 + r) ** (year - series.base_year) for year, amount in series.flows)
