"""Least-present-value-of-revenue concession: bidding, accrual, termination.

The state announces a discount rate and awards the concession to the bidder
demanding the smallest present value of revenue (VPI). Revenue accrues,
discounted at the announced rate, until the VPI target is met; the term is
therefore contingent on the price path. A voluntary tax reduces counted
revenue one-to-one and stretches the term; expropriation is indemnified by
the yet-unearned part of the target.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .data_model import USD_PER_MUSD
from .valuation import CashFlowSeries, Rate, as_rate

BID_TOLERANCE = 1e-6


class AuctionError(Exception):
    """Auction cannot produce a winner (no bids)."""


class StateMachineError(Exception):
    """Illegal transition on a concession state."""


class ConcessionStatus(enum.Enum):
    ACTIVE = "active"
    EXPIRED = "expired"
    EXPROPRIATED = "expropriated"


@dataclass(frozen=True)
class Bidder:
    """Auction participant with a private revenue forecast.

    ``reported_operating_cost`` is informational only: bids depend on the
    investment, the rates, and the revenue path, never on reported costs.
    """

    bidder_id: str
    investment: float
    cost_of_capital: Rate
    expected_revenue_path: CashFlowSeries
    reported_operating_cost: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.investment) or self.investment <= 0:
            raise ValueError(f"investment must be finite and > 0, got {self.investment!r}")


@dataclass(frozen=True)
class ConcessionState:
    """Value-typed state of a running concession."""

    vpi_target: float
    announced_rate: Rate
    current_year: int
    accrued_pv: float
    counted_revenue_log: tuple[tuple[float, float, float], ...]  # (gross, tax, counted)
    status: ConcessionStatus

    @property
    def active(self) -> bool:
        return self.status is ConcessionStatus.ACTIVE


@dataclass(frozen=True)
class PricePathParams:
    """Geometric-Brownian annual price path parameters."""

    initial_price: float
    drift: float
    volatility: float
    horizon: int
    seed: int

    def __post_init__(self):
        if self.initial_price <= 0:
            raise ValueError(f"initial_price must be > 0, got {self.initial_price!r}")
        if self.volatility < 0:
            raise ValueError(f"volatility must be >= 0, got {self.volatility!r}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon!r}")


@dataclass(frozen=True)
class OutcomeRow:
    period: int
    price: float
    gross_revenue: float
    voluntary_tax: float
    counted_revenue: float
    accrued_pv: float
    status: str


@dataclass(frozen=True)
class ConcessionOutcome:
    final_state: ConcessionState
    duration: int | None  # periods until expiry; None if still active
    rows: tuple[OutcomeRow, ...]
    warning: str | None = None


def _revenue_periods(path: CashFlowSeries) -> list[tuple[int, float]]:
    periods = []
    for year, amount in path.flows:
        offset = year - path.base_year
        if offset < 1:
            raise ValueError("revenue path must start strictly after the concession start")
        if amount < 0:
            raise ValueError(f"revenue must be nonnegative, got {amount!r} at period {offset}")
        periods.append((offset, amount))
    return periods


def equilibrium_bid(bidder: Bidder, announced_rate: Rate | float, tolerance: float = BID_TOLERANCE) -> float | None:
    """Smallest achievable VPI that still repays the bidder's investment.

    A candidate target V stops the concession at the first period where
    revenue discounted at the announced rate accrues to V; the stopping
    time is non-decreasing in V, so a bisection over V finds the earliest
    stop whose revenue prefix, discounted at the bidder's own cost of
    capital, covers the investment. The bid is the accrued value at that
    stop, which equals the investment to within one final-period granule
    when both rates coincide. Returns None when even the full path cannot
    repay the investment.
    """
    announced = as_rate(announced_rate).value
    own = bidder.cost_of_capital.value
    periods = _revenue_periods(bidder.expected_revenue_path)

    accrued = [0.0]
    own_pv = [0.0]
    for offset, amount in periods:
        accrued.append(accrued[-1] + amount / (1.0 + announced) ** offset)
        own_pv.append(own_pv[-1] + amount / (1.0 + own) ** offset)

    if own_pv[-1] < bidder.investment:
        return None

    def stop_index(target: float) -> int:
        if target <= 0:
            return 0
        for k in range(1, len(accrued)):
            if accrued[k] >= target:
                return k
        return len(accrued) - 1

    lo, hi = 0.0, accrued[-1]
    span = max(hi, 1.0)
    while hi - lo > tolerance * span:
        mid = (lo + hi) / 2.0
        if own_pv[stop_index(mid)] >= bidder.investment:
            hi = mid
        else:
            lo = mid
    return accrued[stop_index(hi)]


def run_auction(bids: dict[str, float] | Sequence[tuple[str, float]]) -> tuple[str, float]:
    """Winner is the smallest VPI demand; ties break on bidder id."""
    items = list(bids.items()) if isinstance(bids, dict) else list(bids)
    if not items:
        raise AuctionError("auction failed: no bids")
    winner_id, winning_vpi = min(items, key=lambda item: (item[1], item[0]))
    return winner_id, winning_vpi


def new_concession(vpi_target: float, announced_rate: Rate | float) -> ConcessionState:
    if not math.isfinite(vpi_target) or vpi_target <= 0:
        raise ValueError(f"vpi_target must be finite and > 0, got {vpi_target!r}")
    return ConcessionState(
        vpi_target=vpi_target,
        announced_rate=as_rate(announced_rate),
        current_year=0,
        accrued_pv=0.0,
        counted_revenue_log=(),
        status=ConcessionStatus.ACTIVE,
    )


def step_concession(state: ConcessionState, gross_revenue: float, voluntary_tax: float = 0.0) -> ConcessionState:
    """Advance one year: count revenue net of the voluntary tax.

    The full final period counts; there is no intra-year proration at
    expiration.
    """
    if not state.active:
        raise StateMachineError(f"cannot step a concession in status {state.status.value!r}")
    if not 0.0 <= voluntary_tax <= gross_revenue:
        raise ValueError(
            f"voluntary tax must lie in [0, gross revenue], got {voluntary_tax!r} vs {gross_revenue!r}"
        )
    counted = gross_revenue - voluntary_tax
    period = state.current_year + 1
    accrued = state.accrued_pv + counted / (1.0 + state.announced_rate.value) ** period
    status = ConcessionStatus.EXPIRED if accrued >= state.vpi_target else ConcessionStatus.ACTIVE
    return replace(
        state,
        current_year=period,
        accrued_pv=accrued,
        counted_revenue_log=state.counted_revenue_log + ((gross_revenue, voluntary_tax, counted),),
        status=status,
    )


def expropriate(state: ConcessionState) -> ConcessionState:
    if not state.active:
        raise StateMachineError(f"cannot expropriate a concession in status {state.status.value!r}")
    return replace(state, status=ConcessionStatus.EXPROPRIATED)


def expropriation_indemnity(state: ConcessionState, at_expropriation_date: bool = False) -> float:
    """Unearned part of the VPI target; zero once the concession expired.

    Expressed in present value at concession start by default; with
    ``at_expropriation_date`` it is compounded to the current year.
    """
    if state.status is ConcessionStatus.EXPIRED:
        return 0.0
    indemnity = state.vpi_target - state.accrued_pv
    if at_expropriation_date:
        indemnity *= (1.0 + state.announced_rate.value) ** state.current_year
    return indemnity


def generate_price_path(params: PricePathParams) -> np.ndarray:
    """Seeded geometric-Brownian annual prices; index 0 is the initial price."""
    rng = np.random.default_rng(params.seed)
    shocks = rng.standard_normal(params.horizon - 1)
    log_steps = (params.drift - params.volatility**2 / 2.0) + params.volatility * shocks
    log_prices = np.concatenate(([0.0], np.cumsum(log_steps)))
    return params.initial_price * np.exp(log_prices)


TaxPolicy = Callable[[int, float], float]


def _as_tax_policy(tax_policy) -> TaxPolicy:
    if tax_policy is None:
        return lambda period, gross: 0.0
    if callable(tax_policy):
        return tax_policy
    if isinstance(tax_policy, (int, float)):
        constant = float(tax_policy)
        return lambda period, gross: constant
    schedule = dict(tax_policy) if isinstance(tax_policy, dict) else dict(enumerate(tax_policy, start=1))
    return lambda period, gross: float(schedule.get(period, 0.0))


def simulate_concession(
    vpi: float,
    price_path: Sequence[float] | np.ndarray,
    quantity_per_year: float,
    announced_rate: Rate | float,
    tax_policy: TaxPolicy | dict[int, float] | Sequence[float] | float | None = None,
) -> ConcessionOutcome:
    """Drive the concession over a price path until expiry or path end.

    Yearly gross revenue is price (USD/t) times quantity (t), expressed in
    million USD. The tax policy may be a callable (period, gross) -> tax, a
    per-period schedule, or a constant; taxes are clamped to [0, gross].
    """
    policy = _as_tax_policy(tax_policy)
    state = new_concession(vpi, announced_rate)
    rows: list[OutcomeRow] = []
    duration = None
    for index, price in enumerate(price_path):
        period = index + 1
        gross = float(price) * quantity_per_year / USD_PER_MUSD
        tax = min(max(policy(period, gross), 0.0), gross)
        state = step_concession(state, gross, tax)
        rows.append(
            OutcomeRow(
                period=period,
                price=float(price),
                gross_revenue=gross,
                voluntary_tax=tax,
                counted_revenue=gross - tax,
                accrued_pv=state.accrued_pv,
                status=state.status.value,
            )
        )
        if not state.active:
            duration = period
            break
    warning = None
    if state.active:
        warning = (
            f"concession still active after {len(rows)} periods: accrued "
            f"{state.accrued_pv!r} of VPI target {state.vpi_target!r}"
        )
    return ConcessionOutcome(final_state=state, duration=duration, rows=tuple(rows), warning=warning)
