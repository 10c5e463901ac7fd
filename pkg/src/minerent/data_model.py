"""Domain types, file ingestion, and validation for mine and market inputs.

Money is expressed in millions of nominal USD throughout; physical
quantities are tonnes of fine copper. A mine file is comma-separated text
with a leading ``key=value`` metadata block, a fixed header row, and one
row per year. Rows whose financial columns are blank carry pre-history
physical quantities that the reconstruction module backfills later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

MINE_COLUMNS = (
    "year",
    "revenue",
    "operating_cost",
    "admin_sales_expense",
    "pretax_result",
    "dep_amort",
    "capital_paid_increase",
    "taxes_paid",
    "fixed_asset_additions",
    "net_loan_payments",
    "production_t",
    "exports_t",
)
MARKET_COLUMNS = ("year", "copper_price_usd_per_t", "gdp_usd_m", "exploration_pct_gdp")

MINE_METADATA_KEYS = ("mine_id", "opening_year", "capital_paid_first_year", "escondida_tax_rule")

YEAR_MIN = 1984
YEAR_MAX = 2012
DEFAULT_FUND_RATE = 0.0507

# Prices are USD/tonne and quantities tonnes; money fields are million USD.
USD_PER_MUSD = 1_000_000.0

NO_HISTORY_WARNING = "no history; reconstruction required"


class DataFileError(Exception):
    """Problem in an input file; carries the offending path and line."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        location = self.path or ""
        if line is not None:
            location += f":{line}"
        super().__init__(f"{location}: {message}" if location else message)


class ParseError(DataFileError):
    """Malformed row or value: wrong column count, non-numeric field."""


class SchemaError(DataFileError):
    """Structural violation: bad header, duplicate year, bad metadata."""


@dataclass(frozen=True)
class MineYearRecord:
    """One mine-year of financial line items plus physical quantities."""

    year: int
    revenue: float
    operating_cost: float
    admin_sales_expense: float
    pretax_result: float
    depreciation_amortization: float
    capital_paid_increase: float
    taxes_paid: float
    fixed_asset_additions: float
    net_loan_payments: float
    production: float
    exports: float
    reconstructed: bool = False

    def money_fields(self) -> dict[str, float]:
        return {
            "revenue": self.revenue,
            "operating_cost": self.operating_cost,
            "admin_sales_expense": self.admin_sales_expense,
            "pretax_result": self.pretax_result,
            "dep_amort": self.depreciation_amortization,
            "capital_paid_increase": self.capital_paid_increase,
            "taxes_paid": self.taxes_paid,
            "fixed_asset_additions": self.fixed_asset_additions,
            "net_loan_payments": self.net_loan_payments,
        }


@dataclass(frozen=True)
class PhysicalYear:
    """Pre-history year: tonnages observed, financials not yet reconstructed.

    ``taxes_paid`` is only populated for mines whose actual tax payments are
    kept during reconstruction (the escondida tax rule).
    """

    year: int
    production: float
    exports: float
    taxes_paid: float | None = None


@dataclass(frozen=True)
class MineDataset:
    """All loaded data for one mine, records sorted by year."""

    mine_id: str
    opening_year: int
    first_reported_year: int | None
    capital_paid_first_year: float
    records: tuple[MineYearRecord, ...]
    escondida_tax_rule: bool = False
    physical_history: tuple[PhysicalYear, ...] = ()
    load_warnings: tuple[str, ...] = ()

    def record_for(self, year: int) -> MineYearRecord | None:
        for rec in self.records:
            if rec.year == year:
                return rec
        return None

    def physical_for(self, year: int) -> PhysicalYear | None:
        for phys in self.physical_history:
            if phys.year == year:
                return phys
        return None

    def production_by_year(self) -> dict[int, float]:
        out = {phys.year: phys.production for phys in self.physical_history}
        out.update({rec.year: rec.production for rec in self.records})
        return out

    def mean_production(self) -> float:
        """Arithmetic mean of annual production over every year on file."""
        per_year = self.production_by_year()
        if not per_year:
            return 0.0
        return sum(per_year.values()) / len(per_year)


@dataclass(frozen=True)
class MarketYear:
    year: int
    copper_price: float  # USD per tonne
    gdp: float  # million USD
    exploration_spend_pct_gdp: float


@dataclass(frozen=True)
class MarketSeries:
    """Per-year copper price, GDP, and exploration spend share."""

    entries: tuple[MarketYear, ...]
    fund_rate: float = DEFAULT_FUND_RATE

    def entry(self, year: int) -> MarketYear | None:
        for ent in self.entries:
            if ent.year == year:
                return ent
        return None

    def covers(self, year: int) -> bool:
        return self.entry(year) is not None

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(ent.year for ent in self.entries)


@dataclass(frozen=True)
class DiscountSpec:
    """Cost-of-capital parameters: additive CAPM plus a sovereign premium."""

    risk_free: float
    beta: float
    equity_premium: float
    country_risk: float

    def __post_init__(self):
        for name in ("risk_free", "beta", "equity_premium", "country_risk"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")


@dataclass(frozen=True)
class ValidationIssue:
    locator: str
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[ValidationIssue, ...]
    warnings: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.errors


def _parse_number(text: str, column: str, path: Path, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r} in column {column}", path, line) from None


def _parse_year(text: str, path: Path, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"non-numeric year {text!r}", path, line) from None


def load_mine_dataset(path: str | Path) -> MineDataset:
    """Parse one mine file into a :class:`MineDataset`.

    Layout: ``key=value`` metadata lines (``mine_id``, ``opening_year``,
    ``capital_paid_first_year``, optional ``escondida_tax_rule``), then the
    exact header row, then one comma-separated row per year. A row whose
    financial columns are all blank (``taxes_paid`` may be filled under the
    escondida tax rule) is kept as physical history; a blank ``exports_t``
    defaults to ``production_t``.

    Raises :class:`ParseError` for malformed rows and :class:`SchemaError`
    for duplicate years, bad headers, or bad metadata; both name the line.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    expected_header = ",".join(MINE_COLUMNS)

    meta: dict[str, str] = {}
    records: list[MineYearRecord] = []
    physical: list[PhysicalYear] = []
    seen_years: dict[int, int] = {}
    header_seen = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if not header_seen:
            if line == expected_header:
                header_seen = True
                continue
            if "=" in line:
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key not in MINE_METADATA_KEYS:
                    raise SchemaError(f"unknown metadata key {key!r}", path, lineno)
                if key in meta:
                    raise SchemaError(f"duplicate metadata key {key!r}", path, lineno)
                meta[key] = value
                continue
            raise SchemaError("expected metadata line or header row", path, lineno)

        fields = line.split(",")
        if len(fields) != len(MINE_COLUMNS):
            raise ParseError(
                f"expected {len(MINE_COLUMNS)} columns, got {len(fields)}", path, lineno
            )
        year = _parse_year(fields[0], path, lineno)
        if year in seen_years:
            raise SchemaError(
                f"duplicate year {year} (first seen at line {seen_years[year]})", path, lineno
            )
        seen_years[year] = lineno

        if fields[10] == "":
            raise ParseError("production_t is required", path, lineno)
        production = _parse_number(fields[10], "production_t", path, lineno)
        exports = (
            production if fields[11] == "" else _parse_number(fields[11], "exports_t", path, lineno)
        )

        financial = fields[1:10]  # revenue .. net_loan_payments; taxes_paid is index 6
        blank = [value == "" for value in financial]
        if all(blank[i] for i in range(len(blank)) if i != 6):
            taxes = None
            if not blank[6]:
                taxes = _parse_number(financial[6], "taxes_paid", path, lineno)
            physical.append(PhysicalYear(year, production, exports, taxes))
        elif not any(blank):
            values = [
                _parse_number(value, MINE_COLUMNS[i + 1], path, lineno)
                for i, value in enumerate(financial)
            ]
            records.append(MineYearRecord(year, *values, production, exports))
        else:
            raise ParseError(
                "financial columns must be all blank (pre-history row) or all present",
                path,
                lineno,
            )

    if not header_seen:
        raise SchemaError("missing header row", path)
    for key in ("mine_id", "opening_year", "capital_paid_first_year"):
        if key not in meta:
            raise SchemaError(f"missing metadata key {key!r}", path)
    if not meta["mine_id"]:
        raise SchemaError("mine_id must be non-empty", path)
    try:
        opening_year = int(meta["opening_year"])
        capital_paid = float(meta["capital_paid_first_year"])
    except ValueError as exc:
        raise SchemaError(f"non-numeric metadata value ({exc})", path) from None
    tax_rule_text = meta.get("escondida_tax_rule", "false")
    if tax_rule_text not in ("true", "false"):
        raise SchemaError("escondida_tax_rule must be 'true' or 'false'", path)

    records.sort(key=lambda rec: rec.year)
    physical.sort(key=lambda phys: phys.year)
    first_reported = records[0].year if records else None
    warnings = () if records else (NO_HISTORY_WARNING,)

    return MineDataset(
        mine_id=meta["mine_id"],
        opening_year=opening_year,
        first_reported_year=first_reported,
        capital_paid_first_year=capital_paid,
        records=tuple(records),
        escondida_tax_rule=tax_rule_text == "true",
        physical_history=tuple(physical),
        load_warnings=warnings,
    )


def _fmt(value: float) -> str:
    # repr round-trips floats exactly, keeping serialize/load lossless
    return repr(float(value))


def write_mine_dataset(dataset: MineDataset, path: str | Path) -> None:
    """Serialize a dataset back to the mine file schema."""
    path = Path(path)
    lines = [
        f"mine_id={dataset.mine_id}",
        f"opening_year={dataset.opening_year}",
        f"capital_paid_first_year={_fmt(dataset.capital_paid_first_year)}",
        f"escondida_tax_rule={'true' if dataset.escondida_tax_rule else 'false'}",
        ",".join(MINE_COLUMNS),
    ]
    rows: list[tuple[int, str]] = []
    for rec in dataset.records:
        cells = [
            str(rec.year),
            _fmt(rec.revenue),
            _fmt(rec.operating_cost),
            _fmt(rec.admin_sales_expense),
            _fmt(rec.pretax_result),
            _fmt(rec.depreciation_amortization),
            _fmt(rec.capital_paid_increase),
            _fmt(rec.taxes_paid),
            _fmt(rec.fixed_asset_additions),
            _fmt(rec.net_loan_payments),
            _fmt(rec.production),
            _fmt(rec.exports),
        ]
        rows.append((rec.year, ",".join(cells)))
    for phys in dataset.physical_history:
        taxes = "" if phys.taxes_paid is None else _fmt(phys.taxes_paid)
        cells = [str(phys.year), "", "", "", "", "", "", taxes, "", "", _fmt(phys.production), _fmt(phys.exports)]
        rows.append((phys.year, ",".join(cells)))
    rows.sort(key=lambda item: item[0])
    lines.extend(text for _, text in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_market_series(path: str | Path) -> MarketSeries:
    """Parse the market file: optional ``fund_rate=`` line, header, rows."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    expected_header = ",".join(MARKET_COLUMNS)

    fund_rate = DEFAULT_FUND_RATE
    entries: list[MarketYear] = []
    seen_years: dict[int, int] = {}
    header_seen = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if not header_seen:
            if line == expected_header:
                header_seen = True
                continue
            if "=" in line:
                key, _, value = line.partition("=")
                if key.strip() != "fund_rate":
                    raise SchemaError(f"unknown metadata key {key.strip()!r}", path, lineno)
                fund_rate = _parse_number(value.strip(), "fund_rate", path, lineno)
                continue
            raise SchemaError("expected metadata line or header row", path, lineno)
        fields = line.split(",")
        if len(fields) != len(MARKET_COLUMNS):
            raise ParseError(
                f"expected {len(MARKET_COLUMNS)} columns, got {len(fields)}", path, lineno
            )
        year = _parse_year(fields[0], path, lineno)
        if year in seen_years:
            raise SchemaError(
                f"duplicate year {year} (first seen at line {seen_years[year]})", path, lineno
            )
        seen_years[year] = lineno
        entries.append(
            MarketYear(
                year=year,
                copper_price=_parse_number(fields[1], MARKET_COLUMNS[1], path, lineno),
                gdp=_parse_number(fields[2], MARKET_COLUMNS[2], path, lineno),
                exploration_spend_pct_gdp=_parse_number(fields[3], MARKET_COLUMNS[3], path, lineno),
            )
        )

    if not header_seen:
        raise SchemaError("missing header row", path)
    entries.sort(key=lambda ent: ent.year)
    return MarketSeries(entries=tuple(entries), fund_rate=fund_rate)


def _check_physical_row(
    mine_id: str, year: int, production: float, exports: float, err, warn
) -> None:
    locator = f"{mine_id}:{year}"
    if production < 0:
        err(locator, "production-nonnegative", f"production must be nonnegative, got {production}")
    if exports < 0:
        err(locator, "exports-nonnegative", f"exports must be nonnegative, got {exports}")
    if not YEAR_MIN <= year <= YEAR_MAX:
        err(locator, "year-window", f"year {year} outside [{YEAR_MIN}, {YEAR_MAX}]")
    if exports > 1.10 * production:
        warn(
            locator,
            "exports-exceed-production",
            "exports exceed production by more than 10% (possible inventory draw-down)",
        )


def validate_dataset(mine: MineDataset, market: MarketSeries) -> ValidationReport:
    """Check every invariant; violations are reported, never raised.

    The report is order-insensitive: issues are sorted by locator and rule.
    """
    errors: list[ValidationIssue] = []
    warnings: list[ValidationIssue] = []

    def err(locator, rule, message):
        errors.append(ValidationIssue(locator, rule, message))

    def warn(locator, rule, message):
        warnings.append(ValidationIssue(locator, rule, message))

    if not (math.isfinite(mine.capital_paid_first_year) and mine.capital_paid_first_year > 0):
        err(
            mine.mine_id,
            "capital-paid-positive",
            f"capital_paid_first_year must be > 0, got {mine.capital_paid_first_year}",
        )
    if mine.first_reported_year is not None and mine.first_reported_year < mine.opening_year:
        err(
            mine.mine_id,
            "first-reported-after-opening",
            f"first_reported_year {mine.first_reported_year} precedes opening_year {mine.opening_year}",
        )
    if not mine.records:
        warn(mine.mine_id, "no-history", NO_HISTORY_WARNING)

    all_years = [rec.year for rec in mine.records] + [phys.year for phys in mine.physical_history]
    if len(set(all_years)) != len(all_years):
        dupes = sorted({year for year in all_years if all_years.count(year) > 1})
        err(mine.mine_id, "duplicate-year", f"duplicate years: {dupes}")
    if [rec.year for rec in mine.records] != sorted(rec.year for rec in mine.records):
        err(mine.mine_id, "records-sorted", "records are not sorted by year")

    for rec in mine.records:
        locator = f"{mine.mine_id}:{rec.year}"
        _check_physical_row(mine.mine_id, rec.year, rec.production, rec.exports, err, warn)
        for name, value in rec.money_fields().items():
            if not math.isfinite(value):
                err(locator, "money-finite", f"{name} is not finite: {value}")
    for phys in mine.physical_history:
        _check_physical_row(mine.mine_id, phys.year, phys.production, phys.exports, err, warn)
        if phys.taxes_paid is not None and not math.isfinite(phys.taxes_paid):
            err(f"{mine.mine_id}:{phys.year}", "money-finite", "taxes_paid is not finite")

    if not market.entries:
        err("market", "market-empty", "market series has no entries")
    for ent in market.entries:
        locator = f"market:{ent.year}"
        if not (math.isfinite(ent.copper_price) and ent.copper_price > 0):
            err(locator, "price-positive", f"copper price must be > 0, got {ent.copper_price}")
        if not (0 <= ent.exploration_spend_pct_gdp < 1):
            err(
                locator,
                "exploration-pct-range",
                f"exploration share of GDP must lie in [0, 1), got {ent.exploration_spend_pct_gdp}",
            )
        if not math.isfinite(ent.gdp):
            err(locator, "money-finite", f"gdp is not finite: {ent.gdp}")
    if market.entries:
        years = [ent.year for ent in market.entries]
        missing = sorted(set(range(min(years), max(years) + 1)) - set(years))
        if missing:
            err("market", "market-contiguous", f"non-contiguous market coverage: missing {missing}")
    if not (math.isfinite(market.fund_rate) and market.fund_rate > -1):
        err("market", "fund-rate-range", f"fund_rate must be finite and > -1, got {market.fund_rate}")

    key = lambda issue: (issue.locator, issue.rule, issue.message)
    return ValidationReport(tuple(sorted(errors, key=key)), tuple(sorted(warnings, key=key)))
