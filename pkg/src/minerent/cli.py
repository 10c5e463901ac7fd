"""Command-line front end: analyze, reconstruct, simulate-concession, auction.

All commands are deterministic: fixed inputs (and seed) produce
byte-identical artifacts, so run manifests carry no timestamps. Exit codes:
0 success, 1 validation/content errors, 2 I/O errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .concession_sim import (
    Bidder,
    PricePathParams,
    equilibrium_bid,
    generate_price_path,
    run_auction,
    simulate_concession,
)
from .data_model import (
    USD_PER_MUSD,
    DataFileError,
    DiscountSpec,
    load_market_series,
    load_mine_dataset,
    validate_dataset,
    write_mine_dataset,
)
from .reconstruction import ReconstructionError, reconstruct_dataset
from .rent_analysis import (
    DEFAULT_VALUATION_YEAR,
    sensitivity_report,
    summary_rows,
    write_plot_data,
    write_summary_table,
)
from .valuation import PRESETS, CashFlowSeries, Rate

SUMMARY_TABLE_NAME = "summary_cuadro1.csv"
SUMMARY_JSON_NAME = "summary_cuadro1.json"
OUTCOME_TABLE_NAME = "concession_outcome.csv"
OUTCOME_JSON_NAME = "concession_outcome.json"
AUDIT_LOG_NAME = "reconstruction_audit.log"
MANIFEST_NAME = "run_manifest.json"
HISTOGRAM_NAME = "duration_histogram.csv"
AUCTION_TABLE_NAME = "auction_result.csv"

FORMATS = ("table", "json")


class ScenarioError(DataFileError):
    """Unparseable or inconsistent concession scenario file."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    mines_dir: Path | None = None
    market_path: Path | None = None
    scenario_path: Path | None = None
    out_dir: Path | None = None
    rates: tuple[tuple[str, DiscountSpec], ...] = ()
    valuation_year: int = DEFAULT_VALUATION_YEAR
    formats: frozenset[str] = frozenset(FORMATS)


@dataclass(frozen=True)
class Scenario:
    announced_rate: float
    quantity: float
    vpi: float | None
    bidders: tuple[tuple[str, float, float], ...]  # (bidder_id, i0, cost_of_capital)
    explicit_path: tuple[float, ...] | None
    initial_price: float | None
    drift: float
    volatility: float
    horizon: int | None
    seed: int
    replications: int
    tax_constant: float
    tax_schedule: dict[int, float] | None


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _write_manifest(out_dir: Path, command: str, inputs: dict, parameters: dict, seed: int | None) -> None:
    manifest = {
        "command": command,
        "inputs": inputs,
        "parameters": parameters,
        "seed": seed,
        "package": {"name": "minerent", "version": __version__},
    }
    _write_text(out_dir / MANIFEST_NAME, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _discover_mines(mines_dir: Path) -> list[Path]:
    return sorted(mines_dir.glob("*.csv"))


def _load_inputs(config: RunConfig):
    market = load_market_series(config.market_path)
    paths = _discover_mines(config.mines_dir)
    mines = [load_mine_dataset(path) for path in paths]
    return market, mines


def _validate_all(mines, market) -> tuple[list, list]:
    errors, warnings = [], []
    seen = set()
    for mine in mines:
        report = validate_dataset(mine, market)
        for issue in report.errors:
            key = (issue.locator, issue.rule, issue.message)
            if key not in seen:
                seen.add(key)
                errors.append(issue)
        for issue in report.warnings:
            key = (issue.locator, issue.rule, issue.message)
            if key not in seen:
                seen.add(key)
                warnings.append(issue)
    return errors, warnings


def cmd_analyze(config: RunConfig) -> int:
    """Reconstruct, build RVP series per rate, and emit summary artifacts."""
    try:
        market, mines = _load_inputs(config)
    except DataFileError as exc:
        return _fail(str(exc), 1)
    except OSError as exc:
        return _fail(str(exc), 2)
    if not mines:
        return _fail(f"no mine datasets found in {config.mines_dir}", 1)

    errors, warnings = _validate_all(mines, market)
    for issue in warnings:
        print(f"warning: {issue.locator}: {issue.message}", file=sys.stderr)
    if errors:
        for issue in errors:
            print(f"error: {issue.locator}: [{issue.rule}] {issue.message}", file=sys.stderr)
        return 1

    audit: list[str] = []
    try:
        report = sensitivity_report(
            mines, market, config.rates, valuation_year=config.valuation_year, audit=audit
        )
    except ReconstructionError as exc:
        return _fail(str(exc), 1)

    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        for (mine_id, label), series in sorted(report.series.items()):
            write_plot_data(series, config.out_dir / f"{mine_id}_rvp_{label}.csv")
        if "table" in config.formats:
            write_summary_table(report, config.out_dir / SUMMARY_TABLE_NAME)
        if "json" in config.formats:
            _write_text(
                config.out_dir / SUMMARY_JSON_NAME,
                json.dumps(summary_rows(report), sort_keys=True, indent=2) + "\n",
            )
        _write_text(config.out_dir / AUDIT_LOG_NAME, "\n".join(audit) + ("\n" if audit else ""))
        _write_manifest(
            config.out_dir,
            "analyze",
            inputs={
                "market": str(config.market_path),
                "mines": [str(p) for p in _discover_mines(config.mines_dir)],
            },
            parameters={
                "formats": sorted(config.formats),
                "fund_rate": market.fund_rate,
                "rates": {
                    label: {
                        "risk_free": spec.risk_free,
                        "beta": spec.beta,
                        "equity_premium": spec.equity_premium,
                        "country_risk": spec.country_risk,
                    }
                    for label, spec in config.rates
                },
                "valuation_year": config.valuation_year,
            },
            seed=None,
        )
    except OSError as exc:
        return _fail(str(exc), 2)
    return 0


def cmd_reconstruct(config: RunConfig) -> int:
    """Backfill pre-history rows and write the completed datasets."""
    try:
        market, mines = _load_inputs(config)
    except DataFileError as exc:
        return _fail(str(exc), 1)
    except OSError as exc:
        return _fail(str(exc), 2)
    if not mines:
        return _fail(f"no mine datasets found in {config.mines_dir}", 1)

    errors, _ = _validate_all(mines, market)
    if errors:
        for issue in errors:
            print(f"error: {issue.locator}: [{issue.rule}] {issue.message}", file=sys.stderr)
        return 1

    audit: list[str] = []
    try:
        completed = [reconstruct_dataset(mine, market, audit=audit) for mine in mines]
    except ReconstructionError as exc:
        return _fail(str(exc), 1)
    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        for mine in completed:
            write_mine_dataset(mine, config.out_dir / f"{mine.mine_id}_reconstructed.csv")
        _write_text(config.out_dir / AUDIT_LOG_NAME, "\n".join(audit) + ("\n" if audit else ""))
        _write_manifest(
            config.out_dir,
            "reconstruct",
            inputs={
                "market": str(config.market_path),
                "mines": [str(p) for p in _discover_mines(config.mines_dir)],
            },
            parameters={},
            seed=None,
        )
    except OSError as exc:
        return _fail(str(exc), 2)
    return 0


def _scenario_number(value: str, key: str, path: Path, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScenarioError(f"non-numeric value {value!r} for {key}", path, line) from None


_SCENARIO_SCALARS = {
    "announced_rate",
    "quantity_t_per_year",
    "vpi",
    "initial_price",
    "drift",
    "volatility",
    "horizon",
    "seed",
    "replications",
    "tax_per_year",
}
_SCENARIO_SECTIONS = {
    "bidders": ("bidder_id", "i0", "cost_of_capital"),
    "price_path": ("period", "price_usd_per_t"),
    "tax_schedule": ("period", "tax"),
}


def load_scenario(path: str | Path) -> Scenario:
    """Parse a concession scenario: key=value lines plus optional sections.

    Sections are ``[bidders]``, ``[price_path]``, and ``[tax_schedule]``,
    each a small header+rows table. Either ``vpi`` or a bidders table must
    be present, and either an explicit price path or ``initial_price`` with
    ``horizon``.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    scalars: dict[str, float] = {}
    tables: dict[str, list[tuple[int, list[str]]]] = {name: [] for name in _SCENARIO_SECTIONS}
    section: str | None = None
    header_pending = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCENARIO_SECTIONS:
                raise ScenarioError(f"unknown section {section!r}", path, lineno)
            header_pending = True
            continue
        if section is None:
            if "=" not in line:
                raise ScenarioError("expected key=value line", path, lineno)
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _SCENARIO_SCALARS:
                raise ScenarioError(f"unknown key {key!r}", path, lineno)
            if key in scalars:
                raise ScenarioError(f"duplicate key {key!r}", path, lineno)
            scalars[key] = _scenario_number(value, key, path, lineno)
            continue
        expected = ",".join(_SCENARIO_SECTIONS[section])
        if header_pending:
            if line != expected:
                raise ScenarioError(f"section [{section}] must start with header {expected!r}", path, lineno)
            header_pending = False
            continue
        fields = line.split(",")
        if len(fields) != len(_SCENARIO_SECTIONS[section]):
            raise ScenarioError(
                f"expected {len(_SCENARIO_SECTIONS[section])} columns, got {len(fields)}", path, lineno
            )
        tables[section].append((lineno, fields))

    if "announced_rate" not in scalars:
        raise ScenarioError("missing required key 'announced_rate'", path)
    if "quantity_t_per_year" not in scalars:
        raise ScenarioError("missing required key 'quantity_t_per_year'", path)

    bidders = []
    seen_bidders = set()
    for lineno, fields in tables["bidders"]:
        bidder_id = fields[0].strip()
        if not bidder_id:
            raise ScenarioError("bidder_id must be non-empty", path, lineno)
        if bidder_id in seen_bidders:
            raise ScenarioError(f"duplicate bidder_id {bidder_id!r}", path, lineno)
        seen_bidders.add(bidder_id)
        bidders.append(
            (
                bidder_id,
                _scenario_number(fields[1], "i0", path, lineno),
                _scenario_number(fields[2], "cost_of_capital", path, lineno),
            )
        )

    explicit_path: tuple[float, ...] | None = None
    if tables["price_path"]:
        by_period: dict[int, float] = {}
        for lineno, fields in tables["price_path"]:
            period = int(_scenario_number(fields[0], "period", path, lineno))
            if period in by_period:
                raise ScenarioError(f"duplicate period {period}", path, lineno)
            by_period[period] = _scenario_number(fields[1], "price_usd_per_t", path, lineno)
        periods = sorted(by_period)
        if periods != list(range(1, len(periods) + 1)):
            raise ScenarioError(f"price path periods must run 1..n, got {periods}", path)
        explicit_path = tuple(by_period[p] for p in periods)

    tax_schedule: dict[int, float] | None = None
    if tables["tax_schedule"]:
        tax_schedule = {}
        for lineno, fields in tables["tax_schedule"]:
            period = int(_scenario_number(fields[0], "period", path, lineno))
            if period in tax_schedule:
                raise ScenarioError(f"duplicate period {period}", path, lineno)
            tax_schedule[period] = _scenario_number(fields[1], "tax", path, lineno)

    vpi = scalars.get("vpi")
    if vpi is None and not bidders:
        raise ScenarioError("scenario needs either 'vpi' or a [bidders] section", path)
    initial_price = scalars.get("initial_price")
    horizon = scalars.get("horizon")
    if explicit_path is None and (initial_price is None or horizon is None):
        raise ScenarioError(
            "scenario needs either a [price_path] section or initial_price and horizon", path
        )

    return Scenario(
        announced_rate=scalars["announced_rate"],
        quantity=scalars["quantity_t_per_year"],
        vpi=vpi,
        bidders=tuple(bidders),
        explicit_path=explicit_path,
        initial_price=initial_price,
        drift=scalars.get("drift", 0.0),
        volatility=scalars.get("volatility", 0.0),
        horizon=int(horizon) if horizon is not None else None,
        seed=int(scalars.get("seed", 0)),
        replications=int(scalars.get("replications", 1)),
        tax_constant=scalars.get("tax_per_year", 0.0),
        tax_schedule=tax_schedule,
    )


def _bidding_prices(scenario: Scenario) -> list[float]:
    """Deterministic expected price path the bidders forecast over."""
    if scenario.explicit_path is not None:
        return list(scenario.explicit_path)
    return [
        scenario.initial_price * math.exp(scenario.drift * t) for t in range(scenario.horizon)
    ]


def _scenario_bidders(scenario: Scenario) -> list[Bidder]:
    prices = _bidding_prices(scenario)
    flows = CashFlowSeries(
        base_year=0,
        flows=tuple(
            (t + 1, price * scenario.quantity / USD_PER_MUSD) for t, price in enumerate(prices)
        ),
    )
    return [
        Bidder(
            bidder_id=bidder_id,
            investment=investment,
            cost_of_capital=Rate(cost),
            expected_revenue_path=flows,
        )
        for bidder_id, investment, cost in scenario.bidders
    ]


class AuctionFailed(Exception):
    pass


def _resolve_vpi(scenario: Scenario) -> float:
    """Winning VPI, either given directly or decided by the auction."""
    if scenario.vpi is not None:
        return scenario.vpi
    bids = {
        bidder.bidder_id: equilibrium_bid(bidder, Rate(scenario.announced_rate))
        for bidder in _scenario_bidders(scenario)
    }
    feasible = {bidder_id: bid for bidder_id, bid in bids.items() if bid is not None}
    if not feasible:
        raise AuctionFailed("auction failed: no feasible bids")
    _, winning = run_auction(feasible)
    return winning


def _tax_policy(scenario: Scenario):
    if scenario.tax_schedule is not None:
        return scenario.tax_schedule
    return scenario.tax_constant


def _write_outcome_table(outcome, path: Path) -> None:
    lines = ["period,price,gross_revenue,voluntary_tax,counted_revenue,accrued_pv,status"]
    lines.extend(
        f"{row.period},{row.price!r},{row.gross_revenue!r},{row.voluntary_tax!r},"
        f"{row.counted_revenue!r},{row.accrued_pv!r},{row.status}"
        for row in outcome.rows
    )
    _write_text(path, "\n".join(lines) + "\n")


def _outcome_json(outcome, vpi: float) -> dict:
    return {
        "vpi_target": vpi,
        "duration": outcome.duration,
        "status": outcome.final_state.status.value,
        "accrued_pv": outcome.final_state.accrued_pv,
        "warning": outcome.warning,
        "rows": [
            {
                "period": row.period,
                "price": row.price,
                "gross_revenue": row.gross_revenue,
                "voluntary_tax": row.voluntary_tax,
                "counted_revenue": row.counted_revenue,
                "accrued_pv": row.accrued_pv,
                "status": row.status,
            }
            for row in outcome.rows
        ],
    }


def cmd_simulate_concession(config: RunConfig) -> int:
    """Run the concession over one or many seeded price paths."""
    try:
        scenario = load_scenario(config.scenario_path)
    except DataFileError as exc:
        return _fail(str(exc), 1)
    except OSError as exc:
        return _fail(str(exc), 2)

    try:
        vpi = _resolve_vpi(scenario)
    except AuctionFailed as exc:
        return _fail(str(exc), 1)

    outcomes = []
    for replication in range(scenario.replications):
        if scenario.explicit_path is not None:
            prices = list(scenario.explicit_path)
        else:
            prices = generate_price_path(
                PricePathParams(
                    initial_price=scenario.initial_price,
                    drift=scenario.drift,
                    volatility=scenario.volatility,
                    horizon=scenario.horizon,
                    seed=scenario.seed + replication,
                )
            )
        outcomes.append(
            simulate_concession(
                vpi, prices, scenario.quantity, Rate(scenario.announced_rate), _tax_policy(scenario)
            )
        )

    for index, outcome in enumerate(outcomes):
        if outcome.warning:
            print(f"warning: replication {index}: {outcome.warning}", file=sys.stderr)

    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        if "table" in config.formats:
            _write_outcome_table(outcomes[0], config.out_dir / OUTCOME_TABLE_NAME)
        if "json" in config.formats:
            _write_text(
                config.out_dir / OUTCOME_JSON_NAME,
                json.dumps(_outcome_json(outcomes[0], vpi), sort_keys=True, indent=2) + "\n",
            )
        if scenario.replications > 1:
            lines = ["replication,duration"]
            lines.extend(
                f"{index},{'' if outcome.duration is None else outcome.duration}"
                for index, outcome in enumerate(outcomes)
            )
            _write_text(config.out_dir / HISTOGRAM_NAME, "\n".join(lines) + "\n")
        _write_manifest(
            config.out_dir,
            "simulate-concession",
            inputs={"scenario": str(config.scenario_path)},
            parameters={
                "announced_rate": scenario.announced_rate,
                "formats": sorted(config.formats),
                "quantity_t_per_year": scenario.quantity,
                "replications": scenario.replications,
                "vpi": vpi,
            },
            seed=scenario.seed if scenario.explicit_path is None else None,
        )
    except OSError as exc:
        return _fail(str(exc), 2)
    return 0


def cmd_auction(config: RunConfig) -> int:
    """Compute equilibrium bids for the scenario's bidders and pick a winner."""
    try:
        scenario = load_scenario(config.scenario_path)
    except DataFileError as exc:
        return _fail(str(exc), 1)
    except OSError as exc:
        return _fail(str(exc), 2)
    if not scenario.bidders:
        return _fail(f"{config.scenario_path}: auction requires a [bidders] section", 1)

    bids = {
        bidder.bidder_id: equilibrium_bid(bidder, Rate(scenario.announced_rate))
        for bidder in _scenario_bidders(scenario)
    }
    feasible = {bidder_id: bid for bidder_id, bid in bids.items() if bid is not None}
    if not feasible:
        return _fail("auction failed: no feasible bids", 1)
    winner_id, winning_vpi = run_auction(feasible)

    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        lines = ["bidder_id,bid,winner"]
        for bidder_id in sorted(bids):
            bid = bids[bidder_id]
            bid_text = "no-bid" if bid is None else repr(bid)
            lines.append(f"{bidder_id},{bid_text},{'true' if bidder_id == winner_id else 'false'}")
        _write_text(config.out_dir / AUCTION_TABLE_NAME, "\n".join(lines) + "\n")
        _write_manifest(
            config.out_dir,
            "auction",
            inputs={"scenario": str(config.scenario_path)},
            parameters={
                "announced_rate": scenario.announced_rate,
                "winner": winner_id,
                "winning_vpi": winning_vpi,
            },
            seed=None,
        )
    except OSError as exc:
        return _fail(str(exc), 2)
    return 0


def _parse_formats(text: str) -> frozenset[str]:
    formats = frozenset(part.strip() for part in text.split(",") if part.strip())
    unknown = formats - set(FORMATS)
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown formats: {sorted(unknown)}")
    if not formats:
        raise argparse.ArgumentTypeError("at least one format is required")
    return formats


def _resolve_rates(args) -> tuple[tuple[str, DiscountSpec], ...]:
    custom = [args.rf, args.beta, args.erp, args.country]
    rates: list[tuple[str, DiscountSpec]] = []
    for label in args.rate or []:
        rates.append((label, PRESETS[label]))
    if any(value is not None for value in custom):
        if any(value is None for value in custom):
            raise argparse.ArgumentTypeError(
                "custom rates need all of --rf, --beta, --erp, --country"
            )
        rates.append(("custom", DiscountSpec(args.rf, args.beta, args.erp, args.country)))
    if not rates:
        rates = [(label, PRESETS[label]) for label in ("base", "conservative")]
    labels = [label for label, _ in rates]
    if len(set(labels)) != len(labels):
        raise argparse.ArgumentTypeError(f"duplicate rate labels: {labels}")
    return tuple(rates)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minerent",
        description="Resource-rent analysis and revenue-target concession simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_rate_flags(p):
        p.add_argument("--rate", action="append", choices=sorted(PRESETS), help="preset rate; repeatable")
        p.add_argument("--rf", type=float, help="custom risk-free rate")
        p.add_argument("--beta", type=float, help="custom beta")
        p.add_argument("--erp", type=float, help="custom equity premium")
        p.add_argument("--country", type=float, help="custom country risk")

    analyze = sub.add_parser("analyze", help="rent analysis over a mine directory")
    analyze.add_argument("--mines", required=True, type=Path, help="directory of mine files")
    analyze.add_argument("--market", required=True, type=Path, help="market series file")
    add_rate_flags(analyze)
    analyze.add_argument("--valuation-year", type=int, default=DEFAULT_VALUATION_YEAR)
    analyze.add_argument("--out", required=True, type=Path, help="output directory")
    analyze.add_argument("--format", type=_parse_formats, default=frozenset(FORMATS))

    reconstruct = sub.add_parser("reconstruct", help="backfill pre-history mine years")
    reconstruct.add_argument("--mines", required=True, type=Path)
    reconstruct.add_argument("--market", required=True, type=Path)
    reconstruct.add_argument("--out", required=True, type=Path)

    simulate = sub.add_parser("simulate-concession", help="run a concession scenario")
    simulate.add_argument("--scenario", required=True, type=Path)
    simulate.add_argument("--out", required=True, type=Path)
    simulate.add_argument("--format", type=_parse_formats, default=frozenset(FORMATS))

    auction = sub.add_parser("auction", help="equilibrium bids and winner for a scenario")
    auction.add_argument("--scenario", required=True, type=Path)
    auction.add_argument("--out", required=True, type=Path)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "analyze":
        try:
            rates = _resolve_rates(args)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            return _fail(str(exc), 1)
        config = RunConfig(
            command="analyze",
            mines_dir=args.mines,
            market_path=args.market,
            out_dir=args.out,
            rates=rates,
            valuation_year=args.valuation_year,
            formats=args.format,
        )
        return cmd_analyze(config)
    if args.command == "reconstruct":
        config = RunConfig(
            command="reconstruct", mines_dir=args.mines, market_path=args.market, out_dir=args.out
        )
        return cmd_reconstruct(config)
    if args.command == "simulate-concession":
        config = RunConfig(
            command="simulate-concession",
            scenario_path=args.scenario,
            out_dir=args.out,
            formats=args.format,
        )
        return cmd_simulate_concession(config)
    config = RunConfig(command="auction", scenario_path=args.scenario, out_dir=args.out)
    return cmd_auction(config)


if __name__ == "__main__":
    raise SystemExit(main())
