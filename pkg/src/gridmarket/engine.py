"""One simulated trading day.

For each hourly period the engine derives every household's surplus or
deficit (from its HEMS schedule, or raw PV minus load), assigns market roles,
runs a continuous double auction session between ZIP agents, settles the
residuals at retail, optionally perturbs delivery, and solves the feeder
power flow for the resulting household injections.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import feeder as fd
from .config import INACTIVE_OVERRIDE, ScenarioConfig
from .hems import NO_BATTERY, DispatchSchedule, HemsError, solve_schedule, surplus_deficit, write_schedule
from .market import OrderBook, Trade, write_trade_log
from .profiles import PERIODS, Profiles, generate_synthetic_profiles, load_profiles
from .settlement import (
    DispatchRecord,
    SettlementLedger,
    apply_dispatch,
    draw_mismatch,
    reconcile_dispatch,
    settle_period,
    summarize_value,
    write_ledger,
)
from .traders import BUYER, INACTIVE, SELLER, MarketEvent, make_order, new_trader, set_limits, update_on_event
from .units import fmt_kwh, fmt_price, wh

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    def __init__(self, period: int | None, cause: str):
        where = f"period {period}: " if period is not None else ""
        super().__init__(f"{where}{cause}")
        self.period = period


@dataclass(frozen=True)
class QuoteSnapshot:
    period: int
    event: int
    trader: str
    side: str
    price: int
    best_bid: int | None
    best_ask: int | None


@dataclass
class DayResult:
    trades: list[Trade]
    ledger: SettlementLedger
    powerflow: list[fd.PowerFlowResult]
    schedules: dict[str, DispatchSchedule]
    quotes_timeline: list[QuoteSnapshot]
    net: dict[str, list[int]]  # signed Wh per period, + = surplus
    injections: list[dict[str, float]]  # W per period, + = consumption
    residual_quotes: list[tuple[int | None, int | None]] = field(default_factory=list)


def resolve_profiles(config: ScenarioConfig) -> Profiles:
    """Profiles from the configured file, or synthetic ones from the seed."""
    if config.profiles is not None:
        return load_profiles(config.profiles, config.pv_capacity())
    raw = generate_synthetic_profiles(config.effective_profile_seed, [(h.id, bool(h.pv_kw)) for h in config.households])
    return {h.id: (raw[h.id][0], [(h.pv_kw or 0.0) * v for v in raw[h.id][1]]) for h in config.households}


def household_net(config: ScenarioConfig, profiles: Profiles) -> tuple[dict[str, list[int]], dict[str, DispatchSchedule]]:
    """Signed Wh per household and period, plus the HEMS schedules."""
    tou = [config.tariff.tou_c(t) for t in range(PERIODS)]
    net, schedules = {}, {}
    for h in config.households:
        if h.id not in profiles:
            raise SimulationError(None, f"no profile for household {h.id}")
        load, pv = profiles[h.id]
        if len(load) != PERIODS or len(pv) != PERIODS:
            raise SimulationError(None, f"household {h.id}: profile must cover {PERIODS} periods")
        if h.hems:
            try:
                s = solve_schedule(h.battery or NO_BATTERY, load, pv, tou, config.tariff.fit_c)
            except HemsError as exc:
                raise SimulationError(None, f"HEMS for {h.id}: {exc}") from exc
            schedules[h.id] = s
            net[h.id] = [wh(x) for x in surplus_deficit(s)]
        else:
            net[h.id] = [wh(p) - wh(x) for x, p in zip(load, pv)]
    return net, schedules


def run_session(
    book: OrderBook,
    traders: Mapping,
    need: dict[str, int],
    rng: random.Random,
    events: int,
    next_id,
    timeline: list[QuoteSnapshot] | None = None,
) -> list[Trade]:
    """Drive ``events`` submissions in the open period of ``book``.

    Each event picks one active trader with unfilled need uniformly at
    random, which (re)quotes its whole remaining need. Every active agent
    then observes the outcome. ``need`` is decremented in place by fills.
    """
    active = [t for t, s in traders.items() if s.role != INACTIVE]
    trades: list[Trade] = []
    for k in range(1, events + 1):
        eligible = [t for t in active if need[t] > 0]
        if not eligible:
            break
        who = eligible[rng.randrange(len(eligible))]
        order = make_order(traders[who], need[who], k, next(next_id), book.period)
        fills = book.submit(order)
        if fills:
            observed = [MarketEvent(order.side, f.price / 100, True) for f in fills]
            for f in fills:
                need[f.buyer] -= f.quantity
                need[f.seller] -= f.quantity
            trades.extend(fills)
        else:
            observed = [MarketEvent(order.side, order.price / 100, False)]
        for ev in observed:
            for t in active:
                update_on_event(traders[t], ev)
        if timeline is not None:
            bb, ba = book.best_quotes()
            timeline.append(QuoteSnapshot(book.period, k, who, order.side, order.price, bb, ba))
    return trades


def run_day(config: ScenarioConfig, profiles: Profiles | None = None) -> DayResult:
    if profiles is None:
        profiles = resolve_profiles(config)
    tariff = config.tariff
    if len(tariff.tou) != PERIODS:
        raise SimulationError(None, f"tariff must have {PERIODS} ToU rates")
    net, schedules = household_net(config, profiles)
    ids = [h.id for h in config.households]
    traders = {
        h.id: new_trader(h.id, config.seed if h.seed is None else h.seed, config.zip) for h in config.households
    }
    roles_override = {h.id: h.roles for h in config.households}
    market_rng = random.Random(f"{config.seed}:market")
    dispatch_rng = random.Random(f"{config.seed}:dispatch")
    counter = iter(range(1, 1 << 62))

    ledger = SettlementLedger()
    book = OrderBook(0)
    book.close_period()
    all_trades: list[Trade] = []
    timeline: list[QuoteSnapshot] = []
    residual_quotes = []
    flows: list[fd.PowerFlowResult] = []
    injections: list[dict[str, float]] = []

    for t in range(PERIODS):
        need = {}
        for hh in ids:
            x = net[hh][t]
            if roles_override[hh].get(t) == INACTIVE_OVERRIDE or x == 0:
                role = INACTIVE
            else:
                role = SELLER if x > 0 else BUYER
            set_limits(traders[hh], tariff.tou_c(t), tariff.fit_c, role)
            need[hh] = abs(x) if role != INACTIVE else 0
        book.open_period(t)
        trades = run_session(book, traders, need, market_rng, config.events_per_period, counter, timeline)
        residual_quotes.append(book.best_quotes())
        book.close_period()
        all_trades.extend(trades)

        shortfall, surplus = {}, {}
        for hh in ids:
            x = net[hh][t]
            left = need[hh] if traders[hh].role != INACTIVE else abs(x)
            if x < 0:
                shortfall[hh] = left
            elif x > 0:
                surplus[hh] = left
        settle_period(ledger, trades, shortfall, surplus, tariff, t)

        delivered = {hh: net[hh][t] for hh in ids}
        if config.mismatch:
            sold = {}
            for tr in trades:
                sold[tr.seller] = sold.get(tr.seller, 0) + tr.quantity
            for hh in ids:
                if hh not in sold:
                    continue
                e = draw_mismatch(dispatch_rng, config.mismatch_sigma)
                rec = DispatchRecord(hh, t, sold[hh], max(0, round(sold[hh] * (1 + e))))
                apply_dispatch(ledger, rec, reconcile_dispatch(rec, tariff, t, config.mismatch_policy))
                delivered[hh] += rec.mismatch

        # Wh over a one-hour period is the mean power in W
        inj = {hh: float(-delivered[hh]) for hh in ids}
        res = fd.solve_powerflow(config.feeder, inj)
        if not res.converged:
            raise SimulationError(t, f"power flow did not converge (mismatch {res.mismatch:.3g} V)")
        flows.append(res)
        injections.append(inj)
        log.debug("period %d: %d trades, %s Wh traded", t, len(trades), sum(x.quantity for x in trades))

    return DayResult(all_trades, ledger, flows, schedules, timeline, net, injections, residual_quotes)


QUOTES_HEADER = ("period", "event", "trader", "side", "order_price", "best_bid", "best_ask")


def _p(x: int | None) -> str:
    return "" if x is None else fmt_price(x)


def write_quotes(result: DayResult, out) -> None:
    """Per-event best quotes; event ``close`` rows hold the unmatched book."""
    out.write(",".join(QUOTES_HEADER) + "\n")
    by_period: dict[int, list[QuoteSnapshot]] = {}
    for q in result.quotes_timeline:
        by_period.setdefault(q.period, []).append(q)
    for t, (bb, ba) in enumerate(result.residual_quotes):
        for q in by_period.get(t, []):
            out.write(f"{t},{q.event},{q.trader},{q.side},{fmt_price(q.price)},{_p(q.best_bid)},{_p(q.best_ask)}\n")
        out.write(f"{t},close,,,,{_p(bb)},{_p(ba)}\n")


def format_summary(config: ScenarioConfig, result: DayResult) -> str:
    ledger = result.ledger
    summary = summarize_value(ledger, [h.id for h in config.households])
    traded = sum(t.quantity for t in result.trades)
    imported = ledger.total("retail_bought")
    exported = ledger.total("fit_sold")
    loss_wh = sum(r.total_losses for r in result.powerflow)
    prices = [t.price for t in result.trades]
    lines = [
        f"seed {config.seed}, {len(config.households)} households, {config.events_per_period} events per period",
        f"trades {len(result.trades)}, P2P energy {fmt_kwh(traded)} kWh",
        f"retail import {fmt_kwh(imported)} kWh, FiT export {fmt_kwh(exported)} kWh",
    ]
    if prices:
        lines.append(
            f"trade price min {fmt_price(min(prices))} median {fmt_price(int(np.median(prices)))} "
            f"max {fmt_price(max(prices))} c/kWh"
        )
    lines += [f"feeder losses {loss_wh / 1000:.3f} kWh", "", summary.format_table()]
    return "\n".join(lines)


def write_outputs(config: ScenarioConfig, result: DayResult, out_dir: str | Path) -> list[Path]:
    """Write every report to ``out_dir``; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def open_(name):
        p = out_dir / name
        written.append(p)
        return open(p, "w", newline="")

    with open_("trades.csv") as f:
        write_trade_log(result.trades, f)
    with open_("ledger.csv") as f:
        write_ledger(result.ledger, f)
    with open_("quotes.csv") as f:
        write_quotes(result, f)
    with open_("powerflow.csv") as f:
        fd.write_powerflow(list(enumerate(result.powerflow)), f)
    for hh, s in result.schedules.items():
        with open_(f"schedule_{hh}.csv") as f:
            write_schedule(s, f)
    with open_("summary.txt") as f:
        f.write(format_summary(config, result))
    return written


__all__ = [
    "DayResult",
    "QuoteSnapshot",
    "SimulationError",
    "format_summary",
    "household_net",
    "resolve_profiles",
    "run_day",
    "run_session",
    "write_outputs",
    "write_quotes",
]
