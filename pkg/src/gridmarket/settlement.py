"""Per-period settlement of P2P trades against the retail tariff.

Every household's final shortfall is covered by P2P purchases plus retail
imports at the period's ToU rate; its final surplus by P2P sales plus
exports at the FiT. Value captured is measured against that retail
baseline: a buyer gains ``(tou - price) * qty`` per purchase and a seller
``(price - fit) * qty`` per sale, so the two always sum to
``(tou - fit) * qty`` whatever the trade price.

All quantities are integers: energy in Wh, prices in 1/100 c/kWh, money in
1e-5 c (see :mod:`gridmarket.units`).
"""

from __future__ import annotations

import csv
import random
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

from .market import Trade
from .units import MONEY_SCALE, fmt_cents, fmt_kwh, price_units

PERIODS = 24


class SettlementError(ValueError):
    pass


@dataclass(frozen=True)
class Tariff:
    tou: tuple[int, ...]  # price units per period
    fit: int

    def __post_init__(self):
        if len(self.tou) == 0:
            raise SettlementError("empty ToU schedule")
        if min(self.tou) <= 0 or self.fit <= 0:
            raise SettlementError("all tariff rates must be positive")
        if not self.fit < min(self.tou):
            raise SettlementError(f"FiT {self.fit} must be below every ToU rate")

    @classmethod
    def from_rates(cls, tou_c: Sequence[float], fit_c: float) -> "Tariff":
        return cls(tuple(price_units(x) for x in tou_c), price_units(fit_c))

    def tou_c(self, period: int) -> float:
        return self.tou[period] / 100

    @property
    def fit_c(self) -> float:
        return self.fit / 100


def default_tariff(
    peak: float = 49.24,
    shoulder: float = 20.9,
    offpeak: float = 15.1,
    fit: float = 6.1,
) -> Tariff:
    """Peak 14:00-20:00, shoulder 07:00-14:00 and 20:00-22:00, off-peak otherwise.

    Peak and FiT are the published figures; the shoulder and off-peak rates
    are synthetic defaults.
    """
    rates = []
    for h in range(PERIODS):
        if 14 <= h < 20:
            rates.append(peak)
        elif 7 <= h < 14 or 20 <= h < 22:
            rates.append(shoulder)
        else:
            rates.append(offpeak)
    return Tariff.from_rates(rates, fit)


@dataclass
class LedgerEntry:
    household: str
    period: int
    p2p_bought: int = 0
    p2p_sold: int = 0
    retail_bought: int = 0
    fit_sold: int = 0
    dispatch_adjustment: int = 0
    cash_flow: int = 0
    buyer_value: int = 0
    seller_value: int = 0


@dataclass
class SettlementLedger:
    entries: dict[tuple[str, int], LedgerEntry] = field(default_factory=dict)
    retailer_net: int = 0  # money received by the retailer
    p2p_energy: int = 0
    p2p_value_pool: int = 0  # sum over trades of (tou - fit) * qty

    def entry(self, household: str, period: int) -> LedgerEntry:
        key = (household, period)
        if key not in self.entries:
            self.entries[key] = LedgerEntry(household, period)
        return self.entries[key]

    def households(self) -> list[str]:
        return sorted({h for h, _ in self.entries})

    def rows(self) -> list[LedgerEntry]:
        return [self.entries[k] for k in sorted(self.entries, key=lambda k: (k[1], k[0]))]

    def total(self, attr: str, household: str | None = None) -> int:
        return sum(getattr(e, attr) for e in self.entries.values() if household is None or e.household == household)


def settle_period(
    ledger: SettlementLedger,
    trades: Iterable[Trade],
    shortfall: Mapping[str, int],
    surplus: Mapping[str, int],
    tariff: Tariff,
    period: int,
) -> list[LedgerEntry]:
    """Book one period's trades plus the retail fallback for what is left.

    ``shortfall`` and ``surplus`` are the residual Wh per household that the
    market did not clear; both must be non-negative.
    """
    tou, fit = tariff.tou[period], tariff.fit
    touched = {}
    for hh, q in list(shortfall.items()) + list(surplus.items()):
        if q < 0:
            raise SettlementError(f"period {period}: negative residual {q} Wh for {hh}")
    for t in trades:
        if t.period != period:
            raise SettlementError(f"trade for period {t.period} settled in period {period}")
        money = t.price * t.quantity
        b = touched[t.buyer] = ledger.entry(t.buyer, period)
        s = touched[t.seller] = ledger.entry(t.seller, period)
        b.p2p_bought += t.quantity
        b.cash_flow -= money
        b.buyer_value += (tou - t.price) * t.quantity
        s.p2p_sold += t.quantity
        s.cash_flow += money
        s.seller_value += (t.price - fit) * t.quantity
        ledger.p2p_energy += t.quantity
        ledger.p2p_value_pool += (tou - fit) * t.quantity
    for hh, q in shortfall.items():
        e = touched[hh] = ledger.entry(hh, period)
        e.retail_bought += q
        e.cash_flow -= tou * q
        ledger.retailer_net += tou * q
    for hh, q in surplus.items():
        e = touched[hh] = ledger.entry(hh, period)
        e.fit_sold += q
        e.cash_flow += fit * q
        ledger.retailer_net -= fit * q
    return list(touched.values())


@dataclass(frozen=True)
class DispatchRecord:
    household: str
    period: int
    traded: int  # Wh sold in the market
    dispatched: int  # Wh actually delivered

    def __post_init__(self):
        if self.dispatched < 0:
            raise SettlementError(f"{self.household}: negative dispatched energy")

    @property
    def mismatch(self) -> int:
        return self.dispatched - self.traded


@dataclass(frozen=True)
class MismatchPolicy:
    """Rates applied to delivery errors: 'tou', 'fit' or 'none'."""

    shortfall_rate: str = "tou"
    excess_rate: str = "fit"

    def rate(self, which: str, tariff: Tariff, period: int) -> int:
        name = self.shortfall_rate if which == "short" else self.excess_rate
        if name == "tou":
            return tariff.tou[period]
        if name == "fit":
            return tariff.fit
        if name == "none":
            return 0
        raise SettlementError(f"unknown mismatch rate {name!r}")


def reconcile_dispatch(
    record: DispatchRecord,
    tariff: Tariff,
    period: int,
    policy: MismatchPolicy = MismatchPolicy(),
) -> int:
    """Seller cash adjustment for delivering more or less than it sold.

    Under-delivery is bought back from the retailer on the buyer's behalf,
    over-delivery is paid like any other export.
    """
    m = record.mismatch
    if m < 0:
        return m * policy.rate("short", tariff, period)
    if m > 0:
        return m * policy.rate("excess", tariff, period)
    return 0


def apply_dispatch(ledger: SettlementLedger, record: DispatchRecord, adjustment: int) -> None:
    e = ledger.entry(record.household, record.period)
    e.dispatch_adjustment += adjustment
    e.cash_flow += adjustment
    ledger.retailer_net -= adjustment


def draw_mismatch(rng: random.Random, sigma: float, bound: float = 0.1) -> float:
    """Relative delivery error ~ Normal(0, sigma) truncated to [-bound, bound]."""
    if sigma <= 0:
        return 0.0
    while True:
        e = rng.gauss(0.0, sigma)
        if -bound <= e <= bound:
            return e


@dataclass
class ValueSummary:
    buyer: int
    seller: int
    per_household: dict[str, tuple[int, int]]
    n_households: int
    days_per_year: int = 365

    @property
    def total(self) -> int:
        return self.buyer + self.seller

    def shares(self) -> tuple[float, float]:
        """Buyer and seller share of the value captured, in percent."""
        if self.total <= 0:
            return (0.0, 0.0)
        b = 100.0 * self.buyer / self.total
        return (b, 100.0 - b)

    def format_table(self) -> str:
        def dollars(money: int, scale: Fraction = Fraction(1)) -> str:
            # exact, round half away from zero
            d = Fraction(money) * scale / (MONEY_SCALE * 100)
            c = int(abs(d) * 100 + Fraction(1, 2))
            sign = "-" if d < 0 and c else ""
            return f"{sign}{c // 100}.{c % 100:02d}".rjust(10)

        year = Fraction(self.days_per_year)
        per_hh = year / self.n_households if self.n_households else Fraction(0)
        bs, ss = self.shares()
        rows = [
            f"{'':42s}{'Buyer':>10s}{'Seller':>10s}{'Total':>10s}",
            f"{'Daily Value ($)':42s}{dollars(self.buyer)}{dollars(self.seller)}{dollars(self.total)}",
            f"{'Expected Annual Value ($)':42s}"
            f"{dollars(self.buyer, year)}{dollars(self.seller, year)}{dollars(self.total, year)}",
            f"{'Expected Annual Value per Household ($)':42s}"
            f"{dollars(self.buyer, per_hh)}{dollars(self.seller, per_hh)}{dollars(self.total, per_hh)}",
            f"{'Proportion of Value Captured (%)':42s}{bs:10.2f}{ss:10.2f}{(bs + ss):10.2f}",
            "",
            f"Annual figures are a projection: daily value x {year}.",
            "",
            f"{'Household':12s}{'Buyer ($)':>12s}{'Seller ($)':>12s}",
        ]
        for hh, (b, s) in self.per_household.items():
            rows.append(f"{hh:12s}{b / MONEY_SCALE / 100:12.2f}{s / MONEY_SCALE / 100:12.2f}")
        return "\n".join(rows) + "\n"


def summarize_value(ledger: SettlementLedger, households: Sequence[str] | None = None) -> ValueSummary:
    hhs = list(households) if households is not None else ledger.households()
    per = {h: (ledger.total("buyer_value", h), ledger.total("seller_value", h)) for h in hhs}
    return ValueSummary(
        buyer=ledger.total("buyer_value"),
        seller=ledger.total("seller_value"),
        per_household=per,
        n_households=len(hhs),
    )


LEDGER_HEADER = (
    "period",
    "household",
    "p2p_bought_kwh",
    "p2p_sold_kwh",
    "retail_bought_kwh",
    "fit_sold_kwh",
    "dispatch_adjustment_c",
    "cash_flow_c",
    "buyer_value_c",
    "seller_value_c",
)


def write_ledger(ledger: SettlementLedger, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(LEDGER_HEADER)
    for e in ledger.rows():
        w.writerow(
            [
                e.period,
                e.household,
                fmt_kwh(e.p2p_bought),
                fmt_kwh(e.p2p_sold),
                fmt_kwh(e.retail_bought),
                fmt_kwh(e.fit_sold),
                fmt_cents(e.dispatch_adjustment),
                fmt_cents(e.cash_flow),
                fmt_cents(e.buyer_value),
                fmt_cents(e.seller_value),
            ]
        )

