"""Limit order book and continuous double auction matching.

Orders rest under price-time priority. Whenever the best ask is at or below
the best bid the two best orders trade ``min(q_bid, q_ask)`` at the price of
whichever of the pair was submitted first. All resting orders are cancelled
when the trading period closes.

Prices are integer hundredths of a cent per kWh and quantities integer Wh
(see :mod:`gridmarket.units`).
"""

from __future__ import annotations

import csv
import dataclasses
from bisect import insort
from dataclasses import dataclass
from typing import Iterable, TextIO

from .units import fmt_kwh, fmt_price

BID = "bid"
ASK = "ask"
SIDES = (BID, ASK)

TRADE_LOG_HEADER = ("period", "time", "buyer", "seller", "price_c_per_kwh", "qty_kwh")


class MarketError(Exception):
    pass


class MalformedOrder(MarketError, ValueError):
    pass


class MarketClosed(MarketError):
    pass


class SelfTrade(MarketError):
    pass


@dataclass
class Order:
    id: int
    trader: str
    side: str
    price: int
    quantity: int
    time: int
    period: int = 0


@dataclass(frozen=True)
class Trade:
    buyer: str
    seller: str
    price: int
    quantity: int
    period: int
    time: int
    bid_id: int = -1
    ask_id: int = -1


def _bid_key(o: Order):
    return (-o.price, o.time)


def _ask_key(o: Order):
    return (o.price, o.time)


class OrderBook:
    """Order book for one trading period at a time.

    A trader holds at most one resting order per side; a new order on the
    same side replaces the old one. Time ordinals must strictly increase
    within a period.
    """

    def __init__(self, period: int = 0):
        self.period = period
        self.is_open = True
        self.bids: list[Order] = []
        self.asks: list[Order] = []
        self._last_time: int | None = None

    def open_period(self, period: int) -> None:
        if self.is_open:
            raise MarketError(f"period {self.period} is still open")
        self.period = period
        self.is_open = True
        self._last_time = None

    def resting(self, trader: str, side: str) -> Order | None:
        for o in self.bids if side == BID else self.asks:
            if o.trader == trader:
                return o
        return None

    def _validate(self, order: Order) -> None:
        if not self.is_open:
            raise MarketClosed(f"period {self.period} is closed")
        if order.side not in SIDES:
            raise MalformedOrder(f"unknown side {order.side!r}")
        if order.quantity <= 0:
            raise MalformedOrder(f"order {order.id}: quantity must be positive, got {order.quantity}")
        if order.price < 0:
            raise MalformedOrder(f"order {order.id}: negative price {order.price}")
        if order.period != self.period:
            raise MarketClosed(f"order {order.id} targets period {order.period}, open period is {self.period}")
        if self._last_time is not None and order.time <= self._last_time:
            raise MalformedOrder(f"order {order.id}: time {order.time} does not follow {self._last_time}")

    def submit(self, order: Order) -> list[Trade]:
        """Insert ``order`` and match until the book is no longer crossed.

        Returns the trades in execution order. The caller's ``order`` object
        is not mutated.
        """
        self._validate(order)
        own = self.resting(order.trader, ASK if order.side == BID else BID)
        if own is not None and (
            (order.side == BID and own.price <= order.price) or (order.side == ASK and own.price >= order.price)
        ):
            raise SelfTrade(f"order {order.id} would cross trader {order.trader}'s own resting order {own.id}")
        self._last_time = order.time

        stale = self.resting(order.trader, order.side)
        if stale is not None:
            (self.bids if order.side == BID else self.asks).remove(stale)
        order = dataclasses.replace(order)
        if order.side == BID:
            insort(self.bids, order, key=_bid_key)
        else:
            insort(self.asks, order, key=_ask_key)

        trades = []
        while self.bids and self.asks and self.asks[0].price <= self.bids[0].price:
            b, s = self.bids[0], self.asks[0]
            qty = min(b.quantity, s.quantity)
            price = b.price if b.time <= s.time else s.price
            trades.append(Trade(b.trader, s.trader, price, qty, self.period, order.time, b.id, s.id))
            b.quantity -= qty
            s.quantity -= qty
            if b.quantity == 0:
                self.bids.pop(0)
            if s.quantity == 0:
                self.asks.pop(0)
        return trades

    def best_quotes(self) -> tuple[int | None, int | None]:
        return (
            self.bids[0].price if self.bids else None,
            self.asks[0].price if self.asks else None,
        )

    def close_period(self) -> list[Order]:
        """Cancel and return every resting order; the period becomes closed."""
        if not self.is_open:
            raise MarketClosed(f"period {self.period} is already closed")
        residual = self.bids + self.asks
        self.bids = []
        self.asks = []
        self.is_open = False
        return residual


def write_trade_log(trades: Iterable[Trade], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRADE_LOG_HEADER)
    for t in trades:
        w.writerow([t.period, t.time, t.buyer, t.seller, fmt_price(t.price), fmt_kwh(t.quantity)])
