"""Zero-Intelligence-Plus trader agents.

Each agent quotes from a limit price (buyers: the retail ToU rate of the
period, sellers: the feed-in tariff) and adapts its quote after every market
event. The direction of each adjustment follows the classic ZIP rules; the
size of the step is Widrow-Hoff with momentum towards a randomly perturbed
copy of the event price.

Quotes and limits are kept as floats in c/kWh. They are rounded to integer
price units only when an order is placed, always towards the trader's own
limit so a buyer never bids above its ToU rate and a seller never asks below
the FiT.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .market import ASK, BID, Order
from .units import PRICE_SCALE

BUYER = "buyer"
SELLER = "seller"
INACTIVE = "inactive"


@dataclass
class ZipParams:
    learn_rate: float = 0.3
    momentum: float = 0.05
    perturb_rel: float = 0.05  # R drawn from [1, 1 + perturb_rel]
    perturb_abs: float = 0.05  # A drawn from [0, perturb_abs] x event price
    buyer_margin: tuple[float, float] = (-0.35, -0.05)
    seller_margin: tuple[float, float] = (0.05, 0.35)

    def __post_init__(self):
        if not 0.0 < self.learn_rate <= 1.0:
            raise ValueError(f"learn_rate must be in (0, 1], got {self.learn_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        lo, hi = self.buyer_margin
        if not -1.0 <= lo <= hi <= 0.0:
            raise ValueError(f"buyer margins must lie in [-1, 0], got {self.buyer_margin}")
        lo, hi = self.seller_margin
        if not 0.0 <= lo <= hi:
            raise ValueError(f"seller margins must be non-negative, got {self.seller_margin}")


@dataclass
class MarketEvent:
    last_order_side: str
    last_price: float
    matched: bool


@dataclass
class TraderState:
    """Mutable ZIP agent state.

    ``quote_price`` is the live quote for the current role. Quotes for a role
    not currently held are remembered in ``dormant_quotes`` so a household
    that sells by day and buys by night keeps what it learned on each side.
    """

    trader: str
    role: str = INACTIVE
    limit_price: float = 0.0
    quote_price: float = 0.0
    momentum_term: float = 0.0
    params: ZipParams = field(default_factory=ZipParams)
    rng: random.Random = field(default_factory=random.Random, repr=False, compare=False)
    dormant_quotes: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        if self.limit_price == 0:
            return 0.0
        return self.quote_price / self.limit_price - 1.0

    @property
    def learn_rate(self) -> float:
        return self.params.learn_rate

    @property
    def momentum(self) -> float:
        return self.params.momentum


def new_trader(trader: str, seed: int, params: ZipParams | None = None) -> TraderState:
    # str seeds go through sha512, so the stream is stable across processes
    return TraderState(trader, params=params or ZipParams(), rng=random.Random(f"{seed}:{trader}"))


def _clamp(state: TraderState, price: float) -> float:
    if state.role == BUYER:
        return min(max(price, 0.0), state.limit_price)
    return max(price, state.limit_price)


def set_limits(state: TraderState, tou: float, fit: float, role: str) -> TraderState:
    """Set the role and limit price for a new trading period.

    The quote carries over from the last period the agent held this role,
    clamped into the new feasible range. The first time a role is taken the
    quote is drawn from the initial margin range.
    """
    if tou <= fit:
        raise ValueError(f"ToU rate {tou} must exceed FiT {fit}")
    if role not in (BUYER, SELLER, INACTIVE):
        raise ValueError(f"unknown role {role!r}")
    if state.role != INACTIVE:
        state.dormant_quotes[state.role] = state.quote_price
    if role != state.role:
        state.momentum_term = 0.0
    state.role = role
    if role == INACTIVE:
        return state
    state.limit_price = tou if role == BUYER else fit
    quote = state.dormant_quotes.get(role)
    if quote is None:
        lo, hi = state.params.buyer_margin if role == BUYER else state.params.seller_margin
        quote = state.limit_price * (1.0 + state.rng.uniform(lo, hi))
    state.quote_price = _clamp(state, quote)
    return state


def direction(state: TraderState, event: MarketEvent) -> int:
    """+1 to raise the quote, -1 to lower it, 0 when no rule fires.

    The rules compare the price the trader would actually submit, so a quote
    that rounds onto the event price counts as equal to it.
    """
    if state.role == INACTIVE:
        return 0
    q, p = order_price(state) / PRICE_SCALE, event.last_price
    if state.role == BUYER:
        if event.matched:
            if q >= p:
                return -1
            if event.last_order_side == ASK and q <= p:
                return 1
        elif event.last_order_side == BID and q <= p:
            return 1
    elif state.role == SELLER:
        if event.matched:
            if q <= p:
                return 1
            if event.last_order_side == BID and q >= p:
                return -1
        elif event.last_order_side == ASK and q >= p:
            return -1
    return 0


def update_on_event(state: TraderState, event: MarketEvent) -> TraderState:
    """Adapt the quote to one market event, in place; returns ``state``."""
    if state.role == INACTIVE:
        raise ValueError(f"trader {state.trader} is inactive this period")
    d = direction(state, event)
    if d == 0:
        return state
    prm = state.params
    p = event.last_price
    rel = prm.perturb_rel * state.rng.random()
    shift = prm.perturb_abs * p * state.rng.random()
    target = p * (1.0 + d * rel) + d * shift
    delta = prm.learn_rate * (target - state.quote_price)
    step = prm.momentum * state.momentum_term + (1.0 - prm.momentum) * delta
    if step * d < 0:
        # stale momentum would push against the rule that fired
        step = (1.0 - prm.momentum) * delta
    state.momentum_term = step
    state.quote_price = _clamp(state, state.quote_price + step)
    return state


def order_price(state: TraderState) -> int:
    """Quote in integer price units, rounded towards the limit."""
    eps = 1e-9
    if state.role == BUYER:
        return min(math.floor(state.quote_price * PRICE_SCALE + eps), math.floor(state.limit_price * PRICE_SCALE + eps))
    return max(math.ceil(state.quote_price * PRICE_SCALE - eps), math.ceil(state.limit_price * PRICE_SCALE - eps))


def make_order(state: TraderState, residual_wh: int, time: int, order_id: int = 0, period: int = 0) -> Order | None:
    """An order for the whole remaining shortfall or surplus, or None."""
    if residual_wh < 0:
        raise ValueError(f"residual energy must be non-negative, got {residual_wh}")
    if residual_wh == 0 or state.role == INACTIVE:
        return None
    side = BID if state.role == BUYER else ASK
    return Order(order_id, state.trader, side, order_price(state), residual_wh, time, period)
