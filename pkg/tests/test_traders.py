import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridmarket.market import ASK, BID
from gridmarket.traders import (
    BUYER,
    SELLER,
    MarketEvent,
    ZipParams,
    direction,
    make_order,
    new_trader,
    set_limits,
    update_on_event,
)


def trader(role, quote, limit=None, seed=0):
    s = new_trader("t", seed)
    set_limits(s, 49.24, 6.1, role)
    if limit is not None:
        s.limit_price = limit
    s.quote_price = quote
    return s


def test_buyer_above_trade_price_decreases():
    s = trader(BUYER, 12.0)
    update_on_event(s, MarketEvent(ASK, 10.0, True))
    assert s.quote_price < 12.0


def test_buyer_ignores_unmatched_sell():
    s = trader(BUYER, 8.0)
    update_on_event(s, MarketEvent(ASK, 9.0, False))
    assert s.quote_price == 8.0


@pytest.mark.parametrize(
    "role, quote, event, expected",
    [
        (BUYER, 12.0, MarketEvent(BID, 10.0, True), -1),
        (BUYER, 10.0, MarketEvent(BID, 10.0, True), -1),
        (BUYER, 8.0, MarketEvent(ASK, 10.0, True), 1),
        (BUYER, 8.0, MarketEvent(BID, 10.0, True), 0),
        (BUYER, 8.0, MarketEvent(BID, 10.0, False), 1),
        (BUYER, 12.0, MarketEvent(BID, 10.0, False), 0),
        (BUYER, 8.0, MarketEvent(ASK, 10.0, False), 0),
        (SELLER, 8.0, MarketEvent(ASK, 10.0, True), 1),
        (SELLER, 10.0, MarketEvent(ASK, 10.0, True), 1),
        (SELLER, 12.0, MarketEvent(BID, 10.0, True), -1),
        (SELLER, 12.0, MarketEvent(ASK, 10.0, True), 0),
        (SELLER, 12.0, MarketEvent(ASK, 10.0, False), -1),
        (SELLER, 8.0, MarketEvent(ASK, 10.0, False), 0),
        (SELLER, 12.0, MarketEvent(BID, 10.0, False), 0),
    ],
)
def test_rule_table(role, quote, event, expected):
    assert direction(trader(role, quote), event) == expected


def test_rule_compares_submitted_price():
    # 4.998 rounds down to a 4.99 bid; its own unmatched bid must still lift it
    s = trader(BUYER, 4.998, limit=20.0)
    assert direction(s, MarketEvent(BID, 4.99, False)) == 1
    s = trader(SELLER, 5.001, limit=5.0)
    assert direction(s, MarketEvent(ASK, 5.01, False)) == -1


def test_set_limits_from_tariff():
    s = new_trader("h4", 1)
    set_limits(s, 49.24, 6.1, BUYER)
    assert s.limit_price == 49.24
    assert -0.35 <= s.margin <= -0.05
    s2 = new_trader("h2", 1)
    set_limits(s2, 49.24, 6.1, SELLER)
    assert s2.limit_price == 6.1
    assert 0.05 <= s2.margin <= 0.35 + 1e-12


def test_stale_quote_clamped_to_new_limit():
    s = trader(BUYER, 55.0, limit=60.0)
    set_limits(s, 20.9, 6.1, BUYER)
    assert s.quote_price == 20.9


def test_degenerate_tariff_rejected():
    with pytest.raises(ValueError):
        set_limits(new_trader("x", 0), 6.1, 6.1, BUYER)


def test_role_switch_remembers_each_side():
    s = trader(SELLER, 7.0)
    set_limits(s, 15.1, 6.1, BUYER)
    buy_quote = s.quote_price
    assert buy_quote <= 15.1
    set_limits(s, 20.9, 6.1, SELLER)
    assert s.quote_price == 7.0
    set_limits(s, 15.1, 6.1, BUYER)
    assert s.quote_price == buy_quote


def test_inactive_update_rejected():
    s = new_trader("x", 0)
    with pytest.raises(ValueError):
        update_on_event(s, MarketEvent(BID, 5.0, False))


def test_make_order():
    s = trader(BUYER, 7.5)
    o = make_order(s, 3000, time=4, order_id=9, period=2)
    assert (o.side, o.price, o.quantity, o.time, o.period, o.id) == (BID, 750, 3000, 4, 2, 9)
    assert make_order(trader(SELLER, 7.0), 0, time=1) is None
    assert make_order(new_trader("x", 0), 1000, time=1) is None
    with pytest.raises(ValueError):
        make_order(s, -1, time=1)


def test_order_price_rounds_towards_limit():
    b = trader(BUYER, 49.24)
    assert make_order(b, 1, 1).price == 4924
    b.quote_price = 10.129
    assert make_order(b, 1, 1).price == 1012
    s = trader(SELLER, 6.1)
    assert make_order(s, 1, 1).price == 610
    s.quote_price = 6.101
    assert make_order(s, 1, 1).price == 611


def test_params_validated():
    with pytest.raises(ValueError):
        ZipParams(learn_rate=0.0)
    with pytest.raises(ValueError):
        ZipParams(momentum=1.0)


def test_same_seed_same_trajectory():
    def run(seed):
        s = trader(BUYER, 30.0, seed=seed)
        out = []
        for k in range(50):
            update_on_event(s, MarketEvent(BID if k % 3 else ASK, 10.0 + k % 7, k % 2 == 0))
            out.append(s.quote_price)
        return out

    assert run(3) == run(3)
    assert run(3) != run(4)


events = st.builds(
    MarketEvent,
    st.sampled_from([BID, ASK]),
    st.floats(0.0, 80.0, allow_nan=False),
    st.booleans(),
)


@settings(max_examples=300, deadline=None)
@given(
    role=st.sampled_from([BUYER, SELLER]),
    seed=st.integers(0, 1000),
    seq=st.lists(events, min_size=1, max_size=60),
)
def test_direction_and_bounds_over_sequences(role, seed, seq):
    s = new_trader("t", seed)
    set_limits(s, 20.9, 6.1, role)
    for ev in seq:
        before = s.quote_price
        d = direction(s, ev)
        update_on_event(s, ev)
        if d > 0:
            assert s.quote_price >= before
        elif d < 0:
            assert s.quote_price <= before
        else:
            assert s.quote_price == before
        assert s.quote_price >= 0
        if role == BUYER:
            assert s.quote_price <= s.limit_price and s.margin <= 0
        else:
            assert s.quote_price >= s.limit_price and s.margin >= 0
