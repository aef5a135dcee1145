"""Naive reference implementations used only by the tests."""

import math
import random

from gridmarket.market import ASK, BID, Order


def reference_match(orders):
    """Replay an order stream over a flat list, re-scanning after every fill.

    Returns ``(trades, resting)`` where trades are tuples
    ``(buyer, seller, price, qty, period, time)``.
    """
    book = []  # list of [trader, side, price, qty, time, id]
    trades = []
    for o in orders:
        book = [r for r in book if not (r[0] == o.trader and r[1] == o.side)]
        book.append([o.trader, o.side, o.price, o.quantity, o.time, o.id])
        while True:
            bids = [r for r in book if r[1] == BID]
            asks = [r for r in book if r[1] == ASK]
            if not bids or not asks:
                break
            best_b = bids[0]
            for r in bids:
                if r[2] > best_b[2] or (r[2] == best_b[2] and r[4] < best_b[4]):
                    best_b = r
            best_s = asks[0]
            for r in asks:
                if r[2] < best_s[2] or (r[2] == best_s[2] and r[4] < best_s[4]):
                    best_s = r
            if best_s[2] > best_b[2]:
                break
            q = min(best_b[3], best_s[3])
            p = best_b[2] if best_b[4] <= best_s[4] else best_s[2]
            trades.append((best_b[0], best_s[0], p, q, o.period, o.time))
            best_b[3] -= q
            best_s[3] -= q
            book = [r for r in book if r[3] > 0]
    return trades, book


def random_stream(rng: random.Random, max_orders=50, period=0):
    """Orders from five buyers and five sellers, prices 1-50 c/kWh, 1-5 kWh."""
    n = rng.randint(1, max_orders)
    out = []
    for k in range(n):
        side = rng.choice((BID, ASK))
        trader = ("b" if side == BID else "s") + str(rng.randrange(5))
        out.append(Order(k, trader, side, rng.randint(1, 50) * 100, rng.randint(1, 5) * 1000, k + 1, period))
    return out


def sampled_integral(f, periods=1, rate=100_000, fundamental=50.0):
    """Rectangle-rule mean of ``f(t)`` over whole fundamental periods."""
    n = int(round(rate / fundamental)) * periods
    dt = 1.0 / rate
    return math.fsum(f(k * dt) for k in range(n)) / n


def check_feasible(s, battery, load, pv, tol=1e-9):
    """Constraint checker written against the schedule's documented semantics."""
    eta_c, eta_d = battery.efficiency_charge, battery.efficiency_discharge
    soc = battery.soc_init
    for t in range(len(load)):
        for v in (s.charge[t], s.discharge[t], s.grid_import[t], s.grid_export[t]):
            assert v >= -tol
        assert s.charge[t] <= battery.max_charge + tol
        assert s.discharge[t] <= battery.max_discharge + tol
        lhs = load[t] + s.charge[t] + s.grid_export[t]
        rhs = pv[t] + s.discharge[t] + s.grid_import[t]
        assert abs(lhs - rhs) <= tol
        soc = soc + eta_c * s.charge[t] - s.discharge[t] / eta_d
        assert abs(soc - s.soc[t]) <= tol
        assert battery.soc_min - tol <= s.soc[t] <= battery.soc_max + tol


def closed_form_single_load(p, z, v0=230.0):
    # V = v0 - z * conj(p / V) with real p: Im part gives y = -p X / v0,
    # Re part gives x^2 - v0 x + y^2 + p R = 0 (take the high-voltage root)
    y = -p * z.imag / v0
    x = (v0 + math.sqrt(v0 * v0 - 4 * (y * y + p * z.real))) / 2
    return complex(x, y)
