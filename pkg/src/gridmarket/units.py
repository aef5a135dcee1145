"""Fixed-point units shared by the market, settlement and engine.

Prices are integer hundredths of a cent per kWh, energies integer watt-hours.
Their product is an integer money amount in units of 1e-5 cents, so every
settlement sum is exact.
"""

PRICE_SCALE = 100  # price units per c/kWh
ENERGY_SCALE = 1000  # Wh per kWh
MONEY_SCALE = PRICE_SCALE * ENERGY_SCALE  # money units per cent


def price_units(c_per_kwh: float) -> int:
    return round(c_per_kwh * PRICE_SCALE)


def wh(kwh: float) -> int:
    return round(kwh * ENERGY_SCALE)


def c_per_kwh(units: int) -> float:
    return units / PRICE_SCALE


def kwh(energy_wh: int) -> float:
    return energy_wh / ENERGY_SCALE


def cents(money: int) -> float:
    return money / MONEY_SCALE


def fmt_price(units: int) -> str:
    return f"{units // PRICE_SCALE}.{units % PRICE_SCALE:02d}"


def fmt_kwh(energy_wh: int) -> str:
    sign = "-" if energy_wh < 0 else ""
    energy_wh = abs(energy_wh)
    return f"{sign}{energy_wh // ENERGY_SCALE}.{energy_wh % ENERGY_SCALE:03d}"


def fmt_cents(money: int) -> str:
    sign = "-" if money < 0 else ""
    money = abs(money)
    return f"{sign}{money // MONEY_SCALE}.{money % MONEY_SCALE:05d}"
