"""Household battery scheduling as a linear program.

Minimises the retail bill ``sum_t tou_t * import_t - fit * export_t`` over a
24-period horizon with hourly energy balance, battery power limits, charge
and discharge efficiencies and state-of-charge bounds. Expected P2P income
is deliberately left out of the objective.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .lp import LPError, solve_lp

HOURS = 1.0  # period length; powers in kW become energies in kWh


class HemsError(ValueError):
    pass


@dataclass(frozen=True)
class BatterySpec:
    capacity: float
    max_charge: float = 5.0
    max_discharge: float = 5.0
    efficiency_charge: float = 0.95
    efficiency_discharge: float = 0.95
    soc_init: float | None = None
    soc_min: float = 0.0
    soc_max: float | None = None
    terminal_soc: bool = False  # require soc at the end >= soc_init

    def __post_init__(self):
        if self.soc_init is None:
            object.__setattr__(self, "soc_init", 0.5 * self.capacity)
        if self.soc_max is None:
            object.__setattr__(self, "soc_max", self.capacity)
        if not 0 <= self.soc_min <= self.soc_init <= self.soc_max <= self.capacity:
            raise HemsError(
                f"battery needs 0 <= soc_min <= soc_init <= soc_max <= capacity, got "
                f"{self.soc_min}, {self.soc_init}, {self.soc_max}, {self.capacity}"
            )
        if not (0 < self.efficiency_charge <= 1 and 0 < self.efficiency_discharge <= 1):
            raise HemsError("efficiencies must lie in (0, 1]")
        if self.max_charge < 0 or self.max_discharge < 0:
            raise HemsError("power limits must be non-negative")


NO_BATTERY = BatterySpec(capacity=0.0, max_charge=0.0, max_discharge=0.0)


@dataclass
class DispatchSchedule:
    charge: np.ndarray
    discharge: np.ndarray
    grid_import: np.ndarray
    grid_export: np.ndarray
    soc: np.ndarray  # soc[t] is the state of charge at the END of period t
    cost: float  # cents

    def __len__(self):
        return len(self.charge)


def solve_schedule(
    battery: BatterySpec,
    load: Sequence[float],
    pv: Sequence[float],
    tou: Sequence[float],
    fit: float,
) -> DispatchSchedule:
    load = np.asarray(load, dtype=float)
    pv = np.asarray(pv, dtype=float)
    tou = np.asarray(tou, dtype=float)
    n = load.size
    if pv.size != n or tou.size != n:
        raise HemsError(f"load, pv and tou must have equal length, got {n}, {pv.size}, {tou.size}")
    if (load < 0).any() or (pv < 0).any():
        raise HemsError("load and pv forecasts must be non-negative")
    if not fit < tou.min():
        raise HemsError(f"FiT {fit} must be below every ToU rate (min {tou.min()})")

    eta_c, eta_d = battery.efficiency_charge, battery.efficiency_discharge
    cap_c = battery.max_charge * HOURS if battery.capacity > 0 else 0.0
    cap_d = battery.max_discharge * HOURS if battery.capacity > 0 else 0.0
    span = battery.soc_max - battery.soc_min
    s0 = battery.soc_init - battery.soc_min

    # variable blocks: charge, discharge, import, export, soc - soc_min
    C, D, I, E, S = (k * n for k in range(5))
    nv = 5 * n
    cost = np.zeros(nv)
    cost[I : I + n] = tou
    cost[E : E + n] = -fit

    A_eq = np.zeros((2 * n, nv))
    b_eq = np.zeros(2 * n)
    for t in range(n):
        # load + charge + export = pv + discharge + import
        A_eq[t, C + t] = 1.0
        A_eq[t, D + t] = -1.0
        A_eq[t, E + t] = 1.0
        A_eq[t, I + t] = -1.0
        b_eq[t] = pv[t] - load[t]
        # soc_t = soc_{t-1} + eta_c charge - discharge / eta_d
        r = n + t
        A_eq[r, S + t] = 1.0
        if t:
            A_eq[r, S + t - 1] = -1.0
        A_eq[r, C + t] = -eta_c
        A_eq[r, D + t] = 1.0 / eta_d
        b_eq[r] = s0 if t == 0 else 0.0

    rows, rhs = [], []
    for t in range(n):
        for col, bound in ((C + t, cap_c), (D + t, cap_d), (S + t, span)):
            row = np.zeros(nv)
            row[col] = 1.0
            rows.append(row)
            rhs.append(bound)
    if battery.terminal_soc:
        row = np.zeros(nv)
        row[S + n - 1] = -1.0
        rows.append(row)
        rhs.append(-s0)

    try:
        res = solve_lp(cost, np.array(rows), np.array(rhs), A_eq, b_eq)
    except LPError as exc:
        which = "terminal SOC" if battery.terminal_soc else "balance/SOC"
        raise HemsError(f"dispatch LP failed ({which} constraints): {exc}") from exc

    x = res.x
    return DispatchSchedule(
        charge=x[C : C + n].copy(),
        discharge=x[D : D + n].copy(),
        grid_import=x[I : I + n].copy(),
        grid_export=x[E : E + n].copy(),
        soc=x[S : S + n] + battery.soc_min,
        cost=res.fun,
    )


def baseline_cost(load, pv, tou, fit) -> float:
    """Bill without a battery: net import at ToU, net export at FiT."""
    net = np.asarray(load, dtype=float) - np.asarray(pv, dtype=float)
    tou = np.asarray(tou, dtype=float)
    return float(np.sum(np.where(net > 0, net * tou, net * fit)))


def surplus_deficit(schedule: DispatchSchedule) -> np.ndarray:
    """Signed kWh per period: + export to sell, - import to procure."""
    return schedule.grid_export - schedule.grid_import


def write_schedule(schedule: DispatchSchedule, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "charge", "discharge", "import", "export", "soc"])
    for t in range(len(schedule)):
        w.writerow(
            [t]
            + [
                f"{v:.6f}"
                for v in (
                    schedule.charge[t],
                    schedule.discharge[t],
                    schedule.grid_import[t],
                    schedule.grid_export[t],
                    schedule.soc[t],
                )
            ]
        )
