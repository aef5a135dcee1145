"""Radial low-voltage feeder and backward-forward sweep power flow.

The source bus is an infinite bus at nominal voltage (ideal transformer).
Households are single-phase constant-power loads. With a solidly grounded
secondary and no neutral impedance the three phases decouple, so each phase
is swept independently; voltage angles are reported relative to that
phase's own source reference.

Feeder file format (whitespace separated, ``#`` starts a comment)::

    nominal_voltage 230
    frequency 50
    line  <from_bus> <to_bus> <r_ohm> <x_ohm> <length_m>
    house <household> <bus> <phase a|b|c>

Bus 0 is the transformer secondary; the other bus numbers are implied by the
``line`` records.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, TextIO

import numpy as np

PHASES = ("a", "b", "c")


class FeederError(ValueError):
    pass


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    impedance: complex
    length: float


@dataclass
class FeederModel:
    n_buses: int
    lines: list[Line]
    connections: dict[str, tuple[int, str]]
    nominal_voltage: float = 230.0
    frequency: float = 50.0
    # filled by validate(): parent line index per bus, buses in root-first order
    _parent: list[int] = field(default_factory=list, init=False, repr=False)
    _order: list[int] = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        n = self.n_buses
        if len(self.lines) != n - 1:
            raise FeederError(f"a radial feeder with {n} buses needs {n - 1} lines, got {len(self.lines)}")
        children: dict[int, list[int]] = {b: [] for b in range(n)}
        parent = [-1] * n
        for k, ln in enumerate(self.lines):
            if not (0 <= ln.from_bus < n and 0 <= ln.to_bus < n):
                raise FeederError(f"line {k + 1} references a bus outside 0..{n - 1}")
            if ln.impedance.real < 0:
                raise FeederError(f"line {k + 1} has negative resistance")
            if parent[ln.to_bus] != -1 or ln.to_bus == 0:
                raise FeederError(f"bus {ln.to_bus} is fed twice; the feeder is not radial")
            parent[ln.to_bus] = k
            children[ln.from_bus].append(ln.to_bus)
        order, seen, stack = [], {0}, [0]
        while stack:
            b = stack.pop()
            order.append(b)
            for c in children[b]:
                if c in seen:
                    raise FeederError("cycle detected; the feeder is not radial")
                seen.add(c)
                stack.append(c)
        if len(order) != n:
            raise FeederError("some buses are not connected to bus 0")
        for hh, (bus, ph) in self.connections.items():
            if not 1 <= bus < n or ph not in PHASES:
                raise FeederError(f"household {hh}: invalid connection ({bus}, {ph})")
        self._parent = parent
        self._order = order


@dataclass
class PowerFlowResult:
    voltages: np.ndarray  # (n_buses, 3) complex V
    currents: np.ndarray  # (n_lines, 3) complex A, flowing away from bus 0
    source_power: np.ndarray  # (3,) complex VA delivered by the source
    load_power: np.ndarray  # (3,) complex VA absorbed by households
    total_losses: float
    converged: bool
    iterations: int
    mismatch: float  # last max |dV|


DEFAULT_LINES = [
    (75.0, complex(0.0239, 0.0218)),
    (40.0, complex(0.0128, 0.0116)),
    (40.0, complex(0.0128, 0.0116)),
    (40.0, complex(0.0128, 0.0116)),
    (40.0, complex(0.0128, 0.0116)),
]


def build_default_feeder(phases: tuple[str, ...] = ("a", "b", "c", "a", "b")) -> FeederModel:
    """Five-segment overhead line with households H1..H5 at buses 1..5."""
    lines = [Line(k, k + 1, z, length) for k, (length, z) in enumerate(DEFAULT_LINES)]
    connections = {f"H{k + 1}": (k + 1, ph) for k, ph in enumerate(phases)}
    return FeederModel(n_buses=6, lines=lines, connections=connections)


def solve_powerflow(
    model: FeederModel,
    injections: Mapping[str, float],
    tol: float = 1e-6,
    max_iter: int = 100,
) -> PowerFlowResult:
    """Backward-forward sweep; ``injections`` are W per household, + = consumption."""
    n, nl = model.n_buses, len(model.lines)
    S = np.zeros((n, 3), dtype=complex)
    for hh, p in injections.items():
        if hh not in model.connections:
            raise FeederError(f"unknown household {hh!r}")
        if not math.isfinite(p):
            raise FeederError(f"household {hh}: non-finite injection {p}")
        bus, ph = model.connections[hh]
        S[bus, PHASES.index(ph)] += p
    Z = np.array([ln.impedance for ln in model.lines])
    order = model._order
    parent = model._parent
    lines = model.lines

    def sweep(V):
        I_bus = np.conj(S / V)
        I_line = np.zeros((nl, 3), dtype=complex)
        # backward: accumulate leaf-to-root
        I_acc = I_bus.copy()
        for b in reversed(order[1:]):
            k = parent[b]
            I_line[k] = I_acc[b]
            I_acc[lines[k].from_bus] += I_acc[b]
        # forward: root-to-leaf
        V_new = V.copy()
        for b in order[1:]:
            k = parent[b]
            V_new[b] = V_new[lines[k].from_bus] - Z[k] * I_line[k]
        return V_new, I_bus, I_line

    V = np.full((n, 3), complex(model.nominal_voltage))
    converged = False
    dv = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        V_new, I_bus, I_line = sweep(V)
        dv = float(np.max(np.abs(V_new - V)))
        V = V_new
        if dv < tol:
            converged = True
            break
    if converged and dv > 0:
        # one refinement sweep so load powers match their setpoints tightly
        V, I_bus, I_line = sweep(V)

    first = [k for k, ln in enumerate(lines) if ln.from_bus == 0]
    source = sum((V[0] * np.conj(I_line[k]) for k in first), np.zeros(3, dtype=complex))
    load = np.sum(V * np.conj(I_bus), axis=0)
    line_losses = float(np.sum(np.abs(I_line) ** 2 * Z.real[:, None]))
    return PowerFlowResult(V, I_line.copy(), source, load, line_losses, converged, it, dv)


def losses(result: PowerFlowResult, model: FeederModel) -> float:
    """Total series loss in W: sum over lines and phases of |I|^2 R."""
    if not result.converged:
        raise FeederError(f"power flow did not converge (mismatch {result.mismatch:.3g} V)")
    R = np.array([ln.impedance.real for ln in model.lines])
    return float(np.sum(np.abs(result.currents) ** 2 * R[:, None]))


def read_feeder(text: str, source: str = "<feeder>") -> FeederModel:
    nominal, freq = 230.0, 50.0
    lines: list[Line] = []
    conns: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        try:
            kind = tok[0]
            if kind == "nominal_voltage" and len(tok) == 2:
                nominal = float(tok[1])
            elif kind == "frequency" and len(tok) == 2:
                freq = float(tok[1])
            elif kind == "line" and len(tok) == 6:
                lines.append(Line(int(tok[1]), int(tok[2]), complex(float(tok[3]), float(tok[4])), float(tok[5])))
            elif kind == "house" and len(tok) == 4:
                conns[tok[1]] = (int(tok[2]), tok[3])
            else:
                raise FeederError(f"unrecognised record {raw.strip()!r}")
        except ValueError as exc:
            raise FeederError(f"{source}:{lineno}: {exc}") from None
    if not lines:
        raise FeederError(f"{source}: no line records")
    n_buses = 1 + max(max(ln.from_bus, ln.to_bus) for ln in lines)
    return FeederModel(n_buses, lines, conns, nominal, freq)


def format_feeder(model: FeederModel) -> str:
    out = [f"nominal_voltage {model.nominal_voltage:g}", f"frequency {model.frequency:g}"]
    for ln in model.lines:
        out.append(f"line {ln.from_bus} {ln.to_bus} {ln.impedance.real!r} {ln.impedance.imag!r} {ln.length:g}")
    for hh, (bus, ph) in model.connections.items():
        out.append(f"house {hh} {bus} {ph}")
    return "\n".join(out) + "\n"


POWERFLOW_HEADER = ("period", "bus", "phase", "v_mag", "v_angle_deg")


def write_powerflow(results: list[tuple[int, PowerFlowResult]], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(POWERFLOW_HEADER)
    for period, res in results:
        for bus in range(res.voltages.shape[0]):
            for p, ph in enumerate(PHASES):
                v = complex(res.voltages[bus, p])
                w.writerow([period, bus, ph, f"{abs(v):.6f}", f"{math.degrees(cmath.phase(v)):.6f}"])
