"""Household load and PV profiles.

CSV schema (one header row, 24 rows per household, periods 0-23)::

    household,period,load_kwh,pv_kwh_per_kw

``pv_kwh_per_kw`` is the output of a 1 kW reference array; it is scaled by
each household's PV capacity when loaded.
"""

from __future__ import annotations

import csv
import math
import random
from pathlib import Path
from typing import Iterable, Mapping, TextIO

PERIODS = 24
PROFILE_HEADER = ["household", "period", "load_kwh", "pv_kwh_per_kw"]

PV_PEAK_PER_KW = 0.75  # derated output of a 1 kW array at solar noon
PV_JITTER = (0.7, 1.0)
LOAD_DAILY_KWH = (9.0, 18.0)
LOAD_JITTER = (0.85, 1.15)


class ProfileError(ValueError):
    pass


Profiles = dict[str, tuple[list[float], list[float]]]


def _pv_envelope(hour: int) -> float:
    """Mean of the 06:00-18:00 half-sine over one hour, per kW at full sun."""
    if not 6 <= hour < 18:
        return 0.0
    a, b = math.pi * (hour - 6) / 12, math.pi * (hour - 5) / 12
    return 12 / math.pi * (math.cos(a) - math.cos(b))


def _load_shape(hour: int) -> float:
    h = hour + 0.5
    morning = math.exp(-((h - 7.5) ** 2) / (2 * 1.2**2))
    evening = math.exp(-((h - 19.0) ** 2) / (2 * 1.8**2))
    return 0.3 + 1.0 * morning + 1.6 * evening


def generate_synthetic_profiles(seed: int, households: Iterable[tuple[str, bool]]) -> Profiles:
    """Diurnal stand-in profiles for ``(household, has_pv)`` pairs.

    Values are rounded to whole Wh so they survive a CSV round trip and map
    exactly onto the market's energy unit.
    """
    out: Profiles = {}
    for hh, has_pv in households:
        rng = random.Random(f"{seed}:profile:{hh}")
        total = rng.uniform(*LOAD_DAILY_KWH)
        raw = [_load_shape(h) * rng.uniform(*LOAD_JITTER) for h in range(PERIODS)]
        scale = total / sum(raw)
        load = [round(x * scale, 3) for x in raw]
        pv = [
            round(PV_PEAK_PER_KW * _pv_envelope(h) * rng.uniform(*PV_JITTER), 3) if has_pv else 0.0
            for h in range(PERIODS)
        ]
        out[hh] = (load, pv)
    return out


def write_profiles(profiles: Mapping[str, tuple[list[float], list[float]]], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for hh, (load, pv) in profiles.items():
        for t in range(PERIODS):
            w.writerow([hh, t, repr(float(load[t])), repr(float(pv[t]))])


def read_profiles(f: TextIO, source: str = "<profiles>") -> Profiles:
    """Parse the raw per-kW profile file, validating shape and values."""
    rows = csv.reader(f)
    header = next(rows, None)
    if header is None or [h.strip() for h in header] != PROFILE_HEADER:
        raise ProfileError(f"{source}:1: expected header {','.join(PROFILE_HEADER)}")
    data: dict[str, dict[int, tuple[float, float]]] = {}
    for lineno, row in enumerate(rows, 2):
        if not row:
            continue
        if len(row) != 4:
            raise ProfileError(f"{source}:{lineno}: expected 4 columns, got {len(row)}")
        hh = row[0].strip()
        try:
            period = int(row[1])
        except ValueError:
            raise ProfileError(f"{source}:{lineno}: column 'period' is not an integer: {row[1]!r}") from None
        vals = []
        for col, cell in zip(PROFILE_HEADER[2:], row[2:]):
            try:
                v = float(cell)
            except ValueError:
                raise ProfileError(f"{source}:{lineno}: column {col!r} is not numeric: {cell!r}") from None
            if not math.isfinite(v) or v < 0:
                raise ProfileError(f"{source}:{lineno}: column {col!r} must be finite and >= 0, got {cell!r}")
            vals.append(v)
        if not 0 <= period < PERIODS:
            raise ProfileError(f"{source}:{lineno}: period {period} outside 0..{PERIODS - 1}")
        per = data.setdefault(hh, {})
        if period in per:
            raise ProfileError(f"{source}:{lineno}: duplicate period {period} for household {hh}")
        per[period] = (vals[0], vals[1])
    out: Profiles = {}
    for hh, per in data.items():
        if len(per) != PERIODS:
            missing = sorted(set(range(PERIODS)) - set(per))
            raise ProfileError(f"{source}: household {hh} has {len(per)} periods, missing {missing}")
        out[hh] = ([per[t][0] for t in range(PERIODS)], [per[t][1] for t in range(PERIODS)])
    return out


def load_profiles(path: str | Path, pv_capacity: Mapping[str, float | None]) -> Profiles:
    """Read ``path`` and scale PV by each household's capacity (kW).

    Every household in ``pv_capacity`` must be present. A household without
    PV (capacity None or 0) must have an all-zero PV column.
    """
    path = Path(path)
    if not path.exists():
        raise ProfileError(f"profile file not found: {path}")
    with open(path, newline="") as f:
        raw = read_profiles(f, str(path))
    out: Profiles = {}
    for hh, cap in pv_capacity.items():
        if hh not in raw:
            raise ProfileError(f"{path}: no rows for household {hh}")
        load, pv = raw[hh]
        if not cap:
            if any(pv):
                t = next(k for k, v in enumerate(pv) if v)
                raise ProfileError(f"{path}: household {hh} has no PV but period {t} has pv_kwh_per_kw={pv[t]}")
            out[hh] = (load, [0.0] * PERIODS)
        else:
            out[hh] = (load, [cap * v for v in pv])
    return out
