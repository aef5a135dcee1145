"""Active/reactive power from sampled waveforms.

Two meters are compared:

* integration: P is the mean of v*i over the last fundamental period, Q the
  mean of v times the current shifted by a quarter period. Harmonics are
  handled exactly.
* fundamental: P = V I cos(theta), Q = V I sin(theta), fed with total RMS
  values. This is what a simple panel meter does and it is only correct for
  undistorted waveforms.

Sign convention: theta = phase(v) - phase(i), so a lagging (inductive) current
gives Q > 0 under both meters.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

INTEGRATION = "integration"
FUNDAMENTAL = "fundamental"

# synthetic stand-in for the PV inverter's current distortion; not measured data
DEFAULT_INVERTER_HARMONICS = ((3, 0.05, 0.0), (5, 0.03, 0.0), (7, 0.02, 0.0))


class MeteringError(ValueError):
    pass


@dataclass(frozen=True)
class Harmonic:
    order: int
    magnitude: float  # fraction of the fundamental RMS
    phase: float = 0.0


def harmonic_spec(items: Iterable) -> tuple[Harmonic, ...]:
    spec = tuple(h if isinstance(h, Harmonic) else Harmonic(*h) for h in items)
    orders = [h.order for h in spec]
    if len(set(orders)) != len(orders):
        raise MeteringError(f"harmonic orders must be distinct, got {orders}")
    for h in spec:
        if h.order < 1 or int(h.order) != h.order:
            raise MeteringError(f"harmonic order must be a positive integer, got {h.order}")
        if h.magnitude < 0:
            raise MeteringError(f"harmonic magnitude must be non-negative, got {h.magnitude}")
    return spec


@dataclass
class SampledWaveform:
    samples: np.ndarray
    sample_rate: float
    fundamental: float = 50.0

    @property
    def samples_per_period(self) -> int:
        return int(round(self.sample_rate / self.fundamental))

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))


@dataclass(frozen=True)
class PQReading:
    p: float
    q: float
    method: str


@dataclass(frozen=True)
class Comparison:
    integration: PQReading
    fundamental: PQReading
    deviation: float
    absolute: bool  # True when deviation is in watts because |P_int| < 1 W


def _check_rate(sample_rate: float, fundamental: float) -> int:
    n = sample_rate / fundamental
    if n <= 0 or abs(n - round(n)) > 1e-9:
        raise MeteringError(f"sample rate {sample_rate} Hz is not a whole multiple of {fundamental} Hz")
    return int(round(n))


def synthesize(
    rms_fund: float,
    phase: float = 0.0,
    harmonics: Iterable = (),
    sample_rate: float = 10_000.0,
    periods: int = 1,
    fundamental: float = 50.0,
) -> SampledWaveform:
    spec = harmonic_spec(harmonics)
    n_per = _check_rate(sample_rate, fundamental)
    if periods < 1 or int(periods) != periods:
        raise MeteringError(f"periods must be a positive integer, got {periods}")
    top = max([1] + [h.order for h in spec])
    if sample_rate < 20 * top * fundamental:
        raise MeteringError(
            f"sample rate {sample_rate} Hz is below 20x the highest harmonic ({top * fundamental} Hz)"
        )
    wt = 2 * np.pi * np.arange(n_per * periods) / n_per
    amp = math.sqrt(2) * rms_fund
    x = amp * np.sin(wt + phase)
    for h in spec:
        x = x + amp * h.magnitude * np.sin(h.order * wt + h.phase)
    return SampledWaveform(x, float(sample_rate), float(fundamental))


def _window(v: SampledWaveform, i: SampledWaveform) -> tuple[np.ndarray, np.ndarray, int]:
    if v.sample_rate != i.sample_rate or v.fundamental != i.fundamental:
        raise MeteringError("voltage and current streams have different sample rates")
    if len(v.samples) != len(i.samples):
        raise MeteringError(f"stream lengths differ ({len(v.samples)} vs {len(i.samples)})")
    n = _check_rate(v.sample_rate, v.fundamental)
    if n % 4:
        raise MeteringError(f"{n} samples per period is not divisible by 4; pick a multiple of 200 Hz")
    if len(v.samples) < n:
        raise MeteringError("streams are shorter than one fundamental period")
    return v.samples[-n:], i.samples[-n:], n


def pq_integration(v: SampledWaveform, i: SampledWaveform) -> PQReading:
    vw, iw, n = _window(v, i)
    p = float(np.mean(vw * iw))
    q = float(np.mean(vw * np.roll(iw, -(n // 4))))
    return PQReading(p, q, INTEGRATION)


def pq_fundamental(v_rms: float, i_rms: float, theta: float) -> PQReading:
    if v_rms < 0 or i_rms < 0:
        raise MeteringError("RMS values must be non-negative")
    s = v_rms * i_rms
    return PQReading(s * math.cos(theta), s * math.sin(theta), FUNDAMENTAL)


def fundamental_phase(x: np.ndarray) -> float:
    """Phase of the 50 Hz bin over one period, by direct projection."""
    n = len(x)
    k = np.arange(n)
    return float(np.angle(np.sum(x * np.exp(-2j * np.pi * k / n))))


def compare_methods(v: SampledWaveform, i: SampledWaveform) -> Comparison:
    integ = pq_integration(v, i)
    vw, iw, _ = _window(v, i)
    theta = fundamental_phase(vw) - fundamental_phase(iw)
    fund = pq_fundamental(
        float(np.sqrt(np.mean(vw**2))),
        float(np.sqrt(np.mean(iw**2))),
        theta,
    )
    diff = abs(fund.p - integ.p)
    if abs(integ.p) < 1.0:
        return Comparison(integ, fund, diff, True)
    return Comparison(integ, fund, diff / abs(integ.p), False)


def read_waveforms(f: TextIO, source: str = "<waveform>") -> tuple[SampledWaveform, SampledWaveform]:
    """Read ``sample_rate,<Hz>`` then a ``v,i`` header then one sample pair per row."""
    rows = csv.reader(f)
    try:
        head = next(rows)
        if len(head) != 2 or head[0].strip() != "sample_rate":
            raise MeteringError(f"{source}:1: expected 'sample_rate,<Hz>'")
        rate = float(head[1])
        cols = next(rows)
    except StopIteration:
        raise MeteringError(f"{source}: file is truncated") from None
    except ValueError as exc:
        raise MeteringError(f"{source}:1: {exc}") from None
    if [c.strip() for c in cols] != ["v", "i"]:
        raise MeteringError(f"{source}:2: expected header 'v,i'")
    vs, cs = [], []
    for lineno, row in enumerate(rows, 3):
        if not row:
            continue
        if len(row) != 2:
            raise MeteringError(f"{source}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            vs.append(float(row[0]))
            cs.append(float(row[1]))
        except ValueError:
            raise MeteringError(f"{source}:{lineno}: non-numeric sample {row!r}") from None
    return SampledWaveform(np.array(vs), rate), SampledWaveform(np.array(cs), rate)


def write_waveforms(v: SampledWaveform, i: SampledWaveform, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["sample_rate", f"{v.sample_rate:g}"])
    w.writerow(["v", "i"])
    for a, b in zip(v.samples, i.samples):
        w.writerow([repr(float(a)), repr(float(b))])
