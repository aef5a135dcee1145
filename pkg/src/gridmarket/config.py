"""Scenario configuration and its INI file format.

Every section and key is optional; anything omitted keeps the default
scenario value. Example::

    [scenario]
    seed = 42
    events_per_period = 200
    profiles = profiles.csv      ; relative to the config file; omit for synthetic
    profile_seed = 7             ; seed of the synthetic profiles
    feeder = feeder.txt          ; line records, see gridmarket.feeder
    phases = a,b,c,a,b           ; phase per household when not set below

    [tariff]
    peak = 49.24
    shoulder = 20.9
    offpeak = 15.1
    fit = 6.1
    ; tou = 24 comma-separated c/kWh values, overrides peak/shoulder/offpeak

    [market]
    learn_rate = 0.3
    momentum = 0.05
    perturb_rel = 0.05
    perturb_abs = 0.05
    buyer_margin = -0.35,-0.05
    seller_margin = 0.05,0.35

    [battery]                    ; defaults applied to every battery
    max_charge = 5
    max_discharge = 5
    efficiency_charge = 0.95
    efficiency_discharge = 0.95
    soc_init = 0.5               ; fraction of capacity
    soc_min = 0
    terminal_soc = yes           ; end the day at least as charged as it began

    [mismatch]
    enabled = no
    sigma = 0.02
    shortfall_rate = tou
    excess_rate = fit

    [household H1]               ; any household section replaces the roster
    battery_kwh = 7.5
    pv_kw = 3
    hems = yes
    bus = 1
    phase = a
    seed = 123                   ; optional agent RNG seed
    roles = 0:inactive,1:inactive ; optional period:role overrides (auto|inactive)
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .feeder import PHASES, FeederModel, build_default_feeder, read_feeder
from .hems import BatterySpec
from .settlement import MismatchPolicy, Tariff, default_tariff
from .traders import ZipParams

AUTO = "auto"
INACTIVE_OVERRIDE = "inactive"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Household:
    id: str
    battery: BatterySpec | None = None
    pv_kw: float | None = None
    hems: bool = False
    bus: int | None = None
    phase: str | None = None
    seed: int | None = None
    roles: dict[int, str] = field(default_factory=dict, hash=False)


@dataclass
class ScenarioConfig:
    households: list[Household]
    tariff: Tariff = field(default_factory=default_tariff)
    feeder: FeederModel | None = None  # built from the roster when None
    events_per_period: int = 200
    zip: ZipParams = field(default_factory=ZipParams)
    seed: int = 0
    mismatch: bool = False
    mismatch_sigma: float = 0.02
    mismatch_policy: MismatchPolicy = field(default_factory=MismatchPolicy)
    profiles: Path | None = None
    profile_seed: int | None = None  # None: follow ``seed``

    def __post_init__(self):
        ids = [h.id for h in self.households]
        if not ids:
            raise ConfigError("scenario has no households")
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate household ids in {ids}")
        if self.events_per_period < 0:
            raise ConfigError("events_per_period must be non-negative")
        if self.mismatch_sigma < 0:
            raise ConfigError("mismatch sigma must be non-negative")
        for h in self.households:
            if h.pv_kw is not None and h.pv_kw < 0:
                raise ConfigError(f"household {h.id}: negative PV capacity")
            for t, r in h.roles.items():
                if not 0 <= t < len(self.tariff.tou) or r not in (AUTO, INACTIVE_OVERRIDE):
                    raise ConfigError(f"household {h.id}: bad role override {t}:{r}")
        if self.feeder is None:
            self.feeder = roster_feeder(self.households)
        missing = [h for h in ids if h not in self.feeder.connections]
        if missing:
            raise ConfigError(f"households not connected to the feeder: {missing}")

    @property
    def effective_profile_seed(self) -> int:
        return self.seed if self.profile_seed is None else self.profile_seed

    def pv_capacity(self) -> dict[str, float | None]:
        return {h.id: h.pv_kw for h in self.households}


def default_households() -> list[Household]:
    bat = BatterySpec(7.5, terminal_soc=True)
    return [
        Household("H1", bat, 3.0, True),
        Household("H2", bat, 5.0, True),
        Household("H3", None, 5.0, False),
        Household("H4", None, None, False),
        Household("H5", bat, 5.0, True),
    ]


def default_config(seed: int = 0) -> ScenarioConfig:
    return ScenarioConfig(default_households(), seed=seed)


def roster_feeder(households: list[Household], base: FeederModel | None = None, phases=None) -> FeederModel:
    """Connect each household to ``base`` (default: the five-bus feeder).

    Explicit bus/phase on a household wins, then a connection already in
    ``base``, then bus k+1 and the cyclic phase list for the k-th household.
    """
    base = base or build_default_feeder()
    phases = tuple(phases or ("a", "b", "c", "a", "b"))
    conns = {}
    for k, h in enumerate(households):
        bus, ph = base.connections.get(h.id, (None, None))
        if bus is None:
            bus = 1 + k % (base.n_buses - 1)
            ph = phases[k % len(phases)]
        conns[h.id] = (h.bus if h.bus is not None else bus, h.phase or ph)
    return FeederModel(base.n_buses, list(base.lines), conns, base.nominal_voltage, base.frequency)


def _floats(text: str, n: int | None, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{what}: expected {n} values, got {len(vals)}")
    return vals


def parse_config(text: str, base_dir: str | Path = ".", source: str = "<config>") -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    known = {"scenario", "tariff", "market", "battery", "mismatch"}
    for sec in cp.sections():
        if sec not in known and not sec.startswith("household "):
            raise ConfigError(f"{source}: unknown section [{sec}]")
    base_dir = Path(base_dir)
    try:
        return _build(cp, base_dir, source)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from None


def _check_keys(cp, sec: str, allowed: set[str], source: str) -> None:
    if cp.has_section(sec):
        extra = set(cp[sec]) - allowed
        if extra:
            raise ConfigError(f"{source}: unknown key(s) {sorted(extra)} in [{sec}]")


def _build(cp: configparser.ConfigParser, base_dir: Path, source: str) -> ScenarioConfig:
    get = lambda sec: cp[sec] if cp.has_section(sec) else {}  # noqa: E731
    _check_keys(cp, "scenario", {"seed", "events_per_period", "profiles", "profile_seed", "feeder", "phases"}, source)
    _check_keys(cp, "tariff", {"peak", "shoulder", "offpeak", "fit", "tou"}, source)
    _check_keys(
        cp, "market", {"learn_rate", "momentum", "perturb_rel", "perturb_abs", "buyer_margin", "seller_margin"}, source
    )
    bat_keys = {
        "max_charge",
        "max_discharge",
        "efficiency_charge",
        "efficiency_discharge",
        "soc_init",
        "soc_min",
        "terminal_soc",
    }
    _check_keys(cp, "battery", bat_keys, source)
    _check_keys(cp, "mismatch", {"enabled", "sigma", "shortfall_rate", "excess_rate"}, source)

    sc = get("scenario")
    seed = int(sc.get("seed", 0))
    profiles = sc.get("profiles")
    profiles = base_dir / profiles if profiles else None

    t = get("tariff")
    fit = float(t.get("fit", 6.1))
    if "tou" in t:
        tariff = Tariff.from_rates(_floats(t["tou"], 24, "tariff.tou"), fit)
    else:
        tariff = default_tariff(
            float(t.get("peak", 49.24)), float(t.get("shoulder", 20.9)), float(t.get("offpeak", 15.1)), fit
        )

    m = get("market")
    zp = ZipParams()
    zip_params = ZipParams(
        learn_rate=float(m.get("learn_rate", zp.learn_rate)),
        momentum=float(m.get("momentum", zp.momentum)),
        perturb_rel=float(m.get("perturb_rel", zp.perturb_rel)),
        perturb_abs=float(m.get("perturb_abs", zp.perturb_abs)),
        buyer_margin=tuple(_floats(m["buyer_margin"], 2, "buyer_margin")) if "buyer_margin" in m else zp.buyer_margin,
        seller_margin=tuple(_floats(m["seller_margin"], 2, "seller_margin"))
        if "seller_margin" in m
        else zp.seller_margin,
    )

    b = get("battery")
    soc_frac = float(b.get("soc_init", 0.5))
    terminal = cp.getboolean("battery", "terminal_soc", fallback=True)

    def battery(cap: float) -> BatterySpec:
        return BatterySpec(
            capacity=cap,
            max_charge=float(b.get("max_charge", 5.0)),
            max_discharge=float(b.get("max_discharge", 5.0)),
            efficiency_charge=float(b.get("efficiency_charge", 0.95)),
            efficiency_discharge=float(b.get("efficiency_discharge", 0.95)),
            soc_init=soc_frac * cap,
            soc_min=float(b.get("soc_min", 0.0)),
            terminal_soc=terminal,
        )

    hh_secs = [s for s in cp.sections() if s.startswith("household ")]
    households = []
    if hh_secs:
        hh_keys = {"battery_kwh", "pv_kw", "hems", "bus", "phase", "seed", "roles"}
        for sec in hh_secs:
            _check_keys(cp, sec, hh_keys, source)
            h = cp[sec]
            hid = sec.split(None, 1)[1].strip()
            cap = float(h.get("battery_kwh", 0) or 0)
            pv = float(h.get("pv_kw", 0) or 0)
            phase = h.get("phase")
            if phase is not None and phase not in PHASES:
                raise ConfigError(f"{source}: [{sec}] phase must be one of {PHASES}")
            roles = {}
            for item in filter(None, (x.strip() for x in h.get("roles", "").split(","))):
                period, _, role = item.partition(":")
                roles[int(period)] = role.strip()
            households.append(
                Household(
                    hid,
                    battery(cap) if cap > 0 else None,
                    pv if pv > 0 else None,
                    cp.getboolean(sec, "hems", fallback=False),
                    int(h["bus"]) if "bus" in h else None,
                    phase,
                    int(h["seed"]) if "seed" in h else None,
                    roles,
                )
            )
    else:
        households = [replace(h, battery=battery(h.battery.capacity)) if h.battery else h for h in default_households()]

    base = None
    if "feeder" in sc:
        path = base_dir / sc["feeder"]
        if not path.exists():
            raise ConfigError(f"feeder file not found: {path}")
        base = read_feeder(path.read_text(), str(path))
    phases = [p.strip() for p in sc["phases"].split(",")] if "phases" in sc else None
    if phases and any(p not in PHASES for p in phases):
        raise ConfigError(f"{source}: phases must be drawn from {PHASES}")
    feeder = roster_feeder(households, base, phases)

    mm = get("mismatch")
    return ScenarioConfig(
        households=households,
        tariff=tariff,
        feeder=feeder,
        events_per_period=int(sc.get("events_per_period", 200)),
        zip=zip_params,
        seed=seed,
        mismatch=cp.getboolean("mismatch", "enabled", fallback=False),
        mismatch_sigma=float(mm.get("sigma", 0.02)),
        mismatch_policy=MismatchPolicy(mm.get("shortfall_rate", "tou"), mm.get("excess_rate", "fit")),
        profiles=profiles,
        profile_seed=int(sc["profile_seed"]) if "profile_seed" in sc else None,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), path.parent, str(path))
