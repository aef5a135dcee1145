"""Command-line interface: ``gridmarket {run,meter,powerflow,gen-profiles}``."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, default_config, load_config
from .engine import SimulationError, format_summary, run_day, write_outputs
from .feeder import FeederError, build_default_feeder, read_feeder, solve_powerflow, write_powerflow
from .hems import HemsError
from .market import MarketError
from .metering import MeteringError, compare_methods, read_waveforms
from .profiles import ProfileError, generate_synthetic_profiles, write_profiles
from .settlement import SettlementError

log = logging.getLogger("gridmarket")

MODULE_ERRORS = (
    ConfigError,
    SimulationError,
    ProfileError,
    FeederError,
    HemsError,
    MarketError,
    MeteringError,
    SettlementError,
    OSError,
)


def _setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else os.environ.get("GRIDMARKET_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _scenario(args):
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_run(args) -> int:
    cfg = _scenario(args)
    out = Path(args.out or "out")
    result = run_day(cfg)
    paths = write_outputs(cfg, result, out)
    log.info("wrote %d files to %s", len(paths), out)
    print(format_summary(cfg, result), end="")
    return 0


def cmd_meter(args) -> int:
    with open(args.waveforms, newline="") as f:
        v, i = read_waveforms(f, args.waveforms)
    c = compare_methods(v, i)
    print(f"integration  P = {c.integration.p:.3f} W  Q = {c.integration.q:.3f} var")
    print(f"fundamental  P = {c.fundamental.p:.3f} W  Q = {c.fundamental.q:.3f} var")
    if c.absolute:
        print(f"deviation    {c.deviation:.6f} W (absolute, |P| < 1 W)")
    else:
        print(f"deviation    {100 * c.deviation:.4f} %")
    return 0


def _parse_injection(text: str) -> tuple[str, float]:
    hh, sep, w = text.partition("=")
    try:
        value = float(w)
    except ValueError:
        value = math.nan
    if not sep or not hh or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected HOUSEHOLD=WATTS, got {text!r}")
    return hh, value


def cmd_powerflow(args) -> int:
    if args.feeder:
        model = read_feeder(Path(args.feeder).read_text(), args.feeder)
    else:
        model = build_default_feeder()
    inj = dict(args.inject or [])
    res = solve_powerflow(model, inj)
    if not res.converged:
        raise FeederError(f"power flow did not converge (mismatch {res.mismatch:.3g} V)")
    if args.out:
        with open(args.out, "w", newline="") as f:
            write_powerflow([(0, res)], f)
    else:
        write_powerflow([(0, res)], sys.stdout)
    print(f"# losses {res.total_losses:.6f} W, {res.iterations} iterations", file=sys.stderr)
    return 0


def cmd_gen_profiles(args) -> int:
    cfg = _scenario(args)
    seed = args.seed if args.seed is not None else cfg.effective_profile_seed
    profiles = generate_synthetic_profiles(seed, [(h.id, bool(h.pv_kw)) for h in cfg.households])
    if args.out:
        with open(args.out, "w", newline="") as f:
            write_profiles(profiles, f)
    else:
        write_profiles(profiles, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario INI file (default: built-in five-household scenario)")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out", help="output directory (run) or file (other commands)")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging (else GRIDMARKET_LOG)")

    p = argparse.ArgumentParser(prog="gridmarket", description="Peer-to-peer energy market simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="simulate one trading day")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("meter", parents=[common], help="compare P/Q metering methods on a waveform file")
    m.add_argument("waveforms", help="CSV: 'sample_rate,<Hz>' line, 'v,i' header, then samples")
    m.set_defaults(func=cmd_meter)

    f = sub.add_parser("powerflow", parents=[common], help="one-shot feeder power flow")
    f.add_argument("--feeder", help="feeder file (default: built-in five-bus feeder)")
    f.add_argument(
        "--inject",
        action="append",
        type=_parse_injection,
        metavar="HH=W",
        help="household consumption in W (negative for export); repeatable",
    )
    f.set_defaults(func=cmd_powerflow)

    g = sub.add_parser("gen-profiles", parents=[common], help="write a synthetic profile CSV")
    g.set_defaults(func=cmd_gen_profiles)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except MODULE_ERRORS as exc:
        print(f"gridmarket {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
