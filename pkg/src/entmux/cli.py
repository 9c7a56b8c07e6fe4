"""Command-line front end: ``entmux <subcommand> [--config F] [--out D] ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import numpy as np

from . import io, sim
from .analysis import (FitError, UndefinedCARError, chsh_violation, compute_car, fit_fringe,
                       hom_visibility)
from .config import ConfigError, ExperimentConfig, default_config, load_config
from .grid import PairingError, UnknownChannelError, default_grid, pair_for_index, table_rows
from .oracle import OracleParams, analytic_car, oracle_table

log = logging.getLogger("entmux")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
           "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    config_path: Path | None = None
    out_dir: Path = Path(".")
    seed: int | None = None
    workers: int | None = None
    duration_s: float | None = None
    channels: bool = False

    def load(self) -> ExperimentConfig:
        cfg = load_config(self.config_path) if self.config_path else default_config()
        changes = {}
        if self.seed is not None:
            changes["rng_seed"] = self.seed
        if self.duration_s is not None:
            if not self.duration_s > 0:
                raise ConfigError("--duration must be positive")
            changes["duration_s"] = self.duration_s
            changes["slot_duration_s"] = {}
        cfg = cfg.replace(**changes).validate() if changes else cfg
        return cfg


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=_u64, help="override rng_seed")
    common.add_argument("--workers", type=_positive_int, help="worker threads (default: all cores)")
    common.add_argument("--duration", type=float, help="override duration_s for every slot")
    p = argparse.ArgumentParser(prog="entmux", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True, metavar="{fringe,hom,budget,car-scan,oracle,grid}")
    sub.add_parser("fringe", parents=[common], help="two-photon fringe sweep, fit and CHSH verdict")
    sub.add_parser("hom", parents=[common], help="four-fold HOM dip between two time slots")
    b = sub.add_parser("budget", parents=[common], help="per-path loss ledgers")
    b.add_argument("--channels", action="store_true", help="print the channel-pair table instead")
    sub.add_parser("car-scan", parents=[common], help="CAR versus mu or channel, with oracle column")
    sub.add_parser("oracle", parents=[common], help="closed-form predictions for the configuration")
    sub.add_parser("grid", parents=[common], help="ITU channel grid and pair assignments")
    return p


def _out_dir(m: RunManifest) -> Path:
    m.out_dir.mkdir(parents=True, exist_ok=True)
    return m.out_dir


def _pair_label(cfg: ExperimentConfig, channel: int) -> str:
    return pair_for_index(channel, cfg.pump_channel).label


# --------------------------------------------------------------------------
# subcommands

def cmd_fringe(m: RunManifest) -> int:
    cfg = m.load()
    if cfg.sweep_points < 5:
        raise UsageError(f"sweep needs at least 5 points, got {cfg.sweep_points}")
    label = _pair_label(cfg, cfg.channel)
    slot = cfg.slot
    values = sim.sweep_values(cfg)
    period = math.pi if cfg.sweep_parameter == "pump" else 2.0 * math.pi
    out = _out_dir(m)
    res = sim.run_fringe_experiment(cfg, values, workers=m.workers)
    coinc = [r.coincidences for r in res]
    acc = [r.accidentals for r in res]
    dur = cfg.duration_for(slot)
    stem = f"{label}_T{slot}"
    io.write_fringe_csv(out / f"fringe_{stem}.csv", values, coinc, acc, dur)
    singles = {}
    for r in res:
        for k, v in r.singles.items():
            singles[k] = singles.get(k, 0) + v
    io.write_singles_csv(out / f"singles_{stem}.csv", singles)

    metrics = fringe_metrics(values, coinc, acc, period)
    io.write_results_csv(out / "results.csv", metrics)
    fit = fit_fringe(values, coinc, fixed_period=period)
    xs = np.linspace(values.min(), values.max(), 200)
    io.svg_plot(out / f"fringe_{stem}.svg", values, coinc, (xs, fit.predict(xs)),
                f"{cfg.sweep_parameter} phase (rad)", "coincidences", f"{label} T{slot}")
    vals = {k: v for k, v, _ in metrics}
    print(f"{label} T{slot}: V_raw={vals['visibility_raw']:.4f} V_net={vals['visibility_net']:.4f} "
          f"chsh={'true' if vals['chsh_violation'] else 'false'}")
    return EXIT_OK


def fringe_metrics(phase, coinc, acc, period: float) -> list[tuple[str, object, object]]:
    """Results rows derived only from the fringe CSV columns."""
    c = np.asarray(coinc, dtype=float)
    a = np.asarray(acc, dtype=float)
    raw = fit_fringe(phase, c, fixed_period=period)
    net = fit_fringe(phase, np.maximum(c - a, 0.0), fixed_period=period)
    return [
        ("visibility_raw", raw.visibility, raw.visibility_err),
        ("visibility_net", net.visibility, net.visibility_err),
        ("chsh_violation", chsh_violation(raw.visibility), None),
        ("chsh_violation_net", chsh_violation(net.visibility), None),
        ("period_rad", raw.period, None),
        ("phase_offset_rad", raw.phase_offset, None),
        ("coincidences_total", int(c.sum()), None),
        ("accidentals_total", int(a.sum()), None),
    ]


def default_hom_delays(cfg: ExperimentConfig) -> tuple[float, ...]:
    s = cfg.coherence_sigma_ps
    return tuple(float(k * s) for k in (-20, -4, -3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 4, 20))


def cmd_hom(m: RunManifest) -> int:
    cfg = m.load()
    try:
        slot_a, slot_b = sim.hom_slots(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    channel = cfg.hom_channel or cfg.channel
    label = _pair_label(cfg, channel)
    delays = cfg.hom_delays_ps or default_hom_delays(cfg)
    if len(delays) < 2:
        raise UsageError("HOM scan needs a zero-delay point and a baseline delay")
    out = _out_dir(m)
    points = sim.run_hom_experiment(cfg, delays, workers=m.workers)
    name = f"hom_{label}-T{slot_a}_{label}-T{slot_b}"
    io.write_hom_csv(out / f"{name}.csv", points)
    metrics = hom_metrics(points)
    io.write_results_csv(out / "results.csv", metrics)
    io.svg_plot(out / f"{name}.svg", [p.delay_ps for p in points], [p.fourfold for p in points],
                None, "delay (ps)", "four-fold counts", name)
    vals = {k: v for k, v, _ in metrics}
    print(f"{name}: V_raw={vals['hom_visibility_raw']:.4f} V_net={vals['hom_visibility_net']:.4f}")
    return EXIT_OK


def hom_metrics(points) -> list[tuple[str, object, object]]:
    dip = min(points, key=lambda p: abs(p.delay_ps))
    base = max(points, key=lambda p: abs(p.delay_ps))
    dark = 0.5 * (dip.dark_fourfold + base.dark_fourfold)
    v = hom_visibility(dip.fourfold, base.fourfold, dark if dark < base.fourfold else None)
    return [
        ("hom_visibility_raw", v.raw, v.raw_err),
        ("hom_visibility_net", v.net, v.net_err),
        ("dip_delay_ps", dip.delay_ps, None),
        ("baseline_delay_ps", base.delay_ps, None),
        ("fourfold_dip", dip.fourfold, None),
        ("fourfold_baseline", base.fourfold, None),
        ("dark_fourfold", dark, None),
    ]


def _fmt_db(d: Decimal) -> str:
    return format(d.normalize(), "f")


def cmd_budget(m: RunManifest) -> int:
    cfg = m.load()
    if m.channels:
        for row in table_rows(cfg.pump_channel):
            print(row)
        return EXIT_OK
    rows = []
    for path in sorted(cfg.ledgers):
        ledger = cfg.ledgers[path]
        for name, db in ledger:
            print(f"  {path} {name} {_fmt_db(db)} dB")
            rows.append((path, name, _fmt_db(db)))
        print(f"{path} {_fmt_db(ledger.total_db)} dB transmittance {ledger.transmittance!r}")
    if m.config_path is not None or m.out_dir != Path("."):
        io.write_csv(_out_dir(m) / "budget.csv", ("path", "element", "loss_db"), rows)
    return EXIT_OK


def cmd_car_scan(m: RunManifest) -> int:
    cfg = m.load()
    if cfg.scan_parameter is None or not cfg.scan_values:
        raise UsageError("car-scan needs scan.parameter and scan.values")
    if cfg.n_periods(cfg.slot) == 0:
        raise UsageError("car-scan needs a positive duration")
    out = _out_dir(m)
    rows = []
    for point, value in enumerate(cfg.scan_values):
        if cfg.scan_parameter == "mu":
            run_cfg, channel = cfg.replace(mu=float(value)).validate(), cfg.channel
        else:
            channel = int(value)
            if channel != value:
                raise UsageError(f"channel scan values must be integers, got {value!r}")
            pair_for_index(channel, cfg.pump_channel)
            run_cfg = cfg
        summary = sim.run_car_experiment(run_cfg, channel=channel, workers=m.workers, point=point)
        try:
            car = compute_car(summary.coincidences, summary.accidentals)
        except UndefinedCARError as exc:
            log.warning("point %s: no accidentals, reporting lower bound %g", value, exc.lower_bound)
            car = exc.lower_bound
        try:
            expect = analytic_car(OracleParams.from_config(run_cfg, channel=channel, analyzers=False))
        except UndefinedCARError:
            expect = math.inf
        rows.append((float(value), float(car), float(expect)))
        log.info("%s=%s car=%.4g oracle=%.4g", cfg.scan_parameter, value, car, expect)
    io.write_csv(out / "car_scan.csv", io.CAR_SCAN_HEADER, rows)
    for r in rows:
        print(f"{r[0]!r}\t{r[1]:.4g}\t{r[2]:.4g}")
    return EXIT_OK


def cmd_oracle(m: RunManifest) -> int:
    cfg = m.load()
    rows = oracle_table(cfg)
    for name, value in rows:
        print(f"{name}\t{value!r}")
    if m.config_path is not None or m.out_dir != Path("."):
        io.write_csv(_out_dir(m) / "oracle.csv", ("metric", "value"), rows)
    return EXIT_OK


def cmd_grid(m: RunManifest) -> int:
    cfg = m.load()
    grid = default_grid()
    for ch in grid:
        tag = "  pump" if ch.index == cfg.pump_channel else ""
        print(f"{ch.label}\t{ch.wavelength_text}{tag}")
    print()
    for row in table_rows(cfg.pump_channel):
        print(row)
    return EXIT_OK


COMMANDS = {"fringe": cmd_fringe, "hom": cmd_hom, "budget": cmd_budget, "car-scan": cmd_car_scan,
            "oracle": cmd_oracle, "grid": cmd_grid}


def _setup_logging():
    level = _LEVELS.get(os.environ.get("ENTMUX_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    m = RunManifest(args.subcommand, args.config, args.out, args.seed, args.workers, args.duration,
                    getattr(args, "channels", False))
    try:
        return COMMANDS[args.subcommand](m)
    except (UsageError, ConfigError, PairingError, UnknownChannelError) as exc:
        print(f"entmux: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FitError, ValueError, RuntimeError) as exc:
        print(f"entmux: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
