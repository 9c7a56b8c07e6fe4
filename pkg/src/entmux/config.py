"""Experiment configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .analysis import LossLedger
from .quantum import mode_from_bandwidth

PAIR_STATISTICS = ("thermal", "poisson", "bernoulli")
SWEEP_PARAMETERS = ("pump", "signal", "idler")
SCAN_PARAMETERS = ("mu", "channel")


class ConfigError(ValueError):
    pass


def _default_ledgers() -> dict[str, LossLedger]:
    base = [("waveguide", "5.00"), ("dwdm", "2.00"), ("switch", "2.5")]
    tail = [("umi", "4.7"), ("detector", "1.5")]
    return {
        "T1": LossLedger(base + tail),
        "T2": LossLedger(base + [("switch_2", "2.5")] + tail),
        "T3": LossLedger(base + [("switch_2", "2.5")] + tail),
    }


@dataclass
class ExperimentConfig:
    rep_rate_mhz: float = 27.97
    slot_spacing_ns: float = 10.0
    n_slots: int = 3
    umi_imbalance_ns: float = 1.6
    pump_phase: dict[int, float] = field(default_factory=dict)
    signal_phase: float = 0.0
    idler_phase: float = 0.0
    mu: float = 0.005
    pair_statistics: str = "thermal"
    raman_singles_rate: float = 0.0
    raman_rate: dict[int, float] = field(default_factory=dict)
    dark_rate_hz: float = 100.0
    detector_jitter_sigma_ps: float = 50.0
    coincidence_window_ps: float = 1000.0
    v_cap: float = 1.0
    switch_extinction_db: float = math.inf
    switch_gate_guard_ps: int = 1000
    switch_gate_width_ps: int = 9000
    switch_delay_ps: int = 0
    analyzers: bool = True
    ledgers: dict[str, LossLedger] = field(default_factory=_default_ledgers)
    duration_s: float = 60.0
    slot_duration_s: dict[int, float] = field(default_factory=dict)
    rng_seed: int = 0
    pump_channel: int = 34
    channel: int = 8
    slot: int = 1
    sweep_parameter: str = "pump"
    sweep_start: float = 0.0
    sweep_stop: float = 2.0 * math.pi
    sweep_points: int = 21
    sweep_endpoint: bool = False
    hom_slot_a: int | None = None
    hom_slot_b: int | None = None
    hom_channel: int | None = None
    hom_delays_ps: tuple[float, ...] = ()
    hom_batch_periods: int = 1 << 24
    coherence_sigma_ps: float = field(default_factory=lambda: mode_from_bandwidth(100.0).coherence_sigma)
    scan_parameter: str | None = None
    scan_values: tuple[float, ...] = ()
    batch_periods: int = 1 << 20

    # ---- derived timing (integer ps) ----
    @property
    def period_ps(self) -> int:
        return int(round(1e6 / self.rep_rate_mhz))

    @property
    def slot_spacing_ps(self) -> int:
        return int(round(self.slot_spacing_ns * 1000.0))

    @property
    def imbalance_ps(self) -> int:
        return int(round(self.umi_imbalance_ns * 1000.0))

    def n_periods(self, slot: int | None = None) -> int:
        dur = self.duration_for(slot)
        return int(round(dur * self.rep_rate_mhz * 1e6))

    def duration_for(self, slot: int | None = None) -> float:
        if slot is not None and slot in self.slot_duration_s:
            return self.slot_duration_s[slot]
        return self.duration_s

    def phase_for(self, slot: int) -> float:
        return self.pump_phase.get(slot, 0.0)

    def raman_for(self, pair_index: int) -> float:
        return self.raman_rate.get(pair_index, self.raman_singles_rate)

    def ledger_for(self, slot: int) -> LossLedger:
        try:
            return self.ledgers[f"T{slot}"]
        except KeyError:
            raise ConfigError(f"no loss ledger for slot T{slot}") from None

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "ExperimentConfig":
        if self.rep_rate_mhz <= 0:
            raise ConfigError("rep_rate_mhz must be positive")
        if self.n_slots < 1:
            raise ConfigError("n_slots must be >= 1")
        if self.n_slots * self.slot_spacing_ps >= self.period_ps and self.n_slots > 1:
            raise ConfigError(
                f"{self.n_slots} slots x {self.slot_spacing_ns} ns overlap the {self.period_ps} ps period")
        if self.umi_imbalance_ns * 1000.0 <= self.coincidence_window_ps:
            raise ConfigError("umi_imbalance_ns must exceed the coincidence window")
        if self.mu < 0 or self.raman_singles_rate < 0 or self.dark_rate_hz < 0:
            raise ConfigError("mu and noise rates must be non-negative")
        if any(v < 0 for v in self.raman_rate.values()):
            raise ConfigError("raman rates must be non-negative")
        if self.pair_statistics not in PAIR_STATISTICS:
            raise ConfigError(f"pair_statistics must be one of {PAIR_STATISTICS}")
        if self.pair_statistics == "bernoulli" and self.mu > 1:
            raise ConfigError("bernoulli pair statistics need mu <= 1")
        if not 0 <= self.v_cap <= 1:
            raise ConfigError("v_cap must lie in [0, 1]")
        if self.detector_jitter_sigma_ps < 0 or self.coincidence_window_ps <= 0:
            raise ConfigError("jitter must be >= 0 and window > 0")
        if self.switch_extinction_db <= 0:
            raise ConfigError("switch_extinction_db must be positive")
        if self.switch_gate_guard_ps < 0 or self.switch_gate_width_ps <= 0:
            raise ConfigError("switch gate guard/width invalid")
        if self.switch_gate_width_ps <= self.switch_gate_guard_ps + self.imbalance_ps:
            raise ConfigError("switch gate must cover both emission bins")
        if self.switch_gate_width_ps > self.slot_spacing_ps and self.n_slots > 1:
            raise ConfigError("switch gate wider than slot spacing")
        if self.duration_s < 0 or any(v < 0 for v in self.slot_duration_s.values()):
            raise ConfigError("durations must be non-negative")
        if not 1 <= self.slot <= self.n_slots:
            raise ConfigError(f"slot T{self.slot} outside T1..T{self.n_slots}")
        if self.sweep_parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}")
        if self.scan_parameter is not None and self.scan_parameter not in SCAN_PARAMETERS:
            raise ConfigError(f"scan.parameter must be one of {SCAN_PARAMETERS}")
        if self.coherence_sigma_ps <= 0:
            raise ConfigError("coherence_sigma_ps must be positive")
        if not 0 <= self.rng_seed < 1 << 64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")
        return self


# --------------------------------------------------------------------------
# file format

def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _slot_key(suffix: str) -> int:
    s = suffix.upper()
    if not s.startswith("T"):
        raise ValueError(f"slot key must look like T1, got {suffix!r}")
    return int(s[1:])


def _pair_key(suffix: str) -> int:
    s = suffix.upper()
    return int(s[1:] if s.startswith("S") else s)


def _opt_int(text: str) -> int | None:
    return None if text.lower() in ("", "none") else int(text)


_SCALARS = {
    "rep_rate_mhz": float, "slot_spacing_ns": float, "n_slots": int, "umi_imbalance_ns": float,
    "signal_phase": float, "idler_phase": float, "mu": float, "pair_statistics": str,
    "raman_singles_rate": float, "dark_rate_hz": float, "detector_jitter_sigma_ps": float,
    "coincidence_window_ps": float, "v_cap": float, "switch_extinction_db": float,
    "switch_gate_guard_ps": int, "switch_gate_width_ps": int, "switch_delay_ps": int,
    "analyzers": _bool, "duration_s": float, "rng_seed": int, "pump_channel": int,
    "channel": int, "slot": int, "coherence_sigma_ps": float, "batch_periods": int,
    "sweep.parameter": str, "sweep.start": float, "sweep.stop": float, "sweep.points": int,
    "sweep.endpoint": _bool,
    "hom.slot_a": _opt_int, "hom.slot_b": _opt_int, "hom.channel": _opt_int,
    "hom.delays_ps": _floats, "hom.batch_periods": int,
    "scan.parameter": str, "scan.values": _floats,
}


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; unknown keys are errors.

    Any ``loss.<path>.<element>`` line replaces the default ledger of that path;
    entries keep file order.
    """
    cfg = dataclasses.replace(base) if base is not None else ExperimentConfig()
    updates: dict[str, object] = {}
    pump_phase = dict(cfg.pump_phase)
    raman = dict(cfg.raman_rate)
    slot_dur = dict(cfg.slot_duration_s)
    new_ledgers: dict[str, list[tuple[str, str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        try:
            if key in _SCALARS:
                updates[key.replace(".", "_")] = _SCALARS[key](value)
            elif key.startswith("pump_phase."):
                pump_phase[_slot_key(key.split(".", 1)[1])] = float(value)
            elif key.startswith("raman_rate."):
                raman[_pair_key(key.split(".", 1)[1])] = float(value)
            elif key.startswith("duration_s."):
                slot_dur[_slot_key(key.split(".", 1)[1])] = float(value)
            elif key.startswith("loss."):
                parts = key.split(".")
                if len(parts) == 2 and value.lower() == "none":
                    new_ledgers[parts[1]] = []
                    continue
                if len(parts) != 3:
                    raise ValueError("expected loss.<path>.<element>")
                float(value)
                new_ledgers.setdefault(parts[1], []).append((parts[2], value))
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None

    if "scan_parameter" in updates and str(updates["scan_parameter"]).lower() == "none":
        updates["scan_parameter"] = None
    ledgers = dict(cfg.ledgers)
    for path, entries in new_ledgers.items():
        try:
            ledgers[path] = LossLedger(entries)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    cfg = dataclasses.replace(cfg, pump_phase=pump_phase, raman_rate=raman,
                              slot_duration_s=slot_dur, ledgers=ledgers, **updates)
    return cfg.validate()


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def default_config_text() -> str:
    return resources.files("entmux").joinpath("data/default.conf").read_text(encoding="utf-8")


def default_config() -> ExperimentConfig:
    return parse_config(default_config_text())


INTRINSIC_UMI_SPLIT_DB = 10.0 * math.log10(2.0)


def switch_leak_probability(cfg: ExperimentConfig) -> float:
    if cfg.n_slots < 2 or math.isinf(cfg.switch_extinction_db):
        return 0.0
    return 10.0 ** (-cfg.switch_extinction_db / 10.0)


def photon_transmittance(cfg: ExperimentConfig, slot: int, analyzers: bool | None = None) -> float:
    """Ledger transmittance applied per photon by the simulator.

    ``umi*`` entries are dropped when the analyzers are out of the path.  With
    analyzers in place the 3.01 dB port split is realized by the quantum model,
    so only the excess of each ``umi*`` entry is applied here.
    """
    analyzers = cfg.analyzers if analyzers is None else analyzers
    total = 0.0
    for name, db in cfg.ledger_for(slot):
        db = float(db)
        if name.startswith("umi"):
            if not analyzers:
                continue
            db = max(db - INTRINSIC_UMI_SPLIT_DB, 0.0)
        total += db
    return 10.0 ** (-total / 10.0)
