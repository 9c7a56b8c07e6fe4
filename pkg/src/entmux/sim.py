"""Discrete-event Monte Carlo of the multiplexed time-bin source and its detection chain.

Time is integer picoseconds throughout.  Pulses are grouped into fixed-size
batches of pump periods; each (stage, sweep point, batch) draws from its own
counter-based stream, so results are bit-identical for any worker count.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

from . import rng as rngmod
from .config import ExperimentConfig, photon_transmittance, switch_leak_probability
from .oracle import hom_epsilon
from .quantum import (CENTRAL, MONITORED, arrival_for_phases, hom_coincidence_probability,
                      temporal_overlap, TemporalMode)

log = logging.getLogger(__name__)

SIGNAL, IDLER, RAMAN, DARK = 0, 1, 2, 3
ORIGIN_NAMES = ("signal", "idler", "raman", "dark")


class UnroutedEventError(RuntimeError):
    pass


@dataclass(frozen=True)
class DetectionRecord:
    detector_id: str
    time_tag_ps: int
    origin: str


@dataclass
class DetectionRecords:
    """Time-ordered clicks of one detector, stored column-wise."""

    detector_id: str
    time_tag_ps: np.ndarray
    origin: np.ndarray
    source_slot: np.ndarray | None = None

    def __len__(self):
        return len(self.time_tag_ps)

    def __iter__(self):
        for t, o in zip(self.time_tag_ps.tolist(), self.origin.tolist()):
            yield DetectionRecord(self.detector_id, t, ORIGIN_NAMES[o])

    @classmethod
    def merge(cls, detector_id: str, parts: list["DetectionRecords"]) -> "DetectionRecords":
        if not parts:
            return cls(detector_id, np.zeros(0, np.int64), np.zeros(0, np.int8))
        t = np.concatenate([p.time_tag_ps for p in parts])
        o = np.concatenate([p.origin for p in parts])
        order = np.argsort(t, kind="stable")
        slots = None
        if all(p.source_slot is not None for p in parts):
            slots = np.concatenate([p.source_slot for p in parts])[order]
        return cls(detector_id, t[order], o[order], slots)


@dataclass
class CountSummary:
    singles: dict[str, int] = field(default_factory=dict)
    coincidences: int = 0
    accidentals: int = 0
    fourfold: int | None = None
    dark_fourfold: int | None = None
    periods: int = 0
    diagnostics: dict[str, int] = field(default_factory=dict)


# --------------------------------------------------------------------------
# schedule and switching

def generate_pulse_schedule(cfg: ExperimentConfig, n_periods: int = 1, start_period: int = 0):
    """Pulse times (ps) and 1-based slot numbers for ``n_periods`` pump periods."""
    cfg.validate()
    k = np.arange(start_period, start_period + n_periods, dtype=np.int64)
    j = np.arange(cfg.n_slots, dtype=np.int64)
    times = (k[:, None] * cfg.period_ps + j[None, :] * cfg.slot_spacing_ps).reshape(-1)
    slots = np.tile(j + 1, n_periods)
    return times, slots


@dataclass(frozen=True)
class SwitchSchedule:
    """Gate windows relative to each period start, one per output port."""

    period_ps: int
    windows: tuple[tuple[int, int], ...]
    delay_ps: int = 0
    leak_probability: float = 0.0

    def __post_init__(self):
        spans = sorted((o % self.period_ps, c - o) for o, c in self.windows)
        for (o1, w1), (o2, _) in zip(spans, spans[1:]):
            if o1 + w1 > o2:
                raise ValueError("switch windows overlap")
        if spans and spans[-1][0] + spans[-1][1] > spans[0][0] + self.period_ps:
            raise ValueError("switch windows overlap across the period boundary")

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "SwitchSchedule":
        wins = []
        for j in range(cfg.n_slots):
            start = j * cfg.slot_spacing_ps - cfg.switch_gate_guard_ps
            wins.append((start, start + cfg.switch_gate_width_ps))
        return cls(cfg.period_ps, tuple(wins), cfg.switch_delay_ps, switch_leak_probability(cfg))

    @property
    def n_ports(self) -> int:
        return len(self.windows)

    def scheduled_port(self, time_tag_ps) -> np.ndarray:
        """Port (1-based) whose gate is open at each tag; 0 where none is."""
        t = np.asarray(time_tag_ps, dtype=np.int64) - self.delay_ps
        port = np.zeros(t.shape, dtype=np.int64)
        for p, (o, c) in enumerate(self.windows, 1):
            inside = np.mod(t - o, self.period_ps) < (c - o)
            port[inside] = p
        return port


def _route(tags, schedule: SwitchSchedule, rng: np.random.Generator) -> np.ndarray:
    port = schedule.scheduled_port(tags)
    if schedule.leak_probability > 0 and schedule.n_ports > 1:
        leak = (rng.random(port.shape) < schedule.leak_probability) & (port > 0)
        n = schedule.n_ports
        # adjacent ports only; edge ports have a single neighbour
        up = rng.random(port.shape) < 0.5
        alt = np.where(up, port + 1, port - 1)
        alt = np.where(port == 1, 2, alt)
        alt = np.where(port == n, n - 1, alt)
        port = np.where(leak, alt, port)
    return port


def route_time_slot(time_tag_ps, schedule: SwitchSchedule, rng: np.random.Generator):
    """Output port(s) for switch-input tags; raises if a tag falls between gates."""
    port = _route(np.atleast_1d(time_tag_ps), schedule, rng)
    if np.any(port == 0):
        raise UnroutedEventError(f"{int(np.sum(port == 0))} tag(s) outside every gate window")
    return int(port[0]) if np.ndim(time_tag_ps) == 0 else port


# --------------------------------------------------------------------------
# sources, loss, detection

def first_pair_probability(mu: float, statistics: str) -> float:
    if statistics == "thermal":
        return mu / (1.0 + mu)
    if statistics == "poisson":
        return -math.expm1(-mu)
    if statistics == "bernoulli":
        return mu
    raise ValueError(f"unknown pair statistics {statistics!r}")


def sample_pair_numbers(mu: float, statistics: str, size: int, rng: np.random.Generator,
                        at_least_one: bool = False) -> np.ndarray:
    """Pairs per pulse; ``at_least_one`` samples the distribution conditioned on n >= 1."""
    if size == 0 or mu == 0:
        return np.zeros(size, np.int64) if not at_least_one else np.ones(size, np.int64)
    if statistics == "thermal":
        if at_least_one:
            return rng.geometric(1.0 / (1.0 + mu), size).astype(np.int64)
        return rng.geometric(1.0 / (1.0 + mu), size).astype(np.int64) - 1
    if statistics == "poisson":
        n = rng.poisson(mu, size).astype(np.int64)
        if at_least_one:
            bad = n == 0
            while bad.any():
                n[bad] = rng.poisson(mu, int(bad.sum()))
                bad = n == 0
        return n
    if statistics == "bernoulli":
        if at_least_one:
            return np.ones(size, np.int64)
        return (rng.random(size) < mu).astype(np.int64)
    raise ValueError(f"unknown pair statistics {statistics!r}")


@dataclass(frozen=True)
class PairEmission:
    pulse_time_ps: int
    slot: int
    channel: int
    coherent: bool


def emit_pairs(pulse: tuple[int, int], channel: int, cfg: ExperimentConfig,
               rng: np.random.Generator) -> list[PairEmission]:
    """Pairs created by one pulse; only the first keeps the coherent two-bin phase."""
    t, slot = pulse
    n = int(sample_pair_numbers(cfg.mu, cfg.pair_statistics, 1, rng)[0])
    return [PairEmission(int(t), int(slot), channel, i == 0) for i in range(n)]


def apply_loss(n_events: int, transmittance: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli survival flags."""
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance!r}")
    if transmittance == 1.0:
        return np.ones(n_events, dtype=bool)
    return rng.random(n_events) < transmittance


def detect(time_tag_ps, jitter_sigma_ps: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian timing jitter, rounded half-to-even onto the 1 ps grid.

    Detector efficiency is a loss-ledger line and is not applied here.
    """
    t = np.asarray(time_tag_ps, dtype=np.int64)
    if jitter_sigma_ps == 0:
        return t.copy()
    return t + np.rint(rng.normal(0.0, jitter_sigma_ps, t.shape)).astype(np.int64)


def dark_counts(rate_hz: float, t0_ps: int, t1_ps: int, rng: np.random.Generator) -> np.ndarray:
    if rate_hz == 0 or t1_ps <= t0_ps:
        return np.zeros(0, np.int64)
    n = rng.poisson(rate_hz * (t1_ps - t0_ps) * 1e-12)
    return np.sort(rng.integers(t0_ps, t1_ps, n, dtype=np.int64))


def inject_noise(cfg: ExperimentConfig, n_periods: int, rng: np.random.Generator,
                 detector_id: str = "signal", slot: int = 1,
                 raman_per_pulse: float | None = None) -> DetectionRecords:
    """Dark counts plus pulse-locked Raman clicks for one detector.

    Raman photons are drawn already thinned by the path transmittance
    (a thinned Poisson process is Poisson).
    """
    raman = cfg.raman_singles_rate if raman_per_pulse is None else raman_per_pulse
    period = cfg.period_ps
    offset = (slot - 1) * cfg.slot_spacing_ps
    eta = photon_transmittance(cfg, slot) * (1.0 - switch_leak_probability(cfg))
    mean = raman * eta * (0.5 if cfg.analyzers else 1.0)
    n_r = rng.poisson(mean * n_periods)
    k = rng.integers(0, n_periods, n_r, dtype=np.int64)
    if cfg.analyzers:
        slot_off = rng.integers(0, 2, n_r) + rng.integers(0, 2, n_r)
    else:
        slot_off = rng.integers(0, 2, n_r)
    t_r = detect(k * period + offset + slot_off * cfg.imbalance_ps, cfg.detector_jitter_sigma_ps, rng)
    t_d = dark_counts(cfg.dark_rate_hz, 0, n_periods * period, rng)
    t = np.concatenate([t_r, t_d])
    o = np.concatenate([np.full(len(t_r), RAMAN, np.int8), np.full(len(t_d), DARK, np.int8)])
    order = np.argsort(t, kind="stable")
    return DetectionRecords(detector_id, t[order], o[order])


# --------------------------------------------------------------------------
# counting

def coincidence_count(records_a, records_b, window_ps: float, offset_ps: int | None = None) -> tuple[int, int]:
    """(coincidences, accidentals) between two time-sorted tag streams.

    Coincidences pair tags with |tA - tB| <= window/2; accidentals repeat the
    match against B delayed by ``offset_ps`` (one pump period if omitted).
    """
    ta = _tags(records_a)
    tb = _tags(records_b)
    if np.any(np.diff(ta) < 0) or np.any(np.diff(tb) < 0):
        raise ValueError("records must be time-sorted")
    if offset_ps is None:
        offset_ps = int(round(1e6 / 27.97))
    half = window_ps / 2.0
    return _matches(ta, tb, half, 0), _matches(ta, tb, half, offset_ps)


def _tags(records) -> np.ndarray:
    if isinstance(records, DetectionRecords):
        return records.time_tag_ps
    return np.asarray(records, dtype=np.int64)


def _matches(ta: np.ndarray, tb: np.ndarray, half: float, offset: int) -> int:
    if len(ta) == 0 or len(tb) == 0:
        return 0
    lo = np.searchsorted(tb, ta + offset - half, side="left")
    hi = np.searchsorted(tb, ta + offset + half, side="right")
    return int(np.sum(hi - lo))


def central_gate(records: DetectionRecords, cfg: ExperimentConfig, slot: int) -> np.ndarray:
    """Tags arriving in the central analyzer slot of ``slot``'s pulses."""
    t = records.time_tag_ps
    period = cfg.period_ps
    center = (slot - 1) * cfg.slot_spacing_ps + cfg.imbalance_ps
    rel = np.mod(t - center + period // 2, period) - period // 2
    return t[np.abs(rel) <= cfg.coincidence_window_ps / 2.0]


# --------------------------------------------------------------------------
# batched source simulation

def _batches(n_periods: int, batch: int):
    for b, start in enumerate(range(0, n_periods, batch)):
        yield b, start, min(batch, n_periods - start)


def _sparse_indices(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    k = rng.binomial(n, p) if p < 1 else n
    if k == 0:
        return np.zeros(0, np.int64)
    if k == n:
        return np.arange(n, dtype=np.int64)
    return np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)


@dataclass
class _BatchOut:
    signal: DetectionRecords
    idler: DetectionRecords
    unrouted: int = 0
    leaked: int = 0


def _simulate_batch(cfg: ExperimentConfig, slot: int, channel: int, phases, point: int,
                    b: int, start: int, count: int) -> _BatchOut:
    seed = cfg.rng_seed
    period, delta = cfg.period_ps, cfg.imbalance_ps
    slot_off = (slot - 1) * cfg.slot_spacing_ps
    eta = photon_transmittance(cfg, slot)
    schedule = SwitchSchedule.from_config(cfg)

    # pairs
    g = rngmod.stream(seed, rngmod.PAIRS, slot, channel, point, b)
    p1 = first_pair_probability(cfg.mu, cfg.pair_statistics)
    active = _sparse_indices(count, p1, g) + start
    n = sample_pair_numbers(cfg.mu, cfg.pair_statistics, len(active), g, at_least_one=True)
    pulse_of_pair = np.repeat(active, n)
    first = np.ones(len(pulse_of_pair), dtype=bool)
    if len(n):
        starts = np.cumsum(n) - n
        first[:] = False
        first[starts] = True
    n_pairs = len(pulse_of_pair)
    if cfg.analyzers:
        phi_p, phi_s, phi_i = phases
        coh = arrival_for_phases(phi_p, phi_s, phi_i, cfg.v_cap).flat()
        inc = arrival_for_phases(phi_p, phi_s, phi_i, 0.0).flat()
        u = g.random(n_pairs)
        cell = np.where(first, np.searchsorted(np.cumsum(coh), u, side="right"),
                        np.searchsorted(np.cumsum(inc), u, side="right"))
        cell = np.minimum(cell, 35)
        port_s, slot_s, port_i, slot_i = np.unravel_index(cell, (2, 3, 2, 3))
        keep_s = port_s == MONITORED
        keep_i = port_i == MONITORED
        off_s, off_i = slot_s * delta, slot_i * delta
    else:
        bins = g.integers(0, 2, n_pairs)
        keep_s = np.ones(n_pairs, dtype=bool)
        keep_i = np.ones(n_pairs, dtype=bool)
        off_s = off_i = bins * delta
    pulse_t = pulse_of_pair * period + slot_off

    # switch, then ledger loss
    gr = rngmod.stream(seed, rngmod.ROUTE, slot, channel, point, b)
    port_s_sw = _route(pulse_t, schedule, gr)
    port_i_sw = _route(pulse_t, schedule, gr)
    unrouted = int(np.sum(port_s_sw == 0) + np.sum(port_i_sw == 0))
    leaked = int(np.sum((port_s_sw != slot) & (port_s_sw > 0)) + np.sum((port_i_sw != slot) & (port_i_sw > 0)))
    keep_s &= port_s_sw == slot
    keep_i &= port_i_sw == slot
    gl = rngmod.stream(seed, rngmod.DETECT, slot, channel, point, b)
    keep_s &= apply_loss(n_pairs, eta, gl)
    keep_i &= apply_loss(n_pairs, eta, gl)
    ts = detect(pulse_t[keep_s] + off_s[keep_s], cfg.detector_jitter_sigma_ps, gl)
    ti = detect(pulse_t[keep_i] + off_i[keep_i], cfg.detector_jitter_sigma_ps, gl)

    # noise
    raman = cfg.raman_for(channel)
    noise = []
    for k, det in enumerate(("signal", "idler")):
        gn = rngmod.stream(seed, rngmod.RAMAN, slot, channel, point, b, k)
        rec = inject_noise(cfg, count, gn, det, slot, raman)
        noise.append(DetectionRecords(det, rec.time_tag_ps + start * period, rec.origin))

    sig = DetectionRecords.merge("signal", [
        DetectionRecords("signal", ts, np.full(len(ts), SIGNAL, np.int8)), noise[0]])
    idl = DetectionRecords.merge("idler", [
        DetectionRecords("idler", ti, np.full(len(ti), IDLER, np.int8)), noise[1]])
    return _BatchOut(sig, idl, unrouted, leaked)


def _map(fn, tasks, workers):
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def simulate_channel(cfg: ExperimentConfig, slot: int, channel: int, phases, point: int = 0,
                     n_periods: int | None = None, workers: int | None = None):
    """Signal and idler records of one channel pair in one time slot."""
    cfg.validate()
    n_periods = cfg.n_periods(slot) if n_periods is None else n_periods
    tasks = [(cfg, slot, channel, phases, point, b, s, c)
             for b, s, c in _batches(n_periods, cfg.batch_periods)]
    outs = _map(_simulate_batch, tasks, workers)
    sig = DetectionRecords.merge("signal", [o.signal for o in outs])
    idl = DetectionRecords.merge("idler", [o.idler for o in outs])
    diag = {"unrouted": sum(o.unrouted for o in outs), "leaked": sum(o.leaked for o in outs)}
    return sig, idl, diag


def sweep_phases(cfg: ExperimentConfig, values, slot: int):
    """(phi_p, phi_s, phi_i) triples for a sweep of ``cfg.sweep_parameter``."""
    out = []
    for v in values:
        p, s, i = cfg.phase_for(slot), cfg.signal_phase, cfg.idler_phase
        if cfg.sweep_parameter == "pump":
            p = v
        elif cfg.sweep_parameter == "signal":
            s = v
        else:
            i = v
        out.append((float(p), float(s), float(i)))
    return out


def sweep_values(cfg: ExperimentConfig) -> np.ndarray:
    return np.linspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points, endpoint=cfg.sweep_endpoint)


def run_fringe_experiment(cfg: ExperimentConfig, phase_sweep=None, slot: int | None = None,
                          channel: int | None = None, n_periods: int | None = None,
                          workers: int | None = None) -> list[CountSummary]:
    """Central-central coincidences and one-period accidentals per sweep point."""
    cfg.validate()
    slot = cfg.slot if slot is None else slot
    channel = cfg.channel if channel is None else channel
    values = sweep_values(cfg) if phase_sweep is None else np.asarray(phase_sweep, dtype=float)
    if len(values) == 0:
        raise ValueError("empty phase sweep")
    n_periods = cfg.n_periods(slot) if n_periods is None else n_periods
    results = []
    for point, phases in enumerate(sweep_phases(cfg, values, slot)):
        sig, idl, diag = simulate_channel(cfg, slot, channel, phases, point, n_periods, workers)
        if cfg.analyzers:
            a, bb = central_gate(sig, cfg, slot), central_gate(idl, cfg, slot)
        else:
            a, bb = sig.time_tag_ps, idl.time_tag_ps
        c, acc = coincidence_count(a, bb, cfg.coincidence_window_ps, cfg.period_ps)
        results.append(CountSummary({"signal": len(sig), "idler": len(idl)}, c, acc,
                                    periods=n_periods, diagnostics=diag))
        log.debug("point %d phases=%s coinc=%d acc=%d", point, phases, c, acc)
    return results


def run_car_experiment(cfg: ExperimentConfig, slot: int | None = None, channel: int | None = None,
                       n_periods: int | None = None, workers: int | None = None,
                       point: int = 0) -> CountSummary:
    """Single-pass (analyzers removed) coincidence and accidental counts."""
    cfg = cfg.replace(analyzers=False).validate()
    slot = cfg.slot if slot is None else slot
    channel = cfg.channel if channel is None else channel
    n_periods = cfg.n_periods(slot) if n_periods is None else n_periods
    sig, idl, diag = simulate_channel(cfg, slot, channel, (0.0, 0.0, 0.0), point, n_periods, workers)
    c, acc = coincidence_count(sig.time_tag_ps, idl.time_tag_ps, cfg.coincidence_window_ps, cfg.period_ps)
    return CountSummary({"signal": len(sig), "idler": len(idl)}, c, acc, periods=n_periods,
                        diagnostics=diag)


# --------------------------------------------------------------------------
# four-fold HOM between two time slots

@dataclass(frozen=True)
class HomPoint:
    delay_ps: float
    fourfold: int
    dark_fourfold: int
    periods: int
    candidates: int


def _herald_miss(cfg: ExperimentConfig, eta_s: float, raman: float) -> float:
    """Probability that neither Raman nor dark light fires a herald in one window."""
    p_dark = -math.expm1(-cfg.dark_rate_hz * cfg.coincidence_window_ps * 1e-12)
    return math.exp(-raman * eta_s) * (1.0 - p_dark)


def _pair_pmf(mu: float, statistics: str, tol: float = 1e-16, cap: int = 400) -> np.ndarray:
    if statistics == "bernoulli":
        return np.array([1.0 - mu, mu])
    n = np.arange(cap)
    if statistics == "thermal":
        pmf = (mu / (1 + mu)) ** n / (1 + mu)
    else:
        pmf = poisson.pmf(n, mu)
    keep = int(np.searchsorted(np.cumsum(pmf), 1.0 - tol)) + 2
    return pmf[:max(keep, 2)]


def _conditional_pairs(pmf: np.ndarray, eta_s: float, miss: float, size: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Pair numbers conditioned on the herald having fired."""
    n = np.arange(len(pmf))
    w = pmf * (1.0 - (1.0 - eta_s) ** n * miss)
    cdf = np.cumsum(w / w.sum())
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), len(pmf) - 1)


def _hom_block(cfg: ExperimentConfig, M: float, eps: float, n_periods: int, point: int,
               stage: int, block: str | None, slots, channel: int) -> tuple[int, int]:
    slot_a, slot_b = slots
    raman = cfg.raman_for(channel)
    leak = switch_leak_probability(cfg)
    eta = {s: photon_transmittance(cfg, s, analyzers=False) * (1.0 - leak) for s in slots}
    pmf = _pair_pmf(cfg.mu, cfg.pair_statistics)
    gen = {s: float(np.sum(pmf * (1.0 - eta[s]) ** np.arange(len(pmf)))) for s in slots}
    miss = {s: _herald_miss(cfg, eta[s], raman) for s in slots}
    q = {s: 1.0 - gen[s] * miss[s] for s in slots}
    p_cand = q[slot_a] * q[slot_b]
    p_dark = -math.expm1(-cfg.dark_rate_hz * cfg.coincidence_window_ps * 1e-12)

    fourfold = candidates = 0
    for b, _, count in _batches(n_periods, cfg.hom_batch_periods):
        g = rngmod.stream(cfg.rng_seed, stage, slot_a, slot_b, channel, point, b)
        m = int(g.binomial(count, p_cand))
        candidates += m
        if m == 0:
            continue
        na = _conditional_pairs(pmf, eta[slot_a], miss[slot_a], m, g)
        nb = _conditional_pairs(pmf, eta[slot_b], miss[slot_b], m, g)
        ka = g.binomial(na, eta[slot_a])
        kb = g.binomial(nb, eta[slot_b])
        ra = g.poisson(raman * eta[slot_a], m)
        rb = g.poisson(raman * eta[slot_b], m)
        if block == "a":
            ka, ra = np.zeros_like(ka), np.zeros_like(ra)
        elif block == "b":
            kb, rb = np.zeros_like(kb), np.zeros_like(rb)
        # photons reaching each coupler output
        d1 = np.zeros(m, np.int64)
        d2 = np.zeros(m, np.int64)
        # light in both arms meets the coupler model; its epsilon floor stands in
        # for every multi-photon contribution
        interfere = (ka >= 1) & (kb >= 1)
        split = g.random(m) < hom_coincidence_probability(M, eps)
        side = g.random(m) < 0.5
        d1 += np.where(interfere, np.where(split, 1, np.where(side, 2, 0)), 0)
        d2 += np.where(interfere, np.where(split, 1, np.where(side, 0, 2)), 0)
        loose = np.where(interfere, 0, ka + kb) + ra + rb
        to1 = g.binomial(loose, 0.5)
        d1 += to1
        d2 += loose - to1
        fire1 = (d1 > 0) | (g.random(m) < p_dark)
        fire2 = (d2 > 0) | (g.random(m) < p_dark)
        fourfold += int(np.sum(fire1 & fire2))
    return fourfold, candidates


def hom_slots(cfg: ExperimentConfig) -> tuple[int, int]:
    if cfg.hom_slot_a is None or cfg.hom_slot_b is None:
        raise ValueError("HOM run needs hom.slot_a and hom.slot_b")
    a, b = cfg.hom_slot_a, cfg.hom_slot_b
    if a == b or not (1 <= a <= cfg.n_slots and 1 <= b <= cfg.n_slots):
        raise ValueError(f"HOM slots must be two distinct slots in 1..{cfg.n_slots}")
    return a, b


def run_hom_experiment(cfg: ExperimentConfig, delays=None, n_periods: int | None = None,
                       workers: int | None = None) -> list[HomPoint]:
    """Four-fold counts versus idler delay, plus the summed blocked-arm background."""
    cfg.validate()
    slots = hom_slots(cfg)
    channel = cfg.hom_channel or cfg.channel
    delays = cfg.hom_delays_ps if delays is None else delays
    if len(delays) == 0:
        raise ValueError("no HOM delays configured")
    if not all(math.isfinite(d) for d in delays):
        raise ValueError("HOM delays must be finite")
    n_periods = cfg.n_periods(slots[0]) if n_periods is None else n_periods
    mode = TemporalMode(0.0, cfg.coherence_sigma_ps)
    eps = hom_epsilon(cfg.mu, cfg.pair_statistics)

    def one(point, delay):
        M = temporal_overlap(delay, mode)
        ff, cand = _hom_block(cfg, M, eps, n_periods, point, rngmod.COUPLER, None, slots, channel)
        da, _ = _hom_block(cfg, M, eps, n_periods, point, rngmod.BLOCK_A, "a", slots, channel)
        db, _ = _hom_block(cfg, M, eps, n_periods, point, rngmod.BLOCK_B, "b", slots, channel)
        return HomPoint(float(delay), ff, da + db, n_periods, cand)

    return _map(one, list(enumerate(delays)), workers)


# --------------------------------------------------------------------------
# slot isolation across the switch network

def run_slot_isolation(cfg: ExperimentConfig, n_periods: int, channel: int | None = None,
                       workers: int | None = None) -> dict[str, float]:
    """Route every slot's photons through the switches and audit cross-slot mixing.

    Uses the analyzer-free path; origin slots are diagnostic labels only.
    """
    cfg = cfg.replace(analyzers=False).validate()
    channel = cfg.channel if channel is None else channel
    schedule = SwitchSchedule.from_config(cfg)
    period, delta = cfg.period_ps, cfg.imbalance_ps

    def batch(b, start, count):
        per_port = []
        routed = wrong = 0
        for slot in range(1, cfg.n_slots + 1):
            g = rngmod.stream(cfg.rng_seed, rngmod.PAIRS, slot, channel, 0, b)
            active = _sparse_indices(count, first_pair_probability(cfg.mu, cfg.pair_statistics), g) + start
            n = sample_pair_numbers(cfg.mu, cfg.pair_statistics, len(active), g, at_least_one=True)
            pulse = np.repeat(active, n) * period + (slot - 1) * cfg.slot_spacing_ps
            bins = g.integers(0, 2, len(pulse))
            gr = rngmod.stream(cfg.rng_seed, rngmod.ROUTE, slot, channel, 0, b)
            ps = _route(pulse + bins * delta, schedule, gr)
            pi = _route(pulse + bins * delta, schedule, gr)
            gl = rngmod.stream(cfg.rng_seed, rngmod.DETECT, slot, channel, 0, b)
            eta = photon_transmittance(cfg, slot, analyzers=False)
            ks, ki = apply_loss(len(pulse), eta, gl), apply_loss(len(pulse), eta, gl)
            routed += int(np.sum(ps > 0) + np.sum(pi > 0))
            wrong += int(np.sum((ps != slot) & (ps > 0)) + np.sum((pi != slot) & (pi > 0)))
            ts = detect(pulse + bins * delta, cfg.detector_jitter_sigma_ps, gl)
            ti = detect(pulse + bins * delta, cfg.detector_jitter_sigma_ps, gl)
            per_port.append((slot, ps[ks], ts[ks], pi[ki], ti[ki]))
        return per_port, routed, wrong

    outs = _map(batch, list(_batches(n_periods, cfg.batch_periods)), workers)
    routed = sum(o[1] for o in outs)
    wrong = sum(o[2] for o in outs)
    same = cross = 0
    for port in range(1, cfg.n_slots + 1):
        sig, idl = {}, {}
        for per_port, _, _ in outs:
            for slot, ps, ts, pi, ti in per_port:
                sig.setdefault(slot, []).append(ts[ps == port])
                idl.setdefault(slot, []).append(ti[pi == port])
        sig = {k: np.sort(np.concatenate(v)) for k, v in sig.items()}
        idl = {k: np.sort(np.concatenate(v)) for k, v in idl.items()}
        for a in sig:
            for b in idl:
                c = _matches(sig[a], idl[b], cfg.coincidence_window_ps / 2.0, 0)
                if a == b:
                    same += c
                else:
                    cross += c
    return {"routed_photons": routed, "wrong_port_photons": wrong,
            "leak_fraction": wrong / routed if routed else 0.0,
            "same_slot_coincidences": same, "cross_slot_coincidences": cross}
