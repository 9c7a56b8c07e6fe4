"""Closed-form and enumerative predictions for every Monte Carlo observable.

Nothing here draws random numbers.  The path enumeration deliberately avoids
the array algebra used by the quantum model so that agreement between the
two is a real check.
"""
from __future__ import annotations

import cmath
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .analysis import UndefinedCARError
from .config import ExperimentConfig, photon_transmittance, switch_leak_probability

# per-photon analyzer paths: (output port, arm delay in bins, amplitude sign)
_ANALYZER_PATHS = ((0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, -1))


def analytic_fringe(phi_p: float, phi_s: float, phi_i: float, v: float) -> float:
    """Central-central probability on the monitored analyzer ports."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"v must lie in [0, 1], got {v!r}")
    return (1.0 - v * math.cos(2.0 * phi_p - phi_s - phi_i)) / 16.0


def brute_force_state_propagation(phi_p: float, phi_s: float, phi_i: float) -> np.ndarray:
    """Outcome table [port_s, slot_s, port_i, slot_i] by explicit path sums.

    Loops over both pump bins and the four (port, arm) choices of each
    analyzer, accumulating amplitudes per outcome in a dict.
    """
    for p in (phi_p, phi_s, phi_i):
        if not math.isfinite(p):
            raise ValueError("phases must be finite")
    amps: dict[tuple[int, int, int, int], complex] = {}
    for pump_bin in (0, 1):
        # both photons come from the same pump bin; long bin carries -exp(2i phi_p)/sqrt2
        a_pair = 1 / math.sqrt(2) if pump_bin == 0 else -cmath.exp(2j * phi_p) / math.sqrt(2)
        for port_s, arm_s, sign_s in _ANALYZER_PATHS:
            a_s = 0.5 * sign_s * (cmath.exp(1j * phi_s) if arm_s else 1.0)
            for port_i, arm_i, sign_i in _ANALYZER_PATHS:
                a_i = 0.5 * sign_i * (cmath.exp(1j * phi_i) if arm_i else 1.0)
                key = (port_s, pump_bin + arm_s, port_i, pump_bin + arm_i)
                amps[key] = amps.get(key, 0j) + a_pair * a_s * a_i
    table = np.zeros((2, 3, 2, 3))
    for key, a in amps.items():
        table[key] = abs(a) ** 2
    return table


def hom_epsilon(mu: float, statistics: str = "thermal") -> float:
    """Probability of a second pair given at least one, P(n >= 2 | n >= 1)."""
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if mu == 0 or statistics == "bernoulli":
        return 0.0
    if statistics == "thermal":
        return mu / (1.0 + mu)
    if statistics == "poisson":
        p0 = math.exp(-mu)
        return (1.0 - p0 - mu * p0) / (1.0 - p0)
    raise ValueError(f"unknown pair statistics {statistics!r}")


def pair_moments(mu: float, statistics: str) -> tuple[float, float, float]:
    """(P(n >= 1), E[n], E[n(n-1)]) per pulse."""
    if statistics == "thermal":
        return mu / (1.0 + mu), mu, 2.0 * mu * mu
    if statistics == "poisson":
        return -math.expm1(-mu), mu, mu * mu
    if statistics == "bernoulli":
        return mu, mu, 0.0
    raise ValueError(f"unknown pair statistics {statistics!r}")


@dataclass(frozen=True)
class OracleParams:
    mu: float
    pair_statistics: str = "thermal"
    eta_s: float = 1.0
    eta_i: float = 1.0
    raman_s: float = 0.0
    raman_i: float = 0.0
    dark_rate_hz: float = 0.0
    window_ps: float = 1000.0
    jitter_sigma_ps: float = 0.0
    period_ps: int = 35753
    phases: tuple[float, float, float] = (0.0, 0.0, 0.0)
    v_cap: float = 1.0
    coherence_sigma_ps: float = 1.873
    n_periods: int = 0
    herald_eta: tuple[float, float] = field(default=(1.0, 1.0))

    def __post_init__(self):
        if self.mu < 0 or self.raman_s < 0 or self.raman_i < 0 or self.dark_rate_hz < 0:
            raise ValueError("mu and noise rates must be non-negative")
        if not (0 <= self.eta_s <= 1 and 0 <= self.eta_i <= 1):
            raise ValueError("transmittances must lie in [0, 1]")
        if not 0 <= self.v_cap <= 1:
            raise ValueError("v_cap must lie in [0, 1]")
        if self.window_ps <= 0 or self.jitter_sigma_ps < 0 or self.coherence_sigma_ps <= 0:
            raise ValueError("window, jitter and coherence width out of range")

    @classmethod
    def from_config(cls, cfg: ExperimentConfig, slot: int | None = None, channel: int | None = None,
                    analyzers: bool | None = None) -> "OracleParams":
        slot = cfg.slot if slot is None else slot
        channel = cfg.channel if channel is None else channel
        analyzers = cfg.analyzers if analyzers is None else analyzers
        eta = photon_transmittance(cfg, slot, analyzers) * (1.0 - switch_leak_probability(cfg))
        raman = cfg.raman_for(channel)
        return cls(cfg.mu, cfg.pair_statistics, eta, eta, raman, raman, cfg.dark_rate_hz,
                   cfg.coincidence_window_ps, cfg.detector_jitter_sigma_ps, cfg.period_ps,
                   (cfg.phase_for(slot), cfg.signal_phase, cfg.idler_phase), cfg.v_cap,
                   cfg.coherence_sigma_ps, cfg.n_periods(slot))

    def with_phases(self, phi_p, phi_s, phi_i) -> "OracleParams":
        return dataclasses.replace(self, phases=(float(phi_p), float(phi_s), float(phi_i)))

    @property
    def dark_per_ps(self) -> float:
        return self.dark_rate_hz * 1e-12


def _gate_fraction(window: float, sigma: float, spread: float = 1.0) -> float:
    """Fraction of a Gaussian of width ``sigma * spread`` inside +-window/2."""
    if sigma == 0:
        return 1.0
    return math.erf(window / (2.0 * math.sqrt(2.0) * sigma * spread))


def expected_fringe_counts(params: OracleParams, n_periods: int | None = None) -> tuple[float, float]:
    """Expected central-central coincidences and one-period accidentals.

    Sums pair, cross-pair, Raman and dark contributions per pulse.  Jittered
    tags are accepted by the central gate with an erf factor; the joint
    window constraint on a gated pair is neglected (exact for zero jitter).
    """
    k = params.n_periods if n_periods is None else n_periods
    coinc, acc = _fringe_per_pulse(params)
    return coinc * k, acc * max(k - 1, 0)


def _fringe_per_pulse(params: OracleParams) -> tuple[float, float]:
    p1, mean, f2 = pair_moments(params.mu, params.pair_statistics)
    es, ei = params.eta_s, params.eta_i
    w, d = params.window_ps + 1.0, params.dark_per_ps  # inclusive integer window
    g = _gate_fraction(params.window_ps, params.jitter_sigma_ps)
    s_o = (mean + params.raman_s) * es / 4.0 * g
    i_o = (mean + params.raman_i) * ei / 4.0 * g
    p_coh = analytic_fringe(*params.phases, params.v_cap)
    pair = g * g * es * ei * (p1 * p_coh + (mean - p1) / 16.0 + f2 / 16.0)
    cross = s_o * i_o - g * g * mean * mean * es * ei / 16.0
    dark = s_o * d * w + d * w * i_o + 0.75 * d * d * w * w
    return pair + cross + dark, s_o * i_o + dark


def analytic_fringe_visibility(params: OracleParams) -> tuple[float, float]:
    """Raw and accidental-subtracted fringe visibilities from the expected counts."""
    _, phi_s, phi_i = params.phases
    c_min, a = _fringe_per_pulse(params.with_phases((phi_s + phi_i) / 2.0, phi_s, phi_i))
    c_max, _ = _fringe_per_pulse(params.with_phases((phi_s + phi_i + math.pi) / 2.0, phi_s, phi_i))
    raw = (c_max - c_min) / (c_max + c_min)
    net_max, net_min = max(c_max - a, 0.0), max(c_min - a, 0.0)
    net = (net_max - net_min) / (net_max + net_min) if net_max + net_min > 0 else 0.0
    return raw, net


def expected_car_counts(params: OracleParams, n_periods: int | None = None) -> tuple[float, float]:
    """Expected single-pass (analyzer-free) coincidences and accidentals.

    C = R P_pair eta_s eta_i plus noise products; A aggregates the click
    probabilities of both detectors over one window.  Photons of unrelated
    origin land in the same emission bin half the time.
    """
    k = params.n_periods if n_periods is None else n_periods
    coinc, acc = _car_per_pulse(params)
    return coinc * k, acc * max(k - 1, 0)


def _car_per_pulse(params: OracleParams) -> tuple[float, float]:
    _, mean, f2 = pair_moments(params.mu, params.pair_statistics)
    es, ei = params.eta_s, params.eta_i
    rs, ri = params.raman_s, params.raman_i
    w, d, period = params.window_ps + 1.0, params.dark_per_ps, params.period_ps
    gc = _gate_fraction(params.window_ps, params.jitter_sigma_ps, math.sqrt(2.0))
    dark = (mean + rs) * es * d * w + (mean + ri) * ei * d * w + d * d * w * period
    coinc = gc * es * ei * (mean + f2 / 2.0 + 0.5 * (mean * ri + rs * mean + rs * ri)) + dark
    acc = gc * 0.5 * (mean + rs) * (mean + ri) * es * ei + dark
    return coinc, acc


def analytic_car(params: OracleParams) -> float:
    """Expected coincidence-to-accidental ratio of a single-pass measurement."""
    c, a = _car_per_pulse(params)
    if a == 0:
        raise UndefinedCARError(math.inf if c > 0 else 0.0)
    return c / a


def _config_car(cfg: ExperimentConfig, slot: int | None, channel: int | None) -> float:
    return analytic_car(OracleParams.from_config(cfg, slot=slot, channel=channel, analyzers=False))


def calibrate_dark_rate(cfg: ExperimentConfig, target_car: float, slot: int | None = None,
                        channel: int | None = None) -> float:
    """Dark-count rate (Hz) at which the single-pass CAR of ``cfg`` equals ``target_car``."""
    f = lambda d: _config_car(cfg.replace(dark_rate_hz=d), slot, channel) - target_car
    if f(0.0) <= 0:
        raise ValueError(f"CAR {target_car} is above the noise-free value {f(0.0) + target_car:.4g}")
    hi = 1.0
    while f(hi) > 0:
        hi *= 10.0
    return float(brentq(f, 0.0, hi, xtol=1e-9, rtol=1e-12))


def calibrate_mu(cfg: ExperimentConfig, target_car: float, slot: int | None = None,
                 channel: int | None = None, bounds: tuple[float, float] = (1e-6, 100.0)) -> float:
    """Mean pair number at which the single-pass CAR of ``cfg`` equals ``target_car``."""
    f = lambda mu: _config_car(cfg.replace(mu=mu), slot, channel) - target_car
    return float(brentq(f, *bounds, xtol=1e-12, rtol=1e-12))


def expected_singles(params: OracleParams, n_periods: int | None = None) -> float:
    """Clicks expected on one single-pass detector."""
    k = params.n_periods if n_periods is None else n_periods
    return ((params.mu + params.raman_s) * params.eta_s + params.dark_per_ps * params.period_ps) * k


def poisson_coincidences(rate_a_hz: float, rate_b_hz: float, duration_s: float, window_ps: float) -> float:
    """Expected chance coincidences of two independent Poisson streams."""
    return rate_a_hz * rate_b_hz * duration_s * window_ps * 1e-12


# --------------------------------------------------------------------------
# four-fold HOM

@dataclass(frozen=True)
class HomPrediction:
    delay_ps: float
    fourfold: float
    dark_fourfold: float
    raw_visibility: float
    net_visibility: float


def _pair_pmf(mu: float, statistics: str, tol: float = 1e-15) -> np.ndarray:
    if statistics == "bernoulli":
        return np.array([1.0 - mu, mu])
    probs = []
    total = 0.0
    n = 0
    while total < 1.0 - tol and n < 2000:
        if statistics == "thermal":
            p = mu ** n / (1.0 + mu) ** (n + 1)
        else:
            p = math.exp(n * math.log(mu) - mu - math.lgamma(n + 1)) if mu > 0 else float(n == 0)
        probs.append(p)
        total += p
        n += 1
    probs.append(0.0)
    return np.array(probs)


def _fourfold_per_pulse(params: OracleParams, M: float, blocked: str | None) -> float:
    from scipy.stats import binom

    pmf = _pair_pmf(params.mu, params.pair_statistics)
    n = np.arange(len(pmf))
    ea, eb = params.herald_eta
    p_dark = -math.expm1(-params.dark_rate_hz * params.window_ps * 1e-12)
    s = (1.0 - hom_epsilon(params.mu, params.pair_statistics)) * (1.0 - M) / 2.0 \
        + hom_epsilon(params.mu, params.pair_statistics) / 2.0

    def herald(eta):
        return 1.0 - (1.0 - eta) ** n * math.exp(-params.raman_s * eta) * (1.0 - p_dark)

    def idlers(eta):
        # distribution of surviving idlers, weighted by pmf and herald probability
        w = pmf * herald(eta)
        out = np.zeros(len(pmf))
        for nn, wn in zip(n, w):
            if wn:
                out[: nn + 1] += wn * binom.pmf(np.arange(nn + 1), nn, eta)
        return out

    qa, qb = idlers(ea), idlers(eb)
    lam_a, lam_b = params.raman_i * ea, params.raman_i * eb
    if blocked == "a":
        qa = np.r_[qa.sum(), np.zeros(len(qa) - 1)]
        lam_a = 0.0
    elif blocked == "b":
        qb = np.r_[qb.sum(), np.zeros(len(qb) - 1)]
        lam_b = 0.0
    lam = lam_a + lam_b
    keep = 1.0 - p_dark
    total = 0.0
    for ka, wa in enumerate(qa):
        if wa < 1e-300:
            continue
        for kb, wb in enumerate(qb):
            if wb < 1e-300:
                continue
            if ka >= 1 and kb >= 1:
                p = s + (1.0 - s) * (1.0 - keep * math.exp(-lam / 2.0))
            else:
                k = ka + kb
                p = 1.0 - 2.0 * keep * 2.0 ** -k * math.exp(-lam / 2.0) \
                    + (keep * keep * math.exp(-lam) if k == 0 else 0.0)
            total += wa * wb * p
    return total


def analytic_hom(delay: float, params: OracleParams) -> HomPrediction:
    """Expected four-fold and blocked-arm counts at ``delay``, with dip visibilities.

    Visibilities compare zero delay with the fully distinguishable baseline.
    """
    from .quantum import TemporalMode, temporal_overlap

    mode = TemporalMode(0.0, params.coherence_sigma_ps)
    k = max(params.n_periods, 1)
    f = _fourfold_per_pulse(params, temporal_overlap(delay, mode), None) * k
    dark = (_fourfold_per_pulse(params, 0.0, "a") + _fourfold_per_pulse(params, 0.0, "b")) * k
    f0 = _fourfold_per_pulse(params, 1.0, None) * k
    finf = _fourfold_per_pulse(params, 0.0, None) * k
    raw = 1.0 - f0 / finf if finf > 0 else 0.0
    net = 1.0 - (f0 - dark) / (finf - dark) if finf > dark else 0.0
    return HomPrediction(float(delay), f, dark, raw, net)


def hom_params_from_config(cfg: ExperimentConfig) -> OracleParams:
    a, b = cfg.hom_slot_a, cfg.hom_slot_b
    if a is None or b is None:
        raise ValueError("HOM needs two slots")
    channel = cfg.hom_channel or cfg.channel
    leak = 1.0 - switch_leak_probability(cfg)
    ea = photon_transmittance(cfg, a, analyzers=False) * leak
    eb = photon_transmittance(cfg, b, analyzers=False) * leak
    raman = cfg.raman_for(channel)
    return OracleParams(cfg.mu, cfg.pair_statistics, ea, eb, raman, raman, cfg.dark_rate_hz,
                        cfg.coincidence_window_ps, cfg.detector_jitter_sigma_ps, cfg.period_ps,
                        v_cap=cfg.v_cap, coherence_sigma_ps=cfg.coherence_sigma_ps,
                        n_periods=cfg.n_periods(a), herald_eta=(ea, eb))


def oracle_table(cfg: ExperimentConfig, slot: int | None = None) -> list[tuple[str, float]]:
    """Headline predictions for one configuration."""
    slot = cfg.slot if slot is None else slot
    fr = OracleParams.from_config(cfg, slot, analyzers=True)
    car = OracleParams.from_config(cfg, slot, analyzers=False)
    raw, net = analytic_fringe_visibility(fr)
    try:
        car_v = analytic_car(car)
    except UndefinedCARError:
        car_v = math.inf
    rows = [("transmittance", photon_transmittance(cfg, slot, True)),
            ("fringe_raw_visibility", raw), ("fringe_net_visibility", net), ("car", car_v),
            ("hom_epsilon", hom_epsilon(cfg.mu, cfg.pair_statistics))]
    if cfg.hom_slot_a is not None and cfg.hom_slot_b is not None:
        h = analytic_hom(0.0, hom_params_from_config(cfg))
        rows += [("hom_raw_visibility", h.raw_visibility), ("hom_net_visibility", h.net_visibility)]
    return rows
