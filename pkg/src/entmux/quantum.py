"""Amplitude-level model of pulsed time-bin pairs.

Bins are indexed 0 (short arm, early) and 1 (long arm, late).  Each analyzer
interferometer is a unitary map from the two emission bins onto two output
ports (0 = monitored, 1 = complementary) times three arrival slots
(0 early, 1 central, 2 late).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
MONITORED = 0
EARLY, CENTRAL, LATE = 0, 1, 2
SLOT_NAMES = ("early", "central", "late")

# transform-limited Gaussian: time-bandwidth product of the intensity FWHMs
_GAUSS_TBP = 2.0 * math.log(2.0) / math.pi
_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class PumpBinState:
    amp_short: complex
    amp_long: complex
    phase_p: float = 0.0

    def __post_init__(self):
        norm = abs(self.amp_short) ** 2 + abs(self.amp_long) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"pump state not normalized (|a|^2 sum = {norm!r})")


@dataclass(frozen=True)
class TimeBinAmplitudes:
    amp_ss: complex
    amp_ll: complex
    amp_sl: complex = 0j
    amp_ls: complex = 0j

    def __post_init__(self):
        norm = float(np.sum(np.abs(self.matrix) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"biphoton state not normalized (sum = {norm!r})")

    @property
    def matrix(self) -> np.ndarray:
        """Joint amplitude indexed [signal bin, idler bin]."""
        return np.array([[self.amp_ss, self.amp_sl], [self.amp_ls, self.amp_ll]], dtype=complex)


@dataclass(frozen=True)
class ArrivalDistribution:
    """Joint outcome probabilities indexed [port_s, slot_s, port_i, slot_i]."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (2, 3, 2, 3):
            raise ValueError(f"expected shape (2, 3, 2, 3), got {p.shape}")
        if np.any(p < -NORM_TOL) or abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError("arrival distribution must be non-negative and sum to 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def monitored(self) -> np.ndarray:
        """3x3 (signal slot, idler slot) grid seen by detectors on the monitored ports."""
        return self.probs[MONITORED, :, MONITORED, :]

    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)


@dataclass(frozen=True)
class TemporalMode:
    center_time: float
    coherence_sigma: float

    def __post_init__(self):
        if not self.coherence_sigma > 0:
            raise ValueError("coherence_sigma must be positive")


def mode_from_bandwidth(fwhm_ghz: float = 100.0, center_time: float = 0.0) -> TemporalMode:
    """Gaussian temporal mode (intensity RMS width in ps) of a filtered photon."""
    fwhm_ps = _GAUSS_TBP / (fwhm_ghz * 1e9) * 1e12
    return TemporalMode(center_time, fwhm_ps * _FWHM_TO_SIGMA)


def _check_phase(*phases: float) -> None:
    for p in phases:
        if not math.isfinite(p):
            raise ValueError(f"phase must be finite, got {p!r}")


def pump_after_umi(phi_p: float) -> PumpBinState:
    _check_phase(phi_p)
    r = 1.0 / math.sqrt(2.0)
    return PumpBinState(complex(r), -r * complex(math.cos(phi_p), math.sin(phi_p)), phi_p)


def pair_state_from_pump(pump: PumpBinState) -> TimeBinAmplitudes:
    """Two pump photons from the same bin make one pair, doubling the bin phase.

    The |LL> term carries the relative minus sign of the canonical pair state,
    so a canonical pump with phase phi gives (|SS> - exp(2i phi)|LL>)/sqrt(2).
    """
    norm = abs(pump.amp_short) ** 2 + abs(pump.amp_long) ** 2
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError("pump state not normalized")
    ss = pump.amp_short ** 2
    ll = -(pump.amp_long ** 2)
    scale = math.sqrt(abs(ss) ** 2 + abs(ll) ** 2)
    return TimeBinAmplitudes(ss / scale, ll / scale)


def analyzer_matrix(phi: float) -> np.ndarray:
    """Unitary bin -> (port, slot) map of one analyzer, shape (2, 3, 2)."""
    u = np.zeros((2, 3, 2), dtype=complex)
    e = complex(math.cos(phi), math.sin(phi))
    for b in (0, 1):
        u[0, b, b] = 0.5
        u[1, b, b] = 0.5
        u[0, b + 1, b] = 0.5 * e
        u[1, b + 1, b] = -0.5 * e
    return u


def analyzer_transform(state: TimeBinAmplitudes, phi_s: float, phi_i: float,
                       v_cap: float = 1.0) -> ArrivalDistribution:
    """Propagate both photons through their analyzers.

    ``v_cap`` mixes the coherent result with the path-incoherent one, scaling
    every interference term by the same factor.
    """
    _check_phase(phi_s, phi_i)
    if not 0.0 <= v_cap <= 1.0:
        raise ValueError(f"v_cap must lie in [0, 1], got {v_cap!r}")
    a = state.matrix
    us, ui = analyzer_matrix(phi_s), analyzer_matrix(phi_i)
    coherent = np.abs(np.einsum("psb,qtc,bc->psqt", us, ui, a)) ** 2
    incoherent = np.einsum("psb,qtc,bc->psqt", np.abs(us) ** 2, np.abs(ui) ** 2, np.abs(a) ** 2)
    probs = v_cap * coherent + (1.0 - v_cap) * incoherent
    return ArrivalDistribution(probs / probs.sum())


def arrival_for_phases(phi_p: float, phi_s: float, phi_i: float, v_cap: float = 1.0) -> ArrivalDistribution:
    return analyzer_transform(pair_state_from_pump(pump_after_umi(phi_p)), phi_s, phi_i, v_cap)


def coincidence_probability(dist: ArrivalDistribution, slot_s: int, slot_i: int,
                            port_s: int = MONITORED, port_i: int = MONITORED) -> float:
    return float(dist.probs[port_s, slot_s, port_i, slot_i])


def temporal_overlap(delay: float, mode: TemporalMode) -> float:
    """Squared overlap of two copies of ``mode`` offset by ``delay`` (ps)."""
    return math.exp(-delay * delay / (4.0 * mode.coherence_sigma ** 2))


def hom_coincidence_probability(M: float, epsilon_multi: float) -> float:
    """Probability that two photons meeting at a 50:50 coupler leave by different ports."""
    if not 0.0 <= M <= 1.0:
        raise ValueError(f"mode overlap must lie in [0, 1], got {M!r}")
    if not 0.0 <= epsilon_multi < 1.0:
        raise ValueError(f"epsilon_multi must lie in [0, 1), got {epsilon_multi!r}")
    return (1.0 - epsilon_multi) * (1.0 - M) / 2.0 + epsilon_multi / 2.0
