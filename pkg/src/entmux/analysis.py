"""Figures of merit from raw counts: fringe fits, visibilities, CAR, HOM dips, loss budgets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

CHSH_THRESHOLD = 1.0 / math.sqrt(2.0)
TWO_PI = 2.0 * math.pi


class FitError(ValueError):
    pass


class UndefinedCARError(ZeroDivisionError):
    """No accidentals recorded; ``lower_bound`` is the CAR with one accidental assumed."""

    def __init__(self, coincidences: float):
        self.lower_bound = float(coincidences)
        super().__init__(f"zero accidentals: CAR >= {self.lower_bound:g}")


# --------------------------------------------------------------------------
# loss ledger

def _to_decimal(value) -> Decimal:
    return value if isinstance(value, Decimal) else Decimal(str(value))


@dataclass
class LossLedger:
    entries: list[tuple[str, Decimal]] = field(default_factory=list)

    def __post_init__(self):
        self.entries = [(str(n), _to_decimal(v)) for n, v in self.entries]
        for name, db in self.entries:
            if db < 0:
                raise ValueError(f"negative loss for {name!r}: {db} dB")

    def add(self, name: str, loss_db) -> "LossLedger":
        return LossLedger(self.entries + [(name, _to_decimal(loss_db))])

    def without(self, *names: str) -> "LossLedger":
        return LossLedger([(n, v) for n, v in self.entries if n not in names])

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def total_db(self) -> Decimal:
        return sum((v for _, v in self.entries), Decimal(0))

    @property
    def transmittance(self) -> float:
        return db_to_transmittance(self.total_db)


def db_to_transmittance(loss_db) -> float:
    return 10.0 ** (-float(loss_db) / 10.0)


def ledger_total(ledger: LossLedger) -> tuple[Decimal, float]:
    return ledger.total_db, ledger.transmittance


# --------------------------------------------------------------------------
# simple ratios

def visibility(c_max: float, c_min: float) -> float:
    if c_min < 0 or c_max < c_min:
        raise ValueError("need c_max >= c_min >= 0")
    if c_max + c_min == 0:
        raise ZeroDivisionError("visibility undefined for zero counts")
    return (c_max - c_min) / (c_max + c_min)


def subtracted_visibility(c_max: float, c_min: float, acc_max: float, acc_min: float) -> float:
    """Visibility after removing the accidental estimate from both extremes."""
    return visibility(max(c_max - acc_max, 0.0), max(c_min - acc_min, 0.0))


def chsh_violation(v: float) -> bool:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v!r}")
    return v > CHSH_THRESHOLD


def compute_car(coincidences: float, accidentals: float) -> float:
    if accidentals < 0 or coincidences < 0:
        raise ValueError("counts must be non-negative")
    if accidentals == 0:
        raise UndefinedCARError(coincidences)
    return coincidences / accidentals


def car_uncertainty(coincidences: float, accidentals: float) -> float:
    car = compute_car(coincidences, accidentals)
    rel = 1.0 / max(coincidences, 1.0) + 1.0 / accidentals
    return car * math.sqrt(rel)


@dataclass(frozen=True)
class HomVisibility:
    raw: float
    net: float | None
    raw_err: float
    net_err: float | None


def hom_visibility(dip: float, baseline: float, dark: float | None = None) -> HomVisibility:
    """Raw and dark-subtracted dip visibilities with Poisson error bars."""
    if not baseline > 0:
        raise ValueError("baseline must be positive")
    if dip < 0:
        raise ValueError("dip counts must be non-negative")
    raw = 1.0 - dip / baseline
    raw_err = math.sqrt(dip / baseline ** 2 + dip ** 2 / baseline ** 3)
    net = net_err = None
    if dark is not None:
        if not 0 <= dark < baseline:
            raise ValueError("dark counts must satisfy 0 <= dark < baseline")
        w, u = baseline - dark, dip - dark
        net = 1.0 - u / w
        net_err = math.sqrt(dip / w ** 2 + baseline * u ** 2 / w ** 4 + dark * (w - u) ** 2 / w ** 4)
        net = min(max(net, -1.0), 1.0)
    return HomVisibility(min(max(raw, -1.0), 1.0), net, raw_err, net_err)


# --------------------------------------------------------------------------
# fringe fitting

@dataclass(frozen=True)
class FringeFit:
    visibility: float
    phase_offset: float
    period: float
    baseline: float
    residual_rms: float
    visibility_err: float = float("nan")

    def predict(self, phase) -> np.ndarray:
        return fringe_model(np.asarray(phase, dtype=float), self.baseline, self.visibility,
                            self.phase_offset, self.period)


def fringe_model(x, baseline, vis, offset, period):
    return baseline * (1.0 - vis * np.cos(TWO_PI * x / period - offset))


def _linear_fit(x, y, w, period):
    t = TWO_PI * x / period
    a = np.column_stack([np.ones_like(x), np.cos(t), np.sin(t)])
    coef, *_ = np.linalg.lstsq(a * w[:, None], y * w, rcond=None)
    resid = (a @ coef - y) * w
    return coef, float(resid @ resid)


def _coef_to_params(coef):
    c, a, b = coef
    amp = math.hypot(a, b)
    baseline = c
    vis = amp / c if c != 0 else 0.0
    # -V*B*cos(t - off) = a cos t + b sin t  =>  off = atan2(-b, -a)
    offset = math.atan2(-b, -a)
    return baseline, vis, offset


def fit_fringe(phase: Sequence[float], counts: Sequence[float], fixed_period: float | None = None,
               weights: str | None = "poisson") -> FringeFit:
    """Damped least-squares fit of ``counts = B (1 - V cos(2 pi phase / P - offset))``.

    With ``weights="poisson"`` residuals are scaled by 1/sqrt(max(counts, 1)) and
    then re-weighted twice by the fitted model.
    When the period is free it is seeded by a linear scan over candidate periods.
    """
    x = np.asarray(phase, dtype=float)
    y = np.asarray(counts, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("phase and counts must be 1-d arrays of equal length")
    if len(x) < 5:
        raise FitError(f"need at least 5 points, got {len(x)}")
    span = float(x.max() - x.min())
    if weights == "poisson":
        w = 1.0 / np.sqrt(np.maximum(y, 1.0))
    elif weights is None:
        w = np.ones_like(y)
    else:
        raise ValueError(f"unknown weights {weights!r}")

    if np.ptp(y) == 0:
        if fixed_period is None:
            raise FitError("flat counts: period is indeterminate")
        return FringeFit(0.0, 0.0, float(fixed_period), float(y.mean()), 0.0, 0.0)

    if fixed_period is not None:
        if fixed_period <= 0:
            raise FitError("period must be positive")
        if span < fixed_period * (1.0 - 1e-9) * (len(x) - 1) / len(x):
            raise FitError("points do not span one period")
        period0 = float(fixed_period)
    else:
        spacing = span / (len(x) - 1)
        candidates = np.geomspace(2.2 * spacing, 1.5 * span, 800)
        sse = [_linear_fit(x, y, w, p)[1] for p in candidates]
        period0 = float(candidates[int(np.argmin(sse))])

    coef, _ = _linear_fit(x, y, w, period0)
    b0, v0, _ = _coef_to_params(coef)
    free_period = fixed_period is None

    def solve(w, starts):
        def resid(p):
            per = p[3] if free_period else period0
            return (fringe_model(x, p[0], p[1], p[2], per) - y) * w

        best = None
        for p0 in starts:
            sol = least_squares(resid, np.array(p0), method="lm",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
            if best is None or sol.cost < best.cost:
                best = sol
        return best

    starts = [[b0, v0, off] + ([period0] if free_period else []) for off in (0.0, TWO_PI / 3, 2 * TWO_PI / 3)]
    best = solve(w, starts)
    if weights == "poisson":
        # observed-count weights favour low points; re-weight by the fitted model
        for _ in range(2):
            per = best.x[3] if free_period else period0
            model = fringe_model(x, best.x[0], best.x[1], best.x[2], per)
            w = 1.0 / np.sqrt(np.maximum(model, 1.0))
            best = solve(w, [list(best.x)])
    baseline, vis, offset = best.x[:3]
    period = best.x[3] if free_period else period0
    if vis < 0:
        vis, offset = -vis, offset + math.pi
    offset = math.remainder(offset, TWO_PI) % TWO_PI

    vis_err = float("nan")
    try:
        jac = best.jac
        dof = max(len(x) - jac.shape[1], 1)
        scale = 1.0 if weights == "poisson" else 2.0 * best.cost / dof
        cov = np.linalg.pinv(jac.T @ jac) * scale
        vis_err = float(math.sqrt(max(cov[1, 1], 0.0)))
    except (np.linalg.LinAlgError, ValueError):
        pass

    model = fringe_model(x, baseline, vis, offset, period)
    rms = float(np.sqrt(np.mean((model - y) ** 2)))
    return FringeFit(float(min(max(vis, 0.0), 1.0)), float(offset), float(abs(period)),
                     float(baseline), rms, vis_err)


def fringe_visibilities(phase, coincidences, accidentals, fixed_period=None) -> tuple[FringeFit, FringeFit]:
    """Raw fit and accidental-subtracted fit of one sweep."""
    c = np.asarray(coincidences, dtype=float)
    a = np.asarray(accidentals, dtype=float)
    raw = fit_fringe(phase, c, fixed_period)
    net = fit_fringe(phase, np.maximum(c - a, 0.0), fixed_period)
    return raw, net


def results_rows(metrics: Iterable[tuple[str, object, object]]) -> list[tuple[str, str, str]]:
    out = []
    for name, value, unc in metrics:
        out.append((name, _fmt(value), _fmt(unc)))
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)
