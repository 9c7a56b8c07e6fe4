"""CSV readers/writers and a small dependency-free SVG plotter.

CSVs use LF line endings and ``repr`` floats so values round-trip exactly.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FRINGE_HEADER = ("phase_rad", "coincidences", "accidentals", "duration_s")
HOM_HEADER = ("delay_ps", "fourfold", "dark_fourfold")
SINGLES_HEADER = ("detector", "counts")
RESULTS_HEADER = ("metric", "value", "uncertainty")
CAR_SCAN_HEADER = ("sweep_value", "car", "car_oracle")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path, header: Sequence[str] | None = None) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if header is not None and tuple(reader.fieldnames or ()) != tuple(header):
            raise ValueError(f"{path}: expected header {','.join(header)}")
        return list(reader)


def write_fringe_csv(path, phases, coincidences, accidentals, duration_s: float) -> Path:
    rows = [(float(p), int(c), int(a), float(duration_s))
            for p, c, a in zip(phases, coincidences, accidentals)]
    return write_csv(path, FRINGE_HEADER, rows)


def read_fringe_csv(path) -> dict[str, np.ndarray]:
    rows = read_csv(path, FRINGE_HEADER)
    return {
        "phase_rad": np.array([float(r["phase_rad"]) for r in rows]),
        "coincidences": np.array([int(r["coincidences"]) for r in rows]),
        "accidentals": np.array([int(r["accidentals"]) for r in rows]),
        "duration_s": np.array([float(r["duration_s"]) for r in rows]),
    }


def write_hom_csv(path, points) -> Path:
    return write_csv(path, HOM_HEADER, [(float(p.delay_ps), p.fourfold, p.dark_fourfold) for p in points])


def read_hom_csv(path) -> dict[str, np.ndarray]:
    rows = read_csv(path, HOM_HEADER)
    return {
        "delay_ps": np.array([float(r["delay_ps"]) for r in rows]),
        "fourfold": np.array([int(r["fourfold"]) for r in rows]),
        "dark_fourfold": np.array([int(r["dark_fourfold"]) for r in rows]),
    }


def write_singles_csv(path, singles: dict[str, int]) -> Path:
    return write_csv(path, SINGLES_HEADER, sorted(singles.items()))


def write_results_csv(path, metrics: Iterable[tuple[str, object, object]]) -> Path:
    return write_csv(path, RESULTS_HEADER, metrics)


def read_results_csv(path) -> dict[str, str]:
    return {r["metric"]: r["value"] for r in read_csv(path, RESULTS_HEADER)}


# --------------------------------------------------------------------------
# SVG

def _scale(values, lo, hi, out_lo, out_hi):
    span = (hi - lo) or 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in values]


def svg_plot(path, x, y, curve=None, xlabel: str = "", ylabel: str = "", title: str = "",
             width: int = 480, height: int = 320) -> Path:
    """Scatter of (x, y) with an optional fitted curve ``(cx, cy)``."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    cx, cy = ([float(v) for v in curve[0]], [float(v) for v in curve[1]]) if curve else ([], [])
    xs, ys = x + cx, y + cy
    finite = [v for v in ys if math.isfinite(v)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(finite), 0.0), max(finite) * 1.05 or 1.0
    m = 50
    px = _scale(x, x0, x1, m, width - 20)
    py = _scale(y, y0, y1, height - m, 20)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{m}" y1="{height - m}" x2="{width - 20}" y2="{height - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{height - m}" x2="{m}" y2="20" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.0f})">{ylabel}</text>',
        f'<text x="{width / 2:.0f}" y="14" text-anchor="middle" font-size="13">{title}</text>',
        f'<text x="{m}" y="{height - m + 14}" font-size="10" text-anchor="middle">{x0:.4g}</text>',
        f'<text x="{width - 20}" y="{height - m + 14}" font-size="10" text-anchor="middle">{x1:.4g}</text>',
        f'<text x="{m - 4}" y="{height - m}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{m - 4}" y="24" font-size="10" text-anchor="end">{y1:.4g}</text>',
    ]
    if cx:
        qx = _scale(cx, x0, x1, m, width - 20)
        qy = _scale(cy, y0, y1, height - m, 20)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(qx, qy))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    for a, b in zip(px, py):
        parts.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="firebrick"/>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
