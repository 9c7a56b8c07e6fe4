"""ITU C-band channel grid and signal/idler pairing around the pump channel.

Wavelengths are table data, never computed from the ITU frequency formula,
so printed values round-trip exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

DEFAULT_PUMP_INDEX = 34
MAX_PAIRS = 14


class UnknownChannelError(KeyError):
    """Channel index absent from the loaded grid table."""


class PairingError(ValueError):
    """Requested pair index cannot be formed on the grid."""


@dataclass(frozen=True, order=True)
class ItuChannel:
    index: int
    wavelength_text: str

    @property
    def wavelength_nm(self) -> float:
        return float(self.wavelength_text)

    @property
    def label(self) -> str:
        return f"C{self.index}"


@dataclass(frozen=True)
class ChannelPair:
    pair_index: int
    signal: ItuChannel
    idler: ItuChannel

    @property
    def signal_wavelength_nm(self) -> float:
        return self.signal.wavelength_nm

    @property
    def idler_wavelength_nm(self) -> float:
        return self.idler.wavelength_nm

    @property
    def label(self) -> str:
        return f"S{self.pair_index}-I{self.pair_index}"


class ItuGrid:
    """Immutable mapping of channel index to wavelength."""

    def __init__(self, rows: dict[int, str]):
        if not rows:
            raise ValueError("empty grid table")
        self._rows = dict(sorted(rows.items()))
        lo, hi = min(self._rows), max(self._rows)
        self.bounds = (lo, hi)
        idx = list(self._rows)
        wl = [float(self._rows[i]) for i in idx]
        if any(b >= a for a, b in zip(wl, wl[1:])):
            raise ValueError("grid wavelengths must strictly decrease with index")

    @classmethod
    def from_text(cls, text: str) -> "ItuGrid":
        rows: dict[int, str] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"grid line {lineno}: expected 'index wavelength_nm'")
            index = int(parts[0])
            float(parts[1])
            if index in rows:
                raise ValueError(f"grid line {lineno}: duplicate channel {index}")
            rows[index] = parts[1]
        return cls(rows)

    @classmethod
    def from_file(cls, path: str | Path) -> "ItuGrid":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def __contains__(self, index: int) -> bool:
        return index in self._rows

    def __iter__(self):
        return (ItuChannel(i, w) for i, w in self._rows.items())

    def __len__(self) -> int:
        return len(self._rows)

    def channel(self, index: int) -> ItuChannel:
        if index not in self._rows:
            lo, hi = self.bounds
            raise UnknownChannelError(f"channel C{index} not in grid table (C{lo}..C{hi})")
        return ItuChannel(index, self._rows[index])

    def pair_offsets(self, pump: ItuChannel) -> list[int]:
        """Offsets d with both pump-d and pump+d present, nearest first."""
        self.channel(pump.index)
        lo, hi = self.bounds
        span = max(pump.index - lo, hi - pump.index)
        return [d for d in range(1, span + 1)
                if pump.index - d in self._rows and pump.index + d in self._rows]


@lru_cache(maxsize=None)
def default_grid() -> ItuGrid:
    text = resources.files("entmux").joinpath("data/itu_100ghz.txt").read_text(encoding="utf-8")
    return ItuGrid.from_text(text)


def itu_channel_wavelength(ch: ItuChannel | int, grid: ItuGrid | None = None) -> float:
    grid = grid or default_grid()
    index = ch.index if isinstance(ch, ItuChannel) else int(ch)
    return grid.channel(index).wavelength_nm


def pair_for_index(pair_index: int, pump: ItuChannel | int = DEFAULT_PUMP_INDEX,
                   grid: ItuGrid | None = None) -> ChannelPair:
    """Return the ``pair_index``-th symmetric signal/idler pair around ``pump``.

    Pairs are counted outward from the pump over offsets at which both
    channels exist in the grid table, so guard channels missing from the
    table are skipped rather than assumed.
    """
    grid = grid or default_grid()
    pump_ch = grid.channel(pump.index if isinstance(pump, ItuChannel) else int(pump))
    if not 1 <= pair_index <= MAX_PAIRS:
        raise PairingError(f"pair index {pair_index} outside 1..{MAX_PAIRS}")
    offsets = grid.pair_offsets(pump_ch)
    if pair_index > len(offsets):
        raise PairingError(
            f"pair {pair_index} around C{pump_ch.index} leaves the grid table "
            f"(only {len(offsets)} symmetric pairs available)")
    d = offsets[pair_index - 1]
    pair = ChannelPair(pair_index, grid.channel(pump_ch.index - d), grid.channel(pump_ch.index + d))
    assert energy_conservation_check(pair, pump_ch)
    return pair


def energy_conservation_check(pair: ChannelPair, pump: ItuChannel | int) -> bool:
    p = pump.index if isinstance(pump, ItuChannel) else int(pump)
    return pair.signal.index + pair.idler.index == 2 * p


def all_pairs(pump: ItuChannel | int = DEFAULT_PUMP_INDEX, grid: ItuGrid | None = None) -> list[ChannelPair]:
    return [pair_for_index(k, pump, grid) for k in range(1, MAX_PAIRS + 1)]


def table_rows(pump: int = DEFAULT_PUMP_INDEX, grid: ItuGrid | None = None) -> list[str]:
    """Channel-plan rows, widest pair first, then the pump line."""
    grid = grid or default_grid()
    rows = []
    for pair in reversed(all_pairs(pump, grid)):
        rows.append(f"{pair.label}\t{pair.signal.label}-{pair.idler.label}\t"
                    f"{pair.signal.wavelength_text}-{pair.idler.wavelength_text}")
    p = grid.channel(pump)
    rows.append(f"Pump\t{p.label}\t{p.wavelength_text}")
    return rows
