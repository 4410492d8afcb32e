"""Displacement-vote accumulator and hotspot selection.

Every splash vector deposits a unit-mass truncated Gaussian into a
quantized displacement grid; splashes whose vectors land on strong,
population-consistent cells become hotspots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .errors import InvalidParam
from .splash import Splash


@dataclass
class AccumulatorSpace:
    bin: int
    half_extent: int
    sigma: float
    grid: np.ndarray = field(repr=False)  # (side, side), row = dy, col = dx

    @property
    def center(self) -> int:
        return ceil(self.half_extent / self.bin)

    @property
    def side(self) -> int:
        return 2 * self.center + 1

    def cell_of(self, dx: float, dy: float) -> tuple[int, int]:
        """Grid cell (row, col) of a displacement, clamped to the boundary."""
        he = self.half_extent
        dx = min(max(dx, -he), he)
        dy = min(max(dy, -he), he)
        col = self.center + int(np.floor(dx / self.bin + 0.5))
        row = self.center + int(np.floor(dy / self.bin + 0.5))
        return min(max(row, 0), self.side - 1), min(max(col, 0), self.side - 1)


@dataclass(frozen=True)
class Hotspot:
    splash: int  # index into the splash list
    score: float


def _deposit_kernel(sigma: float, bin_size: int) -> np.ndarray:
    """Unit-mass isotropic Gaussian sampled at cell centers, cut at 3 sigma."""
    radius = ceil(3.0 * sigma / bin_size)
    off = np.arange(-radius, radius + 1) * bin_size
    d2 = off[:, None] ** 2 + off[None, :] ** 2
    kern = np.exp(-d2 / (2.0 * sigma * sigma))
    kern[np.sqrt(d2) > 3.0 * sigma] = 0.0
    return kern / kern.sum()


def vote(splashes: list[Splash], sigma: float, bin_size: int,
         half_extent: int) -> AccumulatorSpace:
    """Accumulate all splash vectors into a displacement grid.

    Each vector deposits total mass 1; deposits clipped at the grid
    boundary are renormalized so no mass is lost.  Summation order is
    splash order, then vector order, so the result is bitwise
    reproducible.
    """
    if sigma <= 0:
        raise InvalidParam("sigma must be > 0")
    if bin_size < 1:
        raise InvalidParam("bin must be >= 1")
    if half_extent < 1:
        raise InvalidParam("half_extent must be >= 1")
    acc = AccumulatorSpace(bin=bin_size, half_extent=half_extent, sigma=sigma,
                           grid=None)  # type: ignore[arg-type]
    side = acc.side
    grid = np.zeros((side, side))
    acc.grid = grid
    kern = _deposit_kernel(sigma, bin_size)
    kr = kern.shape[0] // 2
    for s in splashes:
        for dx, dy in s.vectors:
            row, col = acc.cell_of(dx, dy)
            r0, r1 = max(row - kr, 0), min(row + kr + 1, side)
            c0, c1 = max(col - kr, 0), min(col + kr + 1, side)
            patch = kern[r0 - row + kr : r1 - row + kr, c0 - col + kr : c1 - col + kr]
            psum = patch.sum()
            grid[r0:r1, c0:c1] += patch / psum
    return acc


def write_accumulator_csv(acc: AccumulatorSpace, path) -> None:
    """Dump the nonzero accumulator cells as row,col,value CSV."""
    rows, cols = np.nonzero(acc.grid)
    with open(path, "w", encoding="utf-8") as f:
        f.write("row,col,value\n")
        for r, c in zip(rows.tolist(), cols.tolist()):
            f.write(f"{r},{c},{acc.grid[r, c]!r}\n")


def score_splash(acc: AccumulatorSpace, s: Splash) -> float:
    """Mean accumulator response along the splash's own vectors.

    Normalized by the maximum cell so the score is in [0, 1].
    """
    peak = acc.grid.max()
    if peak <= 0:
        raise InvalidParam("accumulator is empty; it must contain the splash's votes")
    vals = [acc.grid[acc.cell_of(dx, dy)] for dx, dy in s.vectors]
    return float(np.mean(vals) / peak)


def select_hotspots(acc: AccumulatorSpace, splashes: list[Splash],
                    tau: float) -> list[Hotspot]:
    """Splashes scoring >= tau, sorted by descending score, ties by id.

    Scores never exceed 1, so tau > 1 selects nothing.
    """
    if tau < 0.0:
        raise InvalidParam("tau must be >= 0")
    hot = [Hotspot(splash=i, score=score_splash(acc, s))
           for i, s in enumerate(splashes)]
    hot = [h for h in hot if h.score >= tau]
    hot.sort(key=lambda h: (-h.score, h.splash))
    return hot
