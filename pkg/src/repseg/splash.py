"""Splash construction: radius-filtered descriptor nearest neighbors.

A splash packages one keypoint (the center) with displacement vectors to
its k nearest descriptors, after discarding candidates closer than r in
the image plane and candidates farther than d_max in descriptor space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, InvalidParam
from .features import Keypoint, is_degenerate


@dataclass(frozen=True)
class SplashParams:
    k: int = 8
    r: float = 16.0
    d_max: float = 0.45

    def validate(self) -> None:
        if self.k < 1:
            raise InvalidParam("k must be >= 1")
        if self.r < 0:
            raise InvalidParam("r must be >= 0")
        if self.d_max <= 0:
            raise InvalidParam("d_max must be > 0")


@dataclass(frozen=True)
class Splash:
    center: int  # keypoint id
    neighbors: np.ndarray = field(repr=False)  # (m,) keypoint ids
    vectors: np.ndarray = field(repr=False)    # (m, 2) displacements (dx, dy)
    distances: np.ndarray = field(repr=False)  # (m,) descriptor L2 distances

    def __len__(self) -> int:
        return len(self.neighbors)


class NeighborIndex:
    """Exact L2 index over the non-degenerate descriptors."""

    def __init__(self, descriptors: np.ndarray, keypoints: list[Keypoint]):
        descriptors = np.asarray(descriptors, dtype=np.float64)
        keep = ~is_degenerate(descriptors)
        if not keep.any():
            raise EmptyInput("no non-degenerate descriptors")
        self.ids = np.array([kp.id for kp in keypoints])[keep]
        self.desc = descriptors[keep]
        self.xy = np.array([[kp.x, kp.y] for kp in keypoints], dtype=np.float64)[keep]
        self._row_of = {int(kid): row for row, kid in enumerate(self.ids)}

    def row(self, keypoint_id: int) -> int:
        if keypoint_id not in self._row_of:
            raise InvalidParam(f"keypoint {keypoint_id} is not in the index")
        return self._row_of[keypoint_id]


def build_index(descriptors: np.ndarray, keypoints: list[Keypoint]) -> NeighborIndex:
    """Build an exact k-NN index; degenerate descriptors are excluded."""
    return NeighborIndex(descriptors, keypoints)


def _select_neighbors(index: NeighborIndex, row: int, desc_dist: np.ndarray,
                      params: SplashParams) -> tuple[np.ndarray, np.ndarray]:
    """Apply the three filtering rules to one row of descriptor distances.

    Returns (rows, distances) of the surviving neighbors, at most k, ties
    in descriptor distance broken by lower keypoint id.
    """
    plane = np.linalg.norm(index.xy - index.xy[row], axis=1)
    ok = (plane >= params.r) & (desc_dist <= params.d_max)
    ok[row] = False
    cand = np.nonzero(ok)[0]
    if cand.size == 0:
        return cand, desc_dist[cand]
    order = np.lexsort((index.ids[cand], desc_dist[cand]))[: params.k]
    chosen = cand[order]
    return chosen, desc_dist[chosen]


def query_similar(index: NeighborIndex, center: int,
                  params: SplashParams) -> list[tuple[int, float]]:
    """k nearest neighbors of a keypoint by descriptor distance.

    Excludes the center itself, treats candidates closer than r in the
    image plane as infinitely far, and drops candidates beyond d_max.
    Returns (keypoint id, descriptor distance) pairs.
    """
    params.validate()
    row = index.row(center)
    dist = np.linalg.norm(index.desc - index.desc[row], axis=1)
    rows, dists = _select_neighbors(index, row, dist, params)
    return [(int(index.ids[r]), float(d)) for r, d in zip(rows, dists)]


def make_splashes(keypoints: list[Keypoint], descriptors: np.ndarray,
                  params: SplashParams) -> list[Splash]:
    """One splash per non-degenerate keypoint with >= 1 surviving neighbor.

    Displacements are neighbor minus center.
    """
    params.validate()
    index = build_index(descriptors, keypoints)
    n = len(index.ids)
    desc = index.desc.astype(np.float32)
    sq = np.einsum("ij,ij->i", desc, desc)
    splashes: list[Splash] = []
    block = 512
    for start in range(0, n, block):
        stop = min(start + block, n)
        # Squared L2 via GEMM, clipped against negative round-off.
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (desc[start:stop] @ desc.T)
        np.maximum(d2, 0.0, out=d2)
        dist = np.sqrt(d2, dtype=np.float64)
        for i in range(start, stop):
            rows, dists = _select_neighbors(index, i, dist[i - start], params)
            if rows.size == 0:
                continue
            splashes.append(Splash(
                center=int(index.ids[i]),
                neighbors=index.ids[rows].copy(),
                vectors=index.xy[rows] - index.xy[i],
                distances=dists.astype(np.float64),
            ))
    return splashes
