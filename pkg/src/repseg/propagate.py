"""Hotspot propagation: superpixel graph, components, mask rendering."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .accumulator import Hotspot
from .errors import InvalidParam
from .features import Keypoint
from .splash import Splash
from .superpixel import SuperpixelMap


@dataclass
class SuperpixelGraph:
    nodes: set[int]
    edges: dict[tuple[int, int], int] = field(default_factory=dict)  # pair -> multiplicity


class UnionFind:
    def __init__(self):
        self.parent: dict[int, int] = {}

    def add(self, x: int) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def build_graph(spx: SuperpixelMap, hotspots: list[Hotspot], splashes: list[Splash],
                keypoints: list[Keypoint], min_support: int = 1) -> SuperpixelGraph:
    """Link the superpixels joined by hotspot splash vectors.

    One edge per (center superpixel, neighbor superpixel) pair per vector;
    self-loops are skipped; edges below min_support multiplicity are
    dropped but their endpoints stay as nodes.
    """
    if min_support < 1:
        raise InvalidParam("min_support must be >= 1")
    kp_cell = {kp.id: int(spx.assignment[kp.y, kp.x]) for kp in keypoints}
    nodes: set[int] = set()
    support: Counter[tuple[int, int]] = Counter()
    for h in hotspots:
        s = splashes[h.splash]
        a = kp_cell[s.center]
        nodes.add(a)
        for nid in s.neighbors:
            b = kp_cell[int(nid)]
            nodes.add(b)
            if a != b:
                support[(min(a, b), max(a, b))] += 1
    edges = {pair: m for pair, m in support.items() if m >= min_support}
    return SuperpixelGraph(nodes=nodes, edges=edges)


def connected_components(g: SuperpixelGraph) -> dict[int, int]:
    """Component id per node via union-find.

    Components are renumbered 1..C in order of their smallest superpixel
    id, so masks are deterministic.
    """
    uf = UnionFind()
    for n in g.nodes:
        uf.add(n)
    for a, b in g.edges:
        uf.union(a, b)
    roots: dict[int, list[int]] = {}
    for n in g.nodes:
        roots.setdefault(uf.find(n), []).append(n)
    ordered = sorted(roots.values(), key=min)
    out: dict[int, int] = {}
    for cid, members in enumerate(ordered, start=1):
        for n in members:
            out[n] = cid
    return out


def render_mask(spx: SuperpixelMap, components: dict[int, int]) -> np.ndarray:
    """Paint each superpixel with its component label (0 where absent)."""
    lut = np.zeros(spx.count, dtype=np.int32)
    for node, cid in components.items():
        lut[node] = cid
    return lut[spx.assignment]
