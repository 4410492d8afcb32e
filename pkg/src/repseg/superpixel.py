"""SLIC superpixels: the substrate that hotspot semantics propagate over."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .errors import InvalidParam
from .imagecore import check_image


@dataclass
class SuperpixelMap:
    assignment: np.ndarray = field(repr=False)  # (h, w) int32, dense ids
    count: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.assignment.shape


def _srgb_to_lab(img: np.ndarray) -> np.ndarray:
    """sRGB uint8 -> CIELAB (D65), vectorized."""
    c = img.astype(np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    m = np.array([[0.4124564, 0.3575761, 0.1804375],
                  [0.2126729, 0.7151522, 0.0721750],
                  [0.0193339, 0.1191920, 0.9503041]])
    xyz = lin @ m.T
    white = np.array([0.95047, 1.0, 1.08883])
    t = xyz / white
    f = np.where(t > (6 / 29) ** 3, np.cbrt(t), t / (3 * (6 / 29) ** 2) + 4 / 29)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116 * f[..., 1] - 16
    lab[..., 1] = 500 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200 * (f[..., 1] - f[..., 2])
    return lab


def _seed_grid(h: int, w: int, n: int) -> np.ndarray:
    """Roughly sqrt(n)-spaced seed positions, (K, 2) as (y, x)."""
    step = sqrt(h * w / n)
    ny = max(int(round(h / step)), 1)
    nx = max(int(round(w / step)), 1)
    ys = (np.arange(ny) + 0.5) * h / ny
    xs = (np.arange(nx) + 0.5) * w / nx
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([yy.ravel(), xx.ravel()], axis=1)


def _perturb_seeds(seeds: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Move each seed to the lowest-gradient position in its 3x3 block."""
    h, w = grad.shape
    out = seeds.copy()
    for i, (sy, sx) in enumerate(seeds):
        y, x = int(round(sy)), int(round(sx))
        y = min(max(y, 1), h - 2)
        x = min(max(x, 1), w - 2)
        block = grad[y - 1 : y + 2, x - 1 : x + 2]
        dy, dx = np.unravel_index(np.argmin(block), (3, 3))
        out[i] = (y + dy - 1, x + dx - 1)
    return out


def slic(img, n: int, compactness: float = 10.0, iters: int = 10) -> SuperpixelMap:
    """SLIC in CIELAB-XY space (L-XY for grayscale input).

    Distance is ||lab||_2 + (compactness / S) * ||xy||_2 with S the grid
    interval.  After the iterations, 4-connectivity is enforced by merging
    orphan fragments into the largest adjacent region, so the produced
    count may differ from the requested n.
    """
    img = check_image(img)
    h, w = img.shape[:2]
    if not 1 <= n <= h * w:
        raise InvalidParam(f"n must be in [1, {h * w}], got {n}")
    if compactness <= 0:
        raise InvalidParam("compactness must be > 0")
    if iters < 1:
        raise InvalidParam("iters must be >= 1")
    if n == 1:
        return SuperpixelMap(assignment=np.zeros((h, w), dtype=np.int32), count=1)

    if img.ndim == 3:
        feats = _srgb_to_lab(img)
    else:
        # A gray image is sRGB with equal channels; its Lab coordinates are
        # (L, 0, 0), so use L to keep one color scale for both input kinds.
        feats = _srgb_to_lab(np.repeat(img[..., None], 3, axis=2))[..., :1]

    s_interval = sqrt(h * w / n)
    gy, gx = np.gradient(feats[..., 0])
    grad = gx * gx + gy * gy
    seeds = _perturb_seeds(_seed_grid(h, w, n), grad)
    k_total = len(seeds)

    centers_xy = seeds.astype(np.float64)
    centers_f = feats[np.clip(seeds[:, 0].astype(int), 0, h - 1),
                      np.clip(seeds[:, 1].astype(int), 0, w - 1)].copy()

    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)
    labels = np.zeros((h, w), dtype=np.int32)
    ratio = compactness / s_interval
    win = int(np.ceil(2 * s_interval))

    for _ in range(iters):
        dist = np.full((h, w), np.inf)
        for k in range(k_total):
            cy, cx = centers_xy[k]
            y0, y1 = max(int(cy) - win, 0), min(int(cy) + win + 1, h)
            x0, x1 = max(int(cx) - win, 0), min(int(cx) + win + 1, w)
            if y0 >= y1 or x0 >= x1:
                continue
            df = feats[y0:y1, x0:x1] - centers_f[k]
            color = np.sqrt(np.einsum("ijc,ijc->ij", df, df))
            spat = np.sqrt((ys[y0:y1, None] - cy) ** 2 + (xs[None, x0:x1] - cx) ** 2)
            d = color + ratio * spat
            sub = dist[y0:y1, x0:x1]
            better = d < sub
            sub[better] = d[better]
            labels[y0:y1, x0:x1][better] = k

        flat = labels.ravel()
        counts = np.bincount(flat, minlength=k_total)
        nz = counts > 0
        for c in range(feats.shape[2]):
            acc = np.bincount(flat, weights=feats[..., c].ravel(), minlength=k_total)
            centers_f[nz, c] = acc[nz] / counts[nz]
        accy = np.bincount(flat, weights=np.repeat(ys, w), minlength=k_total)
        accx = np.bincount(flat, weights=np.tile(xs, h), minlength=k_total)
        centers_xy[nz, 0] = accy[nz] / counts[nz]
        centers_xy[nz, 1] = accx[nz] / counts[nz]

    assignment, count = _enforce_connectivity(labels)
    return SuperpixelMap(assignment=assignment, count=count)


def _enforce_connectivity(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Merge disconnected fragments into their largest 4-adjacent region.

    For each label, the largest 4-connected fragment is kept; every other
    fragment is absorbed by the adjacent region that is currently largest.
    Returns the relabeled map with dense ids and the region count.
    """
    h, w = labels.shape
    idx = np.arange(h * w).reshape(h, w)
    same_r = labels[:, 1:] == labels[:, :-1]
    same_d = labels[1:, :] == labels[:-1, :]
    rows = np.concatenate([idx[:, :-1][same_r], idx[:-1, :][same_d]])
    cols = np.concatenate([idx[:, 1:][same_r], idx[1:, :][same_d]])
    graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                       shape=(h * w, h * w))
    n_frag, frag = _cc(graph, directed=False)
    frag = frag.reshape(h, w)
    sizes = np.bincount(frag.ravel(), minlength=n_frag).astype(np.int64)

    # Largest fragment per label survives as that superpixel's body.
    frag_label = np.full(n_frag, -1, dtype=np.int64)
    flat_frag = frag.ravel()
    frag_label[flat_frag] = labels.ravel()
    order = np.argsort(sizes, kind="stable")
    keeper_of_label: dict[int, int] = {}
    for f in order:  # ascending size: the last writer is the largest
        keeper_of_label[int(frag_label[f])] = f
    keepers = set(keeper_of_label.values())

    # Fragment adjacency from 4-neighbor pixel pairs with differing fragments.
    diff_r = frag[:, 1:] != frag[:, :-1]
    diff_d = frag[1:, :] != frag[:-1, :]
    pa = np.concatenate([frag[:, :-1][diff_r], frag[:-1, :][diff_d]])
    pb = np.concatenate([frag[:, 1:][diff_r], frag[1:, :][diff_d]])
    adj: dict[int, set[int]] = {}
    for a, b in zip(pa.tolist(), pb.tolist()):
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)

    parent = np.arange(n_frag)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    region_size = sizes.copy()
    orphans = sorted((f for f in range(n_frag) if f not in keepers),
                     key=lambda f: (sizes[f], f))
    for f in orphans:
        targets = {find(t) for t in adj.get(f, ())} - {find(f)}
        if not targets:
            continue  # isolated fragment (single-region image edge case)
        best = max(targets, key=lambda t: (region_size[t], -t))
        rf = find(f)
        parent[rf] = best
        region_size[best] += region_size[rf]

    roots = np.array([find(f) for f in range(n_frag)])
    final = roots[flat_frag].reshape(h, w)
    _, dense = np.unique(final, return_inverse=True)
    dense = dense.reshape(h, w).astype(np.int32)
    return dense, int(dense.max()) + 1
