"""Edge-anchored keypoints and local gradient-histogram descriptors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidParam
from .imagecore import check_image

DESCRIPTOR_DIM = 128  # 4x4 cells x 8 orientation bins
_N_CELLS = 4
_N_BINS = 8


@dataclass(frozen=True)
class Keypoint:
    x: int
    y: int
    id: int


def canny(gray, low: float, high: float, gauss_sigma: float = 1.4) -> np.ndarray:
    """Canny edge detection: Gaussian smooth, Sobel, NMS, hysteresis.

    Thresholds are on a 0-255 Sobel-magnitude scale: magnitudes are
    rescaled so the strongest gradient in the image measures 255, which
    makes the edge map invariant to global brightness and contrast
    changes.  Returns a boolean edge map.
    """
    gray = check_image(gray)
    if gray.ndim != 2:
        raise InvalidParam("canny expects a 1-channel image")
    if low < 0 or low > high:
        raise InvalidParam(f"need 0 <= low <= high, got low={low} high={high}")
    if gauss_sigma <= 0:
        raise InvalidParam("gauss_sigma must be positive")

    smoothed = ndimage.gaussian_filter(gray.astype(np.float64), gauss_sigma, mode="nearest")
    gx = ndimage.sobel(smoothed, axis=1, mode="nearest")
    gy = ndimage.sobel(smoothed, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak > 0:
        mag = mag * (255.0 / peak)

    # Non-maximum suppression along the quantized gradient direction.
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    sector = ((angle + np.pi / 8) // (np.pi / 4)).astype(np.int8) % 4
    padded = np.pad(mag, 1, mode="constant")
    offsets = {0: (0, 1), 1: (-1, 1), 2: (-1, 0), 3: (-1, -1)}  # E, NE, N, NW
    nms = np.zeros_like(mag, dtype=bool)
    h, w = mag.shape
    for s, (dy, dx) in offsets.items():
        n1 = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        n2 = padded[1 - dy : 1 - dy + h, 1 - dx : 1 - dx + w]
        sel = sector == s
        # Strict on one side so a plateau ridge stays one pixel wide.
        nms[sel] = (mag[sel] > n1[sel]) & (mag[sel] >= n2[sel])
    nms &= mag > 0

    weak = nms & (mag >= low)
    strong = nms & (mag >= high)
    if not strong.any():
        return np.zeros_like(weak)
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    keep = np.unique(labels[strong])
    return weak & np.isin(labels, keep)


def sample_keypoints(edges, stride: int, max_n: int) -> list[Keypoint]:
    """Greedy row-major subsampling of edge pixels.

    An edge pixel is kept if no previously kept keypoint lies within
    Chebyshev distance < stride; the list is truncated to max_n in scan
    order and ids are assigned 0..n-1.
    """
    edges = np.asarray(edges, dtype=bool)
    if stride < 1:
        raise InvalidParam("stride must be >= 1")
    ys, xs = np.nonzero(edges)
    kept_x: list[int] = []
    kept_y: list[int] = []
    # Cell grid of size `stride`: any conflicting point is in the same or
    # an adjacent cell, so only 9 cells need checking per candidate.
    cells: dict[tuple[int, int], list[int]] = {}
    for y, x in zip(ys.tolist(), xs.tolist()):
        cy, cx = y // stride, x // stride
        ok = True
        for ny in (cy - 1, cy, cy + 1):
            for nx in (cx - 1, cx, cx + 1):
                for i in cells.get((ny, nx), ()):
                    if max(abs(kept_x[i] - x), abs(kept_y[i] - y)) < stride:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            i = len(kept_x)
            kept_x.append(x)
            kept_y.append(y)
            cells.setdefault((cy, cx), []).append(i)
            if i + 1 >= max_n:
                break
    return [Keypoint(x=x, y=y, id=i) for i, (x, y) in enumerate(zip(kept_x, kept_y))]


def _mirror_window(gray: np.ndarray, kp_x: int, kp_y: int, patch: int) -> np.ndarray:
    # Window of size patch+2 so gradients inside the patch use real samples.
    half = patch // 2
    h, w = gray.shape
    ys = np.arange(kp_y - half - 1, kp_y + half + 1)
    xs = np.arange(kp_x - half - 1, kp_x + half + 1)
    ys = np.abs(ys)
    ys = np.where(ys >= h, 2 * h - 2 - ys, ys)
    xs = np.abs(xs)
    xs = np.where(xs >= w, 2 * w - 2 - xs, xs)
    return gray[np.ix_(ys, xs)]


def describe(gray, kp: Keypoint, patch: int = 16) -> np.ndarray:
    """HOG-style patch descriptor at a keypoint.

    patch x patch window (mirror-padded at borders), 4x4 cells, 8 unsigned
    orientation bins, gradient-magnitude weighted, L2-normalized.  A patch
    with zero gradient energy yields the zero vector (degenerate).
    """
    gray = check_image(gray)
    if gray.ndim != 2:
        raise InvalidParam("describe expects a 1-channel image")
    if patch % 2 != 0 or patch < 8:
        raise InvalidParam("patch must be even and >= 8")
    win = _mirror_window(gray, kp.x, kp.y, patch).astype(np.float64)
    gx = (win[1:-1, 2:] - win[1:-1, :-2]) * 0.5
    gy = (win[2:, 1:-1] - win[:-2, 1:-1]) * 0.5
    return _hog_from_gradients(gx, gy, patch)


def _hog_from_gradients(gx: np.ndarray, gy: np.ndarray, patch: int) -> np.ndarray:
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), np.pi)
    bins = np.minimum((ang / (np.pi / _N_BINS)).astype(np.int64), _N_BINS - 1)
    cell = patch // _N_CELLS
    cy = (np.arange(patch) // cell)[:, None]
    cx = (np.arange(patch) // cell)[None, :]
    flat_idx = ((cy * _N_CELLS + cx) * _N_BINS + bins).ravel()
    hist = np.bincount(flat_idx, weights=mag.ravel(), minlength=DESCRIPTOR_DIM)
    norm = np.linalg.norm(hist)
    if norm < 1e-12:
        return np.zeros(DESCRIPTOR_DIM)
    return hist / norm


def describe_all(gray, keypoints: list[Keypoint], patch: int = 16) -> np.ndarray:
    """Descriptors for all keypoints, stacked as an (n, 128) array."""
    out = np.zeros((len(keypoints), DESCRIPTOR_DIM))
    for i, kp in enumerate(keypoints):
        out[i] = describe(gray, kp, patch)
    return out


def is_degenerate(descriptors: np.ndarray) -> np.ndarray:
    """Boolean mask of zero-energy (degenerate) descriptor rows."""
    return np.linalg.norm(descriptors, axis=1) < 0.5
