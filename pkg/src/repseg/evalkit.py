"""Semantic-levels evaluation kit.

Contains the `repseg-pr@0.5` matching metric, the benchmark dataset
loader, parameter sweeps, the deterministic corruption suite and a
synthetic ground-truth generator used as a desk-scale oracle.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from .errors import DimensionMismatch, FormatError, InvalidParam, IoError
from .estimator import RepetitionSegmenter
from .imagecore import check_image, check_mask, load_image, read_mask_png

log = logging.getLogger(__name__)

METRIC_NAME = "repseg-pr@0.5"
IOU_THRESHOLD = 0.5

CORRUPTION_KINDS = ("gaussian_noise", "gaussian_blur", "piecewise_affine",
                    "brightness", "linear_contrast")

# Listing-style corruption parameters (fixed, not ranges).
BLUR_SIGMA = 3.0
NOISE_SCALE = 0.1 * 255
CONTRAST_FACTOR = 1.5
BRIGHTNESS_DELTA = 100
AFFINE_SCALE = 0.03
AFFINE_GRID = 4


@dataclass(frozen=True)
class LevelSpec:
    """One operating point of the pipeline: a named semantic level."""
    name: str
    r: float = 16.0
    k: int = 8
    sigma: float = 3.0
    tau: float = 0.4
    superpixels: int = 4500
    compactness: float = 10.0

    def overrides(self) -> dict:
        return {"r": self.r, "k": self.k, "vote_sigma": self.sigma,
                "tau": self.tau, "n_superpixels": self.superpixels,
                "compactness": self.compactness}


@dataclass
class GroundTruth:
    levels: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class DatasetItem:
    stem: str
    image: np.ndarray
    gt: GroundTruth


# ---------------------------------------------------------------------------
# metric


def score(pred, gt) -> tuple[float, float]:
    """Pixel-weighted precision/recall under greedy IoU-0.5 matching.

    (pred label, gt instance) pairs are matched greedily by descending
    IoU, each side used at most once, keeping matches with IoU >= 0.5.
    Matched pixels are the intersection of each kept pair, so a pred
    label covering exactly half of its gt instance scores recall 0.5.
    """
    pred = check_mask(pred)
    gt = check_mask(gt)
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs gt {gt.shape}")
    pred_px = int((pred > 0).sum())
    gt_px = int((gt > 0).sum())
    if pred_px == 0 and gt_px == 0:
        return 1.0, 1.0
    if pred_px == 0:
        return 0.0, 0.0
    if gt_px == 0:
        return 0.0, 1.0

    p = pred.ravel()
    g = gt.ravel()
    pred_area = np.bincount(p)
    gt_area = np.bincount(g)
    both = (p > 0) & (g > 0)
    gmax = int(g.max()) + 1
    pair_codes = p[both].astype(np.int64) * gmax + g[both]
    codes, inter = np.unique(pair_codes, return_counts=True)
    pl = (codes // gmax).astype(int)
    gl = (codes % gmax).astype(int)
    union = pred_area[pl] + gt_area[gl] - inter
    iou = inter / union

    order = np.lexsort((gl, pl, -iou))
    used_p: set[int] = set()
    used_g: set[int] = set()
    matched_pred_px = 0
    matched_gt_px = 0
    for i in order:
        if iou[i] < IOU_THRESHOLD:
            break
        a, b = int(pl[i]), int(gl[i])
        if a in used_p or b in used_g:
            continue
        used_p.add(a)
        used_g.add(b)
        matched_pred_px += int(inter[i])
        matched_gt_px += int(inter[i])
    return matched_pred_px / pred_px, matched_gt_px / gt_px


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


# Foreground fragments closer than this (in pixels) are treated as one
# instance, and enclosed background holes are assigned to the instance
# that surrounds them.
MERGE_GAP = 8


def instance_components(mask) -> np.ndarray:
    """Extract per-instance regions from a category mask.

    The pipeline emits one label per repeated category, painted on the
    superpixels that carry hotspot keypoints; a physical instance can be
    covered by several fragments with sub-superpixel gaps between them
    and enclosed holes inside them.  An instance region is therefore the
    filled hull of each group of nonzero pixels: fragments within
    MERGE_GAP pixels are merged (morphological closing), enclosed holes
    are filled, and each resulting 4-connected region becomes one
    predicted instance.  Category boundaries are ignored.
    """
    mask = check_mask(mask)
    four = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    eight = np.ones((3, 3), dtype=bool)
    fg = ndimage.binary_fill_holes(mask > 0)
    pad = MERGE_GAP  # keep the closing from interacting with the border
    padded = np.pad(fg, pad)
    closed = ndimage.binary_closing(padded, structure=eight,
                                    iterations=MERGE_GAP // 2)
    closed = ndimage.binary_fill_holes(closed)[pad:-pad, pad:-pad]
    lab, _ = ndimage.label(closed, structure=four)
    return np.where(closed, lab, 0).astype(np.int32)


# ---------------------------------------------------------------------------
# pipeline evaluation


@dataclass
class EvalReport:
    levels: dict[str, dict[str, float]]
    params: dict
    runtime_ms: float

    def to_dict(self) -> dict:
        return {"metric": METRIC_NAME, "levels": self.levels,
                "params": self.params, "runtime_ms": self.runtime_ms}


def make_segmenter(level: LevelSpec, base: dict | None = None) -> RepetitionSegmenter:
    est = RepetitionSegmenter(**(base or {}))
    est.set_params(**level.overrides())
    return est


def evaluate_image(img, gt: GroundTruth, level: LevelSpec,
                   base: dict | None = None) -> EvalReport:
    """Run the pipeline at one operating point and score every gt level.

    Predicted categories are split into spatial components before
    matching, so instance-annotated levels compare like with like.
    """
    est = make_segmenter(level, base)
    t0 = time.perf_counter()
    pred = est.fit_predict(img)
    runtime_ms = (time.perf_counter() - t0) * 1000
    pred_inst = instance_components(pred)
    levels = {}
    for name, gt_mask in gt.levels.items():
        p, r = score(pred_inst, gt_mask)
        levels[name] = {"precision": p, "recall": r, "f1": f1_score(p, r)}
    return EvalReport(levels=levels, params=est.get_params(), runtime_ms=runtime_ms)


def sweep(img, gt: GroundTruth, r_values, superpixel_counts, fixed: LevelSpec,
          base: dict | None = None, gt_level: str = "instance",
          dump_accumulator_dir=None) -> list[dict]:
    """Grid evaluation over (r, superpixel count); other fields from `fixed`.

    Returns one row per cell with keys r, superpixels, precision, recall.
    With `dump_accumulator_dir` set, each cell's accumulator is exported
    as a row,col,value CSV there.
    """
    from .accumulator import write_accumulator_csv

    r_values = list(r_values)
    superpixel_counts = list(superpixel_counts)
    if not r_values or not superpixel_counts:
        raise InvalidParam("sweep grid must be nonempty")
    if gt_level not in gt.levels:
        raise InvalidParam(f"ground truth has no level {gt_level!r}")
    rows = []
    for r in r_values:
        for n_spx in superpixel_counts:
            spec = LevelSpec(name=fixed.name, r=r, k=fixed.k, sigma=fixed.sigma,
                             tau=fixed.tau, superpixels=n_spx,
                             compactness=fixed.compactness)
            est = make_segmenter(spec, base)
            pred_inst = instance_components(est.fit_predict(img))
            p, rec = score(pred_inst, gt.levels[gt_level])
            if dump_accumulator_dir is not None and est.accumulator_ is not None:
                out = Path(dump_accumulator_dir)
                out.mkdir(parents=True, exist_ok=True)
                write_accumulator_csv(
                    est.accumulator_, out / f"accumulator_r{r:g}_s{n_spx}.csv")
            rows.append({"r": r, "superpixels": n_spx,
                         "precision": p, "recall": rec})
    return rows


# ---------------------------------------------------------------------------
# corruption suite


def _clamp_u8(arr: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)


def corrupt(img, kind: str, seed: int) -> np.ndarray:
    """Apply one fixed-parameter corruption, deterministically.

    The RNG is a counter-based Philox generator seeded directly with
    `seed`, so identical arguments give bitwise-identical outputs on any
    platform.
    """
    img = check_image(img)
    if kind not in CORRUPTION_KINDS:
        raise InvalidParam(f"unknown corruption kind {kind!r}; "
                           f"choose from {', '.join(CORRUPTION_KINDS)}")
    rng = np.random.Generator(np.random.Philox(seed))
    x = img.astype(np.float64)
    if kind == "gaussian_noise":
        return _clamp_u8(x + rng.normal(0.0, NOISE_SCALE, size=img.shape))
    if kind == "gaussian_blur":
        sigma = (BLUR_SIGMA, BLUR_SIGMA) + (0,) * (img.ndim - 2)
        return _clamp_u8(ndimage.gaussian_filter(x, sigma, mode="nearest"))
    if kind == "linear_contrast":
        return _clamp_u8(127 + CONTRAST_FACTOR * (x - 127))
    if kind == "brightness":
        return _clamp_u8(x + BRIGHTNESS_DELTA)
    return _piecewise_affine(img, rng)


def _piecewise_affine(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Smooth warp: bilinear displacement field from a 4x4 control grid."""
    h, w = img.shape[:2]
    amp = AFFINE_SCALE * min(h, w)
    offsets = rng.normal(0.0, amp, size=(AFFINE_GRID, AFFINE_GRID, 2))
    cy = np.linspace(0, h - 1, AFFINE_GRID)
    cx = np.linspace(0, w - 1, AFFINE_GRID)
    interp = RegularGridInterpolator((cy, cx), offsets, method="linear")
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    disp = interp(np.stack([yy.ravel(), xx.ravel()], axis=1)).reshape(h, w, 2)
    coords = np.stack([yy + disp[..., 0], xx + disp[..., 1]])
    if img.ndim == 2:
        warped = ndimage.map_coordinates(img.astype(np.float64), coords,
                                         order=1, mode="nearest")
        return _clamp_u8(warped)
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        warped = ndimage.map_coordinates(img[..., c].astype(np.float64),
                                         coords, order=1, mode="nearest")
        out[..., c] = _clamp_u8(warped)
    return out


# ---------------------------------------------------------------------------
# synthetic oracle


ICON_NAMES = ("cross", "disc", "square", "triangle", "ring")


def _icon_stamp(name: str, size: int) -> np.ndarray:
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    c = (size - 1) / 2.0
    if name == "cross":
        arm = max(size // 3, 2)
        lo, hi = (size - arm) // 2, (size - arm) // 2 + arm
        return ((yy >= lo) & (yy < hi)) | ((xx >= lo) & (xx < hi))
    if name == "disc":
        return (yy - c) ** 2 + (xx - c) ** 2 <= (size / 2) ** 2
    if name == "square":
        return np.ones((size, size), dtype=bool)
    if name == "triangle":
        # widens towards the bottom row
        halfwidth = (yy + 1) * (size / 2) / size
        return np.abs(xx - c) <= halfwidth
    if name == "ring":
        rad = np.sqrt((yy - c) ** 2 + (xx - c) ** 2)
        return (rad <= size / 2) & (rad >= size / 2 - max(size // 6, 2))
    raise InvalidParam(f"unknown icon {name!r}; choose from {', '.join(ICON_NAMES)}")


def synth(icon: str, rows: int, cols: int, period: int, jitter: int,
          canvas: int, seed: int, icon_size: int = 24,
          gt_margin: int = 6) -> tuple[np.ndarray, GroundTruth]:
    """Composite a rows x cols icon grid on a textured background.

    Ground truth carries one id per placement at level "instance" and the
    full tiled region at level "pattern".  Instance regions are the icon
    support dilated by `gt_margin` pixels: the detector anchors instances
    at contour keypoints, so the instance includes a thin halo around the
    icon boundary.  Same seed, same output.
    """
    if rows < 1 or cols < 1:
        raise InvalidParam("rows and cols must be >= 1")
    if icon_size + 2 * jitter > period:
        raise InvalidParam("icon (plus jitter) does not fit within the period")
    if gt_margin < 0:
        raise InvalidParam("gt_margin must be >= 0")
    span_y = (rows - 1) * period + icon_size
    span_x = (cols - 1) * period + icon_size
    if span_y + 2 * jitter > canvas or span_x + 2 * jitter > canvas:
        raise InvalidParam("grid does not fit on the canvas")
    stamp = _icon_stamp(icon, icon_size)

    rng = np.random.Generator(np.random.Philox(seed))
    texture = ndimage.gaussian_filter(rng.normal(0.0, 1.0, (canvas, canvas)),
                                      8.0, mode="nearest")
    scale = texture.std() or 1.0
    background = 205 + texture / scale * 6.0
    image = background.copy()

    inst = np.zeros((canvas, canvas), dtype=np.int32)
    y0 = (canvas - span_y) // 2
    x0 = (canvas - span_x) // 2
    jit = rng.integers(-jitter, jitter + 1, size=(rows, cols, 2)) if jitter else \
        np.zeros((rows, cols, 2), dtype=np.int64)
    inst_id = 0
    for i in range(rows):
        for j in range(cols):
            inst_id += 1
            ty = y0 + i * period + int(jit[i, j, 0])
            tx = x0 + j * period + int(jit[i, j, 1])
            region = (slice(ty, ty + icon_size), slice(tx, tx + icon_size))
            image[region][stamp] = 30.0
            inst[region][stamp] = inst_id

    pat = np.zeros_like(inst)
    ys, xs = np.nonzero(inst)
    pat[ys.min():ys.max() + 1, xs.min():xs.max() + 1] = 1
    if gt_margin:
        # Placements never overlap, so one distance transform serves all
        # instances: every pixel within gt_margin of an icon inherits the
        # id of the nearest icon pixel.
        d_out, (iy, ix) = ndimage.distance_transform_edt(inst == 0,
                                                         return_indices=True)
        inst = np.where(d_out <= gt_margin, inst[iy, ix], 0).astype(np.int32)
    gt = GroundTruth(levels={"instance": inst, "pattern": pat})
    return _clamp_u8(image), gt


# ---------------------------------------------------------------------------
# dataset loader


def load_dataset(root) -> list[DatasetItem]:
    """Load the benchmark layout: images/ plus masks/<stem>/<level>.png."""
    root = Path(root)
    img_dir = root / "images"
    if not img_dir.is_dir():
        raise IoError(f"{img_dir} does not exist")
    paths = sorted(p for p in img_dir.iterdir()
                   if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
    if not paths:
        log.warning("no images found under %s", img_dir)
    items = []
    for p in paths:
        img = load_image(p)
        gt = GroundTruth()
        mask_dir = root / "masks" / p.stem
        if mask_dir.is_dir():
            for mp in sorted(mask_dir.glob("*.png")):
                mask = read_mask_png(mp)
                if mask.shape != img.shape[:2]:
                    raise FormatError(
                        f"{mp}: mask shape {mask.shape} does not match "
                        f"image shape {img.shape[:2]}")
                gt.levels[mp.stem] = mask
        items.append(DatasetItem(stem=p.stem, image=img, gt=gt))
    log.info("loaded %d image(s) from %s", len(items), root)
    return items
