"""Image and label-mask IO plus grayscale conversion.

Images are numpy uint8 arrays, ``(h, w)`` for grayscale or ``(h, w, 3)``
for RGB.  Label masks are ``(h, w)`` int32 arrays where 0 is background
and the nonzero labels present are dense ``{1..C}``.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import FormatError, InvalidParam, IoError

MAX_MASK_LABEL = 65535


def check_image(img) -> np.ndarray:
    """Validate and return an image array (uint8, 2-D or 3-channel)."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise InvalidParam(f"image must be uint8, got {arr.dtype}")
    if arr.ndim == 2:
        pass
    elif arr.ndim == 3 and arr.shape[2] == 3:
        pass
    else:
        raise InvalidParam(f"image must be (h,w) or (h,w,3), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidParam("image must be at least 1x1")
    return arr


def check_mask(mask) -> np.ndarray:
    """Validate and return a label mask (2-D, non-negative integers)."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise InvalidParam(f"mask must be 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise InvalidParam(f"mask must be integer, got {arr.dtype}")
    if arr.size and arr.min() < 0:
        raise InvalidParam("mask labels must be non-negative")
    return arr.astype(np.int32, copy=False)


def load_image(path) -> np.ndarray:
    """Decode a PNG or JPEG file into a uint8 array.

    16-bit inputs are rejected rather than silently truncated.
    """
    try:
        with PILImage.open(path) as im:
            if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise FormatError(f"{path}: only 8-bit images are supported (mode {im.mode})")
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    except PermissionError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    except UnidentifiedImageError as e:
        raise FormatError(f"{path}: unsupported or corrupt image file") from e
    return arr


def to_gray(img) -> np.ndarray:
    """Convert RGB to luma with round(0.299R + 0.587G + 0.114B).

    Grayscale input is returned unchanged.
    """
    arr = check_image(img)
    if arr.ndim == 2:
        return arr
    luma = arr[..., 0] * 0.299 + arr[..., 1] * 0.587 + arr[..., 2] * 0.114
    return np.floor(luma + 0.5).astype(np.uint8)


def _atomic_save(pil_img: PILImage.Image, path, fmt: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            pil_img.save(f, format=fmt)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_mask_png(mask, path) -> None:
    """Write a label mask as a 16-bit grayscale PNG (pixel value == label)."""
    arr = check_mask(mask)
    if arr.size and arr.max() > MAX_MASK_LABEL:
        raise InvalidParam(f"mask labels exceed {MAX_MASK_LABEL}")
    im = PILImage.fromarray(arr.astype(np.uint16))
    try:
        _atomic_save(im, path, "PNG")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def read_mask_png(path) -> np.ndarray:
    """Read a label mask written by :func:`write_mask_png`."""
    try:
        with PILImage.open(path) as im:
            if im.mode not in ("I", "I;16", "I;16B", "I;16L", "L"):
                raise FormatError(f"{path}: not a grayscale label mask (mode {im.mode})")
            arr = np.asarray(im)
    except FileNotFoundError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    except UnidentifiedImageError as e:
        raise FormatError(f"{path}: unsupported or corrupt image file") from e
    return arr.astype(np.int32)


def write_image_png(img, path) -> None:
    """Write a uint8 image as PNG (atomic replace)."""
    arr = check_image(img)
    im = PILImage.fromarray(arr)
    try:
        _atomic_save(im, path, "PNG")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
