"""Mouth region-of-interest geometry and resampling.

Boxes are (x0, y0, x1, y1) with exclusive upper edges: the box covers the
pixel columns [x0, x1) and rows [y0, y1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBox


@dataclass
class RoiConfig:
    output_size: int = 32
    margin_fraction: float = 0.10
    mouth_point_range: tuple[int, int] = (48, 67)  # inclusive interval

    def __post_init__(self):
        if self.output_size < 8:
            raise ValueError("output_size must be >= 8")
        if not 0.0 <= self.margin_fraction < 1.0:
            raise ValueError("margin_fraction must be in [0, 1)")
        lo, hi = self.mouth_point_range
        if not (0 <= lo <= hi <= 67):
            raise ValueError("mouth_point_range must lie within [0, 67]")


def _clamp_square(x0, y0, side, width, height):
    """Translate a square box inside the frame; shrink only if it cannot fit."""
    side = min(side, width, height)
    x0 = min(max(x0, 0.0), width - side)
    y0 = min(max(y0, 0.0), height - side)
    return x0, y0, x0 + side, y0 + side


def mouth_bounding_box(frame_points, config: RoiConfig, width: int, height: int):
    """Square crop box around the mouth landmarks of one frame.

    Tight box over the mouth points, padded by margin_fraction of each
    dimension's own extent per side, expanded to a square about its center,
    then clamped into the frame (translation first, shrink as last resort).
    """
    pts = np.asarray(frame_points, dtype=np.float64)
    if pts.shape != (68, 2):
        raise ValueError(f"expected 68 (x, y) points, got shape {pts.shape}")
    lo, hi = config.mouth_point_range
    mouth = pts[lo : hi + 1]
    x_min, y_min = mouth.min(axis=0)
    x_max, y_max = mouth.max(axis=0)
    w = x_max - x_min
    h = y_max - y_min
    if w == 0.0 and h == 0.0:
        raise DegenerateBox("all mouth points coincide")
    m = config.margin_fraction
    x_min -= m * w
    x_max += m * w
    y_min -= m * h
    y_max += m * h
    side = max(x_max - x_min, y_max - y_min)
    cx = (x_min + x_max) / 2.0
    cy = (y_min + y_max) / 2.0
    return _clamp_square(cx - side / 2.0, cy - side / 2.0, side, width, height)


def fallback_center_crop(width: int, height: int, config: RoiConfig):
    """Heuristic lower-face crop used when no landmarks accompany a clip.

    Centered square of side floor(min(w, h) / 2), pushed down by a quarter
    of the frame height, clamped inside the frame.
    """
    if width < 1 or height < 1:
        raise ValueError("frame must be nonempty")
    side = min(width, height) // 2
    side = max(side, 1)
    x0 = (width - side) // 2
    y0 = (height - side) // 2 + height // 4
    y0 = min(max(y0, 0), height - side)
    return float(x0), float(y0), float(x0 + side), float(y0 + side)


def resize_bilinear(image, out_h: int, out_w: int | None = None) -> np.ndarray:
    """Align-corners bilinear resize of a 2-D image to (out_h, out_w)."""
    if out_w is None:
        out_w = out_h
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    return _sample_box(img, 0.0, 0.0, float(w), float(h), out_h, out_w)


def crop_resize(image, box, out_side: int) -> np.ndarray:
    """Bilinear-sample the box region of an image onto an out_side square."""
    img = np.asarray(image, dtype=np.float64)
    x0, y0, x1, y1 = box
    return _sample_box(img, x0, y0, x1, y1, out_side, out_side)


def _sample_box(img, x0, y0, x1, y1, out_h, out_w):
    h, w = img.shape
    # Align-corners over the pixel-center span [x0, x1 - 1] x [y0, y1 - 1].
    xs = _grid(x0, x1 - 1.0, out_w)
    ys = _grid(y0, y1 - 1.0, out_h)
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x_lo = np.floor(xs).astype(np.int64)
    y_lo = np.floor(ys).astype(np.int64)
    x_hi = np.minimum(x_lo + 1, w - 1)
    y_hi = np.minimum(y_lo + 1, h - 1)
    fx = xs - x_lo
    fy = ys - y_lo
    top = img[y_lo][:, x_lo] * (1 - fx) + img[y_lo][:, x_hi] * fx
    bot = img[y_hi][:, x_lo] * (1 - fx) + img[y_hi][:, x_hi] * fx
    return top * (1 - fy)[:, None] + bot * fy[:, None]


def _grid(lo, hi, n):
    if n == 1:
        return np.array([(lo + hi) / 2.0])
    return lo + (hi - lo) * np.arange(n) / (n - 1)
