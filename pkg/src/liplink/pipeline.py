"""End-to-end preprocessing: frames + landmarks -> network input tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBox, LengthMismatch
from .landmarks import LandmarkTrack
from .lvf import FrameSequence
from .roi import RoiConfig, crop_resize, fallback_center_crop, mouth_bounding_box


@dataclass
class InputTensorSequence:
    """T x N x N tensor of normalized intensities in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or self.values.shape[1] != self.values.shape[2]:
            raise ValueError("values must be (T, N, N)")

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def side(self) -> int:
        return self.values.shape[1]


def sample_indices(source_len: int, target_len: int) -> list[int]:
    """Uniform temporal resampling indices (round-to-nearest, half up)."""
    if source_len <= target_len:
        idx = list(range(source_len))
        idx += [source_len - 1] * (target_len - source_len)
        return idx
    if target_len == 1:
        return [0]
    step = (source_len - 1) / (target_len - 1)
    return [int(np.floor(i * step + 0.5)) for i in range(target_len)]


def preprocess_recording(
    frames: FrameSequence,
    landmarks: LandmarkTrack | None,
    config: RoiConfig,
    target_length: int,
) -> InputTensorSequence:
    """Crop the mouth region of every frame, normalize, and fix the length.

    Deterministic: identical inputs always produce bit-identical tensors.
    """
    if landmarks is not None and len(landmarks) != frames.frame_count:
        raise LengthMismatch(
            f"{len(landmarks)} landmark frames for {frames.frame_count} video frames"
        )
    fallback = fallback_center_crop(frames.width, frames.height, config)
    out = np.empty(
        (frames.frame_count, config.output_size, config.output_size), dtype=np.float64
    )
    for i in range(frames.frame_count):
        box = fallback
        if landmarks is not None:
            try:
                box = mouth_bounding_box(
                    landmarks.points[i], config, frames.width, frames.height
                )
            except DegenerateBox:
                box = fallback
        img = frames.frames[i].astype(np.float64)
        out[i] = crop_resize(img, box, config.output_size) / 255.0
    idx = sample_indices(frames.frame_count, target_length)
    return InputTensorSequence(values=out[idx])
