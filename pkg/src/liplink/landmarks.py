"""Facial landmark tracks: 68 (x, y) anchor points per frame.

File schema: JSON document {"frames": [[[x, y] * 68], ...]} in pixel units,
same origin as the LVF container.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError, WrongPointCount

NUM_POINTS = 68


@dataclass
class LandmarkTrack:
    points: np.ndarray  # (frames, 68, 2) float64

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 3 or self.points.shape[1:] != (NUM_POINTS, 2):
            raise WrongPointCount(
                f"expected (frames, {NUM_POINTS}, 2) points, got {self.points.shape}"
            )

    def __len__(self) -> int:
        return self.points.shape[0]


def parse_landmarks(text: str) -> LandmarkTrack:
    """Parse a landmark JSON document into a LandmarkTrack."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "frames" not in doc:
        raise SchemaError('missing top-level "frames" field')
    frames = doc["frames"]
    if not isinstance(frames, list):
        raise SchemaError('"frames" must be a list')
    parsed = []
    for i, frame in enumerate(frames):
        if not isinstance(frame, list) or len(frame) != NUM_POINTS:
            raise WrongPointCount(
                f"frame {i}: expected {NUM_POINTS} points, got "
                f"{len(frame) if isinstance(frame, list) else type(frame).__name__}"
            )
        for pt in frame:
            if (
                not isinstance(pt, list)
                or len(pt) != 2
                or not all(isinstance(v, (int, float)) for v in pt)
            ):
                raise SchemaError(f"frame {i}: points must be [x, y] number pairs")
        parsed.append(frame)
    return LandmarkTrack(points=np.array(parsed, dtype=np.float64).reshape(-1, NUM_POINTS, 2))


def dump_landmarks(track: LandmarkTrack) -> str:
    """Serialize a LandmarkTrack back to the JSON schema."""
    return json.dumps({"frames": track.points.tolist()})
