import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from liplink.cli import _synthetic_landmarks
from liplink.dataset import generate_synthetic
from liplink.landmarks import dump_landmarks
from liplink.lvf import FrameSequence, encode_lvf


def clip_to_lvf(tensor, fps=25):
    frames = np.floor(tensor.values * 255.0 + 0.5).astype(np.uint8)
    side = tensor.side
    return encode_lvf(FrameSequence(width=side, height=side, fps=fps, frames=frames))


@pytest.fixture(scope="session")
def synth_clips_small():
    """3 classes x 3 reps of 16x16, 8-frame synthetic clips as LVF bytes."""
    clips = generate_synthetic(3, 3, 8, 16, 0.02, seed=11)
    track = dump_landmarks(_synthetic_landmarks(16, 8))
    return [
        {"label": label, "lvf": clip_to_lvf(tensor), "landmarks": json.loads(track)}
        for label, tensor in clips
    ]
