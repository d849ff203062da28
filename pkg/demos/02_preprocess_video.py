"""Walk a single clip through the media pipeline: decode, crop, resample.

Builds a tiny LVF stream in memory with a moving bright square, plus a
68-point landmark track whose mouth points follow the square, then shows how
the mouth crop tracks it and how temporal resampling changes the frame count.
"""

import json

import numpy as np

from liplink.landmarks import parse_landmarks
from liplink.lvf import FrameSequence, decode_lvf, encode_lvf
from liplink.pipeline import preprocess_recording
from liplink.roi import RoiConfig, fallback_center_crop, mouth_bounding_box


def moving_square_clip(frames=12, side=64):
    video = np.zeros((frames, side, side), dtype=np.uint8)
    points = []
    for t in range(frames):
        x = 10 + 3 * t
        video[t, 24:40, x : x + 16] = 255
        pts = [[0.0, 0.0]] * 48  # non-mouth points, unused by the crop
        cx, cy = x + 8.0, 32.0
        mouth = [
            [cx + 12 * np.cos(a), cy + 10 * np.sin(a)]
            for a in np.linspace(0, 2 * np.pi, 20, endpoint=False)
        ]
        points.append(pts + [[float(px), float(py)] for px, py in mouth])
    return video, {"frames": points}


def main():
    video, landmark_doc = moving_square_clip()
    stream = encode_lvf(
        FrameSequence(width=64, height=64, fps=25, frames=video)
    )
    print(f"LVF stream: {len(stream)} bytes")

    clip = decode_lvf(stream)
    track = parse_landmarks(json.dumps(landmark_doc))
    config = RoiConfig(output_size=32)

    box0 = mouth_bounding_box(track.points[0], config, clip.width, clip.height)
    box_last = mouth_bounding_box(
        track.points[-1], config, clip.width, clip.height
    )
    print(f"mouth box, first frame: {box0}")
    print(f"mouth box, last frame:  {box_last} (follows the moving mouth)")
    print(f"fallback box (no landmarks): {fallback_center_crop(64, 64, config)}")

    tensor = preprocess_recording(clip, track, config, target_length=25)
    print(
        f"input tensor: {tensor.values.shape}, "
        f"range [{tensor.values.min():.2f}, {tensor.values.max():.2f}] "
        "(12 frames resampled to 25 by repeat-padding)"
    )


if __name__ == "__main__":
    main()
