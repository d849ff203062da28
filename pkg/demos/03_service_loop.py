"""Drive the whole service loop in-process: register, upload, train, infer.

Uses the ASGI test client, so no port is opened. The same flow works against
a real server started with `liplink serve` by swapping the client for httpx.
"""

import base64
import json
import tempfile
import time

import numpy as np
from fastapi.testclient import TestClient

from liplink.dataset import generate_synthetic
from liplink.lvf import FrameSequence, encode_lvf
from liplink.service import create_app

LEXICON = {"version": 1, "phrases": ["go", "stop", "left"]}
SPEC = {
    "input_side": 16,
    "sequence_length": 8,
    "conv_blocks": [4],
    "lstm_hidden": 8,
    "dense_units": 16,
}
CONFIG = {"learning_rate": 1e-2, "max_epochs": 20, "patience": 20, "seed": 0}


def to_lvf(tensor):
    frames = np.floor(tensor.values * 255.0 + 0.5).astype(np.uint8)
    return encode_lvf(
        FrameSequence(width=tensor.side, height=tensor.side, fps=25, frames=frames)
    )


def main():
    root = tempfile.mkdtemp(prefix="liplink_demo_")
    lexicon_path = f"{root}/lexicon.json"
    with open(lexicon_path, "w") as fh:
        json.dump(LEXICON, fh)
    client = TestClient(create_app(f"{root}/data", lexicon_path))

    client.post("/auth/register", json={"username": "demo", "password": "password1"})
    token = client.post(
        "/auth/login", json={"username": "demo", "password": "password1"}
    ).json()["token"]
    headers = {"Authorization": f"Bearer {token}"}
    print("logged in")

    clips = generate_synthetic(3, 4, 8, 16, 0.02, seed=5)
    held_out = {}
    for i, (label, tensor) in enumerate(clips):
        rep = i % 4
        if rep == 3:
            held_out[label] = tensor
            continue
        r = client.post(
            "/recordings",
            json={
                "phrase_id": label,
                "repetition_index": rep,
                "lvf_base64": base64.b64encode(to_lvf(tensor)).decode(),
            },
            headers=headers,
        )
        assert r.status_code == 201, r.text
    print("uploaded 3 reps x 3 phrases")

    job_id = client.post(
        "/train",
        json={"model_spec": SPEC, "train_config": CONFIG},
        headers=headers,
    ).json()["job_id"]
    while True:
        job = client.get(f"/train/{job_id}", headers=headers).json()
        if job["state"] in ("succeeded", "failed"):
            break
        time.sleep(0.1)
    print(f"training {job['state']}")

    result = client.post(
        "/infer",
        json={"k": 3, "lvf_base64": base64.b64encode(to_lvf(held_out[1])).decode()},
        headers=headers,
    ).json()
    for cand in result["candidates"]:
        print(
            f"  rank {cand['rank']}: {cand['text']} "
            f"(phrase {cand['phrase_id']}, p={cand['probability']:.4f})"
        )

    client.post(
        "/selections",
        json={
            "inference_id": result["inference_id"],
            "chosen_phrase_id": result["candidates"][0]["phrase_id"],
        },
        headers=headers,
    )
    print("selection recorded")


if __name__ == "__main__":
    main()
