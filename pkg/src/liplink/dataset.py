"""Phrase lexicon, recording registry, stratified split and the synthetic
oscillating-ellipse data generator used as a desk-scale training oracle."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, DuplicateText, EmptyDataset, SchemaError
from .pipeline import InputTensorSequence


@dataclass
class PhraseLexicon:
    phrases: list[str]
    version: int = 1

    def __post_init__(self):
        if any(not p for p in self.phrases):
            raise SchemaError("phrase texts must be nonempty")
        if len(set(self.phrases)) != len(self.phrases):
            raise DuplicateText("phrase texts must be unique")

    def __len__(self) -> int:
        return len(self.phrases)

    def text(self, phrase_id: int) -> str:
        return self.phrases[phrase_id]


def load_lexicon(text: str) -> PhraseLexicon:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "phrases" not in doc:
        raise SchemaError('missing "phrases" field')
    phrases = doc["phrases"]
    if not isinstance(phrases, list) or not all(isinstance(p, str) for p in phrases):
        raise SchemaError('"phrases" must be a list of strings')
    return PhraseLexicon(phrases=phrases, version=int(doc.get("version", 1)))


def save_lexicon(lexicon: PhraseLexicon) -> str:
    return json.dumps({"version": lexicon.version, "phrases": lexicon.phrases})


def default_lexicon(num_phrases: int = 88) -> PhraseLexicon:
    """Placeholder phrase list standing in for a deployment-specific lexicon."""
    return PhraseLexicon(phrases=[f"phrase {i:02d}" for i in range(num_phrases)])


@dataclass
class Recording:
    recording_id: str
    phrase_id: int
    repetition_index: int
    speaker_id: str
    lvf_ref: str
    landmarks_ref: str | None = None
    created_at: float = 0.0


@dataclass
class DatasetSplit:
    train: list
    validation: list
    seed: int
    validation_empty: bool = False  # set when some phrase could not reach validation


def split_train_val(recordings_by_phrase: dict, ratio: float, seed: int) -> DatasetSplit:
    """Stratified per-phrase split: round(ratio * count) of each phrase's
    recordings (seeded shuffle) go to train, the rest to validation, keeping
    at least one validation item whenever a phrase has >= 2 recordings."""
    if not 0.0 < ratio < 1.0:
        raise BadParams("ratio must be in (0, 1)")
    if not recordings_by_phrase or all(not v for v in recordings_by_phrase.values()):
        raise EmptyDataset("no recordings to split")
    rng = np.random.default_rng(seed)
    train, val = [], []
    starved = False
    for phrase_id in sorted(recordings_by_phrase):
        items = list(recordings_by_phrase[phrase_id])
        if not items:
            continue
        order = rng.permutation(len(items))
        n = len(items)
        n_train = int(math.floor(ratio * n + 0.5))
        n_train = min(max(n_train, 1), n)
        if n >= 2 and n_train == n:
            n_train = n - 1
        if n == 1:
            starved = True
        train.extend(items[i] for i in order[:n_train])
        val.extend(items[i] for i in order[n_train:])
    return DatasetSplit(train=train, validation=val, seed=seed, validation_empty=starved)


def synthetic_params(num_classes: int) -> list[tuple[float, float]]:
    """Per-class (frequency, phase) pairs; unique by construction."""
    groups = math.ceil(num_classes / 4)
    return [
        (1.0 + (k % 4), 2.0 * math.pi * (k // 4) / groups) for k in range(num_classes)
    ]


def render_synthetic_frames(
    k: int, num_classes: int, length: int, side: int
) -> np.ndarray:
    """Noise-free (T, N, N) trajectory for class k: a filled ellipse whose
    vertical half-axis oscillates at a class-specific frequency and phase."""
    freq, phase = synthetic_params(num_classes)[k]
    amp = side / 4.0
    b_half = side / 3.0
    c = (side - 1) / 2.0
    ys, xs = np.mgrid[0:side, 0:side]
    frames = np.zeros((length, side, side), dtype=np.float64)
    for t in range(length):
        a = amp * (0.55 + 0.45 * math.sin(2.0 * math.pi * freq * t / length + phase))
        inside = ((xs - c) / b_half) ** 2 + ((ys - c) / a) ** 2 <= 1.0
        frames[t][inside] = 1.0
    return frames


def generate_synthetic(
    num_classes: int,
    reps: int,
    length: int,
    side: int,
    noise: float,
    seed: int,
) -> list[tuple[int, InputTensorSequence]]:
    """Deterministic labeled synthetic clips: `reps` per class, additive
    uniform noise in [-noise, noise], clipped to [0, 1]."""
    if num_classes < 2 or reps < 1:
        raise BadParams("need num_classes >= 2 and reps >= 1")
    if length < 1 or side < 1 or noise < 0:
        raise BadParams("length, side must be positive; noise nonnegative")
    out = []
    for k in range(num_classes):
        clean = render_synthetic_frames(k, num_classes, length, side)
        for rep in range(reps):
            frames = clean
            if noise > 0:
                rng = np.random.default_rng([seed, k, rep])
                frames = clean + rng.uniform(-noise, noise, size=clean.shape)
            frames = np.clip(frames, 0.0, 1.0)
            out.append((k, InputTensorSequence(values=frames)))
    return out
