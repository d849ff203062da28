"""Operator command line: synthetic data, training, evaluation, sweeps,
the HTTP server, and thin client commands against a running server."""

from __future__ import annotations

import json
import math
import os
import sys

import click
import numpy as np

from . import dataset as ds
from .errors import LipLinkError
from .landmarks import LandmarkTrack, dump_landmarks, parse_landmarks
from .lvf import FrameSequence, decode_lvf, encode_lvf
from .nn import (
    ModelSpec,
    TrainConfig,
    load_weights,
    predict_topk,
    save_weights,
)
from .nn.train import train as train_model
from .evaluation import evaluate, render_report, run_sweep, summary_line
from .pipeline import preprocess_recording
from .roi import RoiConfig


@click.group()
def main():
    """Lip-reading phrase classifier toolkit."""


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _synthetic_landmarks(side: int, length: int) -> LandmarkTrack:
    """68-point track whose mouth points trace the synthetic ellipse at its
    maximum aperture, so the landmark crop is stable across frames."""
    c = (side - 1) / 2.0
    amp = side / 4.0
    b_half = side / 3.0
    pts = np.full((68, 2), c, dtype=np.float64)
    for j in range(20):
        theta = 2.0 * math.pi * j / 20
        pts[48 + j] = (c + b_half * math.cos(theta), c + amp * math.sin(theta))
    return LandmarkTrack(points=np.repeat(pts[None], length, axis=0))


def _load_manifest_samples(manifest_path, roi_config, target_length):
    entries = _load_json(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    samples, labels = [], []
    for entry in entries:
        with open(os.path.join(base, entry["lvf"]), "rb") as fh:
            frames = decode_lvf(fh.read())
        track = None
        if entry.get("landmarks"):
            with open(os.path.join(base, entry["landmarks"])) as fh:
                track = parse_landmarks(fh.read())
        tensor = preprocess_recording(frames, track, roi_config, target_length)
        samples.append(tensor.values)
        labels.append(int(entry["phrase_id"]))
    return entries, samples, labels


def _split_samples(entries, samples, labels, ratio, seed):
    by_phrase: dict[int, list[int]] = {}
    for i, y in enumerate(labels):
        by_phrase.setdefault(y, []).append(i)
    split = ds.split_train_val(by_phrase, ratio, seed)
    tr = ([samples[i] for i in split.train], [labels[i] for i in split.train])
    va = (
        [samples[i] for i in split.validation],
        [labels[i] for i in split.validation],
    )
    if not va[0]:
        va = tr
    return tr, va


@main.command()
@click.option("--classes", "-k", "num_classes", type=int, required=True)
@click.option("--reps", type=int, required=True)
@click.option("--length", "-t", type=int, default=25, show_default=True)
@click.option("--side", "-n", type=int, default=32, show_default=True)
@click.option("--noise", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--landmarks/--no-landmarks", default=True, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
def synth(num_classes, reps, length, side, noise, seed, landmarks, out_dir):
    """Generate deterministic synthetic clips as LVF files plus a manifest."""
    try:
        clips = ds.generate_synthetic(num_classes, reps, length, side, noise, seed)
    except LipLinkError as exc:
        raise click.UsageError(str(exc))
    os.makedirs(out_dir, exist_ok=True)
    track_text = dump_landmarks(_synthetic_landmarks(side, length)) if landmarks else None
    manifest = []
    for label, tensor in clips:
        rep = sum(1 for m in manifest if m["phrase_id"] == label)
        stem = f"class{label:03d}_rep{rep:02d}"
        frames = np.floor(tensor.values * 255.0 + 0.5).astype(np.uint8)
        seq = FrameSequence(width=side, height=side, fps=25, frames=frames)
        with open(os.path.join(out_dir, stem + ".lvf"), "wb") as fh:
            fh.write(encode_lvf(seq))
        entry = {"lvf": stem + ".lvf", "phrase_id": label, "repetition": rep}
        if track_text is not None:
            with open(os.path.join(out_dir, stem + ".landmarks.json"), "w") as fh:
                fh.write(track_text)
            entry["landmarks"] = stem + ".landmarks.json"
        manifest.append(entry)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    click.echo(f"wrote {len(manifest)} clips to {out_dir}")


def _spec_from_files(spec_file, labels):
    num_classes = max(labels) + 1
    spec_dict = ModelSpec(num_classes=num_classes).to_dict()
    if spec_file:
        spec_dict.update(_load_json(spec_file))
    return ModelSpec.from_dict(spec_dict)


def _config_from_file(config_file):
    config_dict = TrainConfig().to_dict()
    if config_file:
        config_dict.update(_load_json(config_file))
    return TrainConfig(**config_dict)


@main.command()
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--spec", "spec_file", type=click.Path(exists=True))
@click.option("--config", "config_file", type=click.Path(exists=True))
@click.option("--ratio", type=float, default=0.6, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--history", "history_path", type=click.Path())
def train(manifest, spec_file, config_file, ratio, out_path, history_path):
    """Train on a manifest of clips; write a weights file (and history)."""
    try:
        entries, samples, labels = _load_manifest_samples(
            manifest, RoiConfig(), 25
        )
        spec = _spec_from_files(spec_file, labels)
        config = _config_from_file(config_file)
        if spec.input_side != 32 or spec.sequence_length != 25:
            roi = RoiConfig(output_size=spec.input_side)
            entries, samples, labels = _load_manifest_samples(
                manifest, roi, spec.sequence_length
            )
        (tx, ty), (vx, vy) = _split_samples(entries, samples, labels, ratio, config.seed)
        weights, history = train_model(spec, tx, ty, vx, vy, config)
    except LipLinkError as exc:
        raise click.ClickException(str(exc))
    with open(out_path, "wb") as fh:
        fh.write(save_weights(weights))
    if history_path:
        with open(history_path, "w") as fh:
            json.dump(history.to_dict(), fh, indent=1)
    click.echo(
        f"best_epoch={history.best_epoch} stopped_epoch={history.stopped_epoch} "
        f"val_top1={history.val_top1[history.best_epoch]:.4f}"
    )


@main.command(name="eval")
@click.option("--weights", "weights_path", type=click.Path(exists=True), required=True)
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("-k", "topk", type=int, default=5, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
def eval_cmd(weights_path, manifest, topk, out_dir):
    """Evaluate a weights file over a manifest; write report artifacts."""
    with open(weights_path, "rb") as fh:
        try:
            weights = load_weights(fh.read())
        except LipLinkError as exc:
            raise click.ClickException(str(exc))
    if not 1 <= topk <= weights.spec.num_classes:
        raise click.UsageError(
            f"k must be in [1, {weights.spec.num_classes}], got {topk}"
        )
    try:
        _, samples, labels = _load_manifest_samples(
            manifest,
            RoiConfig(output_size=weights.spec.input_side),
            weights.spec.sequence_length,
        )
        report = evaluate(weights, samples, labels, topk=topk)
    except LipLinkError as exc:
        raise click.ClickException(str(exc))
    render_report(report, out_dir)
    click.echo(summary_line(report))


@main.command()
@click.option("--grid", "grid_path", type=click.Path(exists=True), required=True)
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--ratio", type=float, default=0.6, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
def sweep(grid_path, manifest, ratio, out_dir):
    """Train every grid point; write results sorted by validation accuracy."""
    grid_doc = _load_json(grid_path)
    if not grid_doc:
        raise click.UsageError("grid is empty")
    try:
        entries, samples, labels = _load_manifest_samples(manifest, RoiConfig(), 25)
        num_classes = max(labels) + 1
        grid = []
        for cell in grid_doc:
            spec_dict = ModelSpec(num_classes=num_classes).to_dict()
            spec_dict.update(cell.get("model_spec") or {})
            config_dict = TrainConfig().to_dict()
            config_dict.update(cell.get("train_config") or {})
            grid.append((ModelSpec.from_dict(spec_dict), TrainConfig(**config_dict)))
        side = grid[0][0].input_side
        seq = grid[0][0].sequence_length
        if side != 32 or seq != 25:
            entries, samples, labels = _load_manifest_samples(
                manifest, RoiConfig(output_size=side), seq
            )
        seed = grid[0][1].seed
        (tx, ty), (vx, vy) = _split_samples(entries, samples, labels, ratio, seed)
        result = run_sweep(grid, tx, ty, vx, vy)
    except LipLinkError as exc:
        raise click.ClickException(str(exc))
    os.makedirs(out_dir, exist_ok=True)
    doc = [
        {
            "model_spec": e.model_spec.to_dict(),
            "train_config": e.train_config.to_dict(),
            "val_top1": e.val_top1,
            "history": e.history.to_dict() if e.history else None,
            "error": e.error,
        }
        for e in result.entries
    ]
    with open(os.path.join(out_dir, "sweep.json"), "w") as fh:
        json.dump(doc, fh, indent=1)
    for e in result.entries:
        tag = "failed" if e.error else f"val_top1={e.val_top1:.4f}"
        click.echo(f"lstm_hidden={e.model_spec.lstm_hidden} lr={e.train_config.learning_rate} {tag}")


@main.command()
@click.option("--port", type=int, default=8008, show_default=True, envvar="LIPLINK_PORT")
@click.option("--data-dir", type=click.Path(), required=True, envvar="LIPLINK_DATA_DIR")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), envvar="LIPLINK_LEXICON")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="LIPLINK_HOST")
def serve(port, data_dir, lexicon_path, host):
    """Run the HTTP service until interrupted."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir, lexicon_path)
    uvicorn.run(app, host=host, port=port, log_level="warning")


# -- client commands --


def _client(server):
    import httpx

    return httpx.Client(base_url=server, timeout=60.0)


def _check(resp):
    if resp.status_code >= 400:
        try:
            body = resp.json()
            msg = f"{body.get('error', resp.status_code)}: {body.get('message', '')}"
        except Exception:
            msg = f"HTTP {resp.status_code}"
        raise click.ClickException(msg)
    return resp


def _auth_headers(token):
    return {"Authorization": f"Bearer {token}"}


@main.command()
@click.option("--server", required=True)
@click.option("--username", required=True)
@click.option("--password", required=True)
def register(server, username, password):
    """Create an account on the server."""
    with _client(server) as client:
        resp = _check(
            client.post("/auth/register", json={"username": username, "password": password})
        )
    click.echo(resp.json()["user_id"])


@main.command()
@click.option("--server", required=True)
@click.option("--username", required=True)
@click.option("--password", required=True)
def login(server, username, password):
    """Log in; prints the session token."""
    with _client(server) as client:
        resp = _check(
            client.post("/auth/login", json={"username": username, "password": password})
        )
    click.echo(resp.json()["token"])


@main.command()
@click.option("--server", required=True)
@click.option("--token", required=True)
@click.option("--phrase-id", type=int, required=True)
@click.option("--repetition", type=int, required=True)
@click.option("--lvf", "lvf_path", type=click.Path(exists=True), required=True)
@click.option("--landmarks", "landmarks_path", type=click.Path(exists=True))
def upload(server, token, phrase_id, repetition, lvf_path, landmarks_path):
    """Upload one recording."""
    with open(lvf_path, "rb") as fh:
        lvf_bytes = fh.read()
    with _client(server) as client:
        if landmarks_path:
            import base64

            with open(landmarks_path) as fh:
                landmarks_doc = json.load(fh)
            resp = client.post(
                "/recordings",
                json={
                    "phrase_id": phrase_id,
                    "repetition_index": repetition,
                    "lvf_base64": base64.b64encode(lvf_bytes).decode(),
                    "landmarks": landmarks_doc,
                },
                headers=_auth_headers(token),
            )
        else:
            resp = client.post(
                "/recordings",
                params={"phrase_id": phrase_id, "repetition_index": repetition},
                content=lvf_bytes,
                headers={**_auth_headers(token), "Content-Type": "application/octet-stream"},
            )
        _check(resp)
    click.echo(resp.json()["recording_id"])


@main.command(name="remote-train")
@click.option("--server", required=True)
@click.option("--token", required=True)
@click.option("--spec", "spec_file", type=click.Path(exists=True))
@click.option("--config", "config_file", type=click.Path(exists=True))
@click.option("--wait/--no-wait", default=True, show_default=True)
def remote_train(server, token, spec_file, config_file, wait):
    """Submit a training job to the server; optionally wait for completion."""
    import time

    body = {}
    if spec_file:
        body["model_spec"] = _load_json(spec_file)
    if config_file:
        body["train_config"] = _load_json(config_file)
    with _client(server) as client:
        resp = _check(client.post("/train", json=body, headers=_auth_headers(token)))
        job_id = resp.json()["job_id"]
        click.echo(job_id)
        if wait:
            while True:
                job = _check(
                    client.get(f"/train/{job_id}", headers=_auth_headers(token))
                ).json()
                if job["state"] in ("succeeded", "failed"):
                    break
                time.sleep(0.2)
            click.echo(job["state"])
            if job["state"] == "failed":
                raise click.ClickException(job.get("error") or "training failed")


@main.command()
@click.option("--server", required=True)
@click.option("--token", required=True)
@click.option("--lvf", "lvf_path", type=click.Path(exists=True), required=True)
@click.option("--landmarks", "landmarks_path", type=click.Path(exists=True))
@click.option("-k", "topk", type=int, default=5, show_default=True)
def infer(server, token, lvf_path, landmarks_path, topk):
    """Run inference on a clip; prints ranked candidates."""
    with open(lvf_path, "rb") as fh:
        lvf_bytes = fh.read()
    with _client(server) as client:
        if landmarks_path:
            import base64

            with open(landmarks_path) as fh:
                landmarks_doc = json.load(fh)
            resp = client.post(
                "/infer",
                json={
                    "k": topk,
                    "lvf_base64": base64.b64encode(lvf_bytes).decode(),
                    "landmarks": landmarks_doc,
                },
                headers=_auth_headers(token),
            )
        else:
            resp = client.post(
                "/infer",
                params={"k": topk},
                content=lvf_bytes,
                headers={**_auth_headers(token), "Content-Type": "application/octet-stream"},
            )
        _check(resp)
    body = resp.json()
    click.echo(f"inference_id {body['inference_id']}", err=True)
    for cand in body["candidates"]:
        click.echo(
            f"{cand['rank']} {cand['phrase_id']} {cand['probability']:.4f} {cand['text']}"
        )


@main.command()
@click.option("--server", required=True)
@click.option("--token", required=True)
@click.option("--inference-id", required=True)
@click.option("--phrase-id", type=int, required=True)
def select(server, token, inference_id, phrase_id):
    """Record the user's chosen phrase for an inference."""
    with _client(server) as client:
        _check(
            client.post(
                "/selections",
                json={"inference_id": inference_id, "chosen_phrase_id": phrase_id},
                headers=_auth_headers(token),
            )
        )
    click.echo("ok")


if __name__ == "__main__":
    main()
