"""Authenticated HTTP service: accounts, recording upload, training jobs,
ranked inference and selection logging, all in one process.

State lives under a data directory: users and the recording registry as
JSON(L) files, raw clips in a content-addressed blob store, the current
model weights in an atomically-replaced file.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
import uuid

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .. import dataset as ds
from ..errors import LipLinkError, SchemaError
from ..landmarks import parse_landmarks
from ..lvf import decode_lvf
from ..nn import ModelSpec, TrainConfig, load_weights, predict_topk, save_weights
from ..nn.train import train
from ..pipeline import preprocess_recording
from ..roi import RoiConfig
from ..storage import BlobStore
from . import auth


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def _now() -> float:
    return time.time()


class ServiceState:
    def __init__(self, data_dir: str, lexicon_path: str | None, clock=_now):
        self.data_dir = data_dir
        self.clock = clock
        os.makedirs(data_dir, exist_ok=True)
        self.blobs = BlobStore(os.path.join(data_dir, "blobs"))
        self.lock = threading.Lock()

        self.lexicon_path = lexicon_path
        self._lexicon_mtime = None
        self.lexicon = self._load_lexicon()

        self.users_path = os.path.join(data_dir, "users.json")
        self.users: dict[str, dict] = {}
        if os.path.exists(self.users_path):
            with open(self.users_path) as fh:
                self.users = json.load(fh)
        self.sessions: dict[str, dict] = {}

        self.registry_path = os.path.join(data_dir, "recordings.jsonl")
        self.recordings: list[dict] = []
        self._recording_index: dict[tuple, str] = {}
        if os.path.exists(self.registry_path):
            with open(self.registry_path) as fh:
                for line in fh:
                    rec = json.loads(line)
                    self.recordings.append(rec)
                    self._recording_index[self._rec_key(rec)] = rec["recording_id"]

        self.selections_path = os.path.join(data_dir, "selections.jsonl")
        self.inferences: dict[str, dict] = {}

        self.jobs: dict[str, dict] = {}
        self.job_queue: list[str] = []
        self.running_job: str | None = None
        self.model_version = 0
        self.current_model = None  # (version, ModelWeights)
        self.model_path = os.path.join(data_dir, "model.lw")
        if os.path.exists(self.model_path):
            with open(self.model_path, "rb") as fh:
                self.current_model = (1, load_weights(fh.read()))
                self.model_version = 1

    # -- lexicon --

    def _load_lexicon(self) -> ds.PhraseLexicon:
        if self.lexicon_path is None:
            return ds.default_lexicon()
        self._lexicon_mtime = os.path.getmtime(self.lexicon_path)
        with open(self.lexicon_path) as fh:
            return ds.load_lexicon(fh.read())

    def refresh_lexicon(self) -> ds.PhraseLexicon:
        if self.lexicon_path is not None:
            mtime = os.path.getmtime(self.lexicon_path)
            if mtime != self._lexicon_mtime:
                self.lexicon = self._load_lexicon()
        return self.lexicon

    # -- users / sessions --

    def save_users(self):
        tmp = self.users_path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self.users, fh)
        os.replace(tmp, self.users_path)

    def authenticate(self, request: Request) -> str:
        header = request.headers.get("authorization", "")
        token = header.removeprefix("Bearer ").strip()
        session = self.sessions.get(token)
        if session is None:
            raise ApiError(401, "Unauthorized", "missing or unknown token")
        if session["expires_at"] <= self.clock():
            raise ApiError(401, "TokenExpired", "session expired")
        return session["user_id"]

    # -- recordings --

    @staticmethod
    def _rec_key(rec: dict) -> tuple:
        return (rec["speaker_id"], rec["phrase_id"], rec["repetition_index"], rec["lvf_ref"])

    def add_recording(self, rec: dict) -> None:
        self.recordings.append(rec)
        self._recording_index[self._rec_key(rec)] = rec["recording_id"]
        with open(self.registry_path, "a") as fh:
            fh.write(json.dumps(rec) + "\n")

    # -- model publication --

    def publish_model(self, weights) -> int:
        data = save_weights(weights)
        tmp = self.model_path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, self.model_path)
        with self.lock:
            self.model_version += 1
            version = self.model_version
            self.current_model = (version, weights)
        return version


def _preprocess_upload(lvf_bytes: bytes, landmarks_doc, spec_side: int, seq_len: int):
    frames = decode_lvf(lvf_bytes)
    track = None
    if landmarks_doc is not None:
        track = parse_landmarks(json.dumps(landmarks_doc))
    config = RoiConfig(output_size=spec_side)
    return preprocess_recording(frames, track, config, seq_len)


def _run_job(state: ServiceState, job: dict) -> None:
    spec = ModelSpec.from_dict(job["model_spec"])
    config = TrainConfig(**job["train_config"])
    by_phrase: dict[int, list[int]] = {}
    for i, rec in enumerate(state.recordings):
        by_phrase.setdefault(rec["phrase_id"], []).append(i)
    split = ds.split_train_val(by_phrase, 0.6, config.seed)

    def tensors(indices):
        xs, ys = [], []
        for i in indices:
            rec = state.recordings[i]
            lvf_bytes = state.blobs.get(rec["lvf_ref"])
            landmarks_doc = None
            if rec.get("landmarks_ref"):
                landmarks_doc = json.loads(state.blobs.get(rec["landmarks_ref"]))
            tensor = _preprocess_upload(
                lvf_bytes, landmarks_doc, spec.input_side, spec.sequence_length
            )
            xs.append(tensor.values)
            ys.append(rec["phrase_id"])
        return xs, ys

    train_x, train_y = tensors(split.train)
    val_x, val_y = tensors(split.validation if split.validation else split.train)
    weights, history = train(spec, train_x, train_y, val_x, val_y, config)
    version = state.publish_model(weights)
    job["result_weights_ref"] = state.model_path
    job["model_version"] = version
    job["history"] = history.to_dict()


def _job_worker(state: ServiceState) -> None:
    while True:
        with state.lock:
            if not state.job_queue:
                state.running_job = None
                return
            job_id = state.job_queue.pop(0)
            state.running_job = job_id
            job = state.jobs[job_id]
            job["state"] = "running"
        try:
            _run_job(state, job)
            job["state"] = "succeeded"
        except Exception as exc:
            job["state"] = "failed"
            job["error"] = str(exc)


def create_app(data_dir: str, lexicon_path: str | None = None, clock=_now) -> FastAPI:
    state = ServiceState(data_dir, lexicon_path, clock)
    app = FastAPI(title="liplink")
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"error": exc.code, "message": exc.message}
        )

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "BadRequest", "body must be JSON")
        if not isinstance(body, dict):
            raise ApiError(400, "BadRequest", "body must be a JSON object")
        return body

    # -- auth --

    @app.post("/auth/register")
    async def register(request: Request):
        body = await _json_body(request)
        username = body.get("username")
        password = body.get("password")
        if not isinstance(username, str) or not username:
            raise ApiError(400, "BadRequest", "username required")
        if not isinstance(password, str) or len(password) < 8:
            raise ApiError(400, "WeakPassword", "password must be at least 8 characters")
        with state.lock:
            if username in state.users:
                raise ApiError(409, "UsernameTaken", "username already registered")
            user_id = uuid.uuid4().hex
            state.users[username] = {
                "user_id": user_id,
                "password": auth.hash_password(password),
                "created_at": state.clock(),
            }
            state.save_users()
        return JSONResponse(status_code=201, content={"user_id": user_id})

    @app.post("/auth/login")
    async def login(request: Request):
        body = await _json_body(request)
        username = body.get("username", "")
        password = body.get("password", "")
        record = state.users.get(username)
        # unknown user and wrong password take the same path and response
        ok = auth.verify_password(
            password, record["password"] if record else auth.DUMMY_RECORD
        )
        if record is None or not ok:
            raise ApiError(401, "BadCredentials", "invalid username or password")
        token = auth.new_token()
        expires = state.clock() + auth.TOKEN_TTL_SECONDS
        state.sessions[token] = {"user_id": record["user_id"], "expires_at": expires}
        return {"token": token, "user_id": record["user_id"], "expires_at": expires}

    # -- lexicon --

    @app.get("/lexicon")
    async def lexicon(request: Request):
        state.authenticate(request)
        lex = state.refresh_lexicon()
        return {
            "version": lex.version,
            "phrases": [{"id": i, "text": t} for i, t in enumerate(lex.phrases)],
        }

    # -- uploads --

    async def _media_envelope(request: Request, extra_int_fields):
        """LVF bytes + optional landmarks from either envelope: raw LVF body
        with query parameters, or a JSON wrapper with base64 LVF."""
        content_type = request.headers.get("content-type", "")
        values = {}
        if content_type.startswith("application/json"):
            body = await _json_body(request)
            if "lvf_base64" not in body:
                raise ApiError(400, "BadRequest", "lvf_base64 required")
            try:
                lvf_bytes = base64.b64decode(body["lvf_base64"])
            except Exception:
                raise ApiError(400, "BadRequest", "lvf_base64 is not valid base64")
            landmarks_doc = body.get("landmarks")
            source = body
        else:
            lvf_bytes = await request.body()
            landmarks_doc = None
            source = request.query_params
        for name, default in extra_int_fields.items():
            raw = source.get(name, default)
            if raw is None:
                raise ApiError(400, "BadRequest", f"{name} required")
            try:
                values[name] = int(raw)
            except (TypeError, ValueError):
                raise ApiError(400, "BadRequest", f"{name} must be an integer")
        return lvf_bytes, landmarks_doc, values

    @app.post("/recordings")
    async def upload_recording(request: Request):
        user_id = state.authenticate(request)
        lvf_bytes, landmarks_doc, fields = await _media_envelope(
            request, {"phrase_id": None, "repetition_index": None}
        )
        phrase_id = fields["phrase_id"]
        repetition = fields["repetition_index"]
        lex = state.refresh_lexicon()
        if not 0 <= phrase_id < len(lex):
            raise ApiError(404, "UnknownPhrase", f"phrase {phrase_id} not in lexicon")
        try:
            decode_lvf(lvf_bytes)
            if landmarks_doc is not None:
                parse_landmarks(json.dumps(landmarks_doc))
        except LipLinkError as exc:
            raise ApiError(400, "BadLvf", str(exc))
        with state.lock:
            lvf_ref = state.blobs.put(lvf_bytes)
            key = (user_id, phrase_id, repetition, lvf_ref)
            existing = state._recording_index.get(key)
            if existing is not None:
                return JSONResponse(status_code=200, content={"recording_id": existing})
            landmarks_ref = None
            if landmarks_doc is not None:
                landmarks_ref = state.blobs.put(json.dumps(landmarks_doc).encode())
            rec = {
                "recording_id": uuid.uuid4().hex,
                "phrase_id": phrase_id,
                "repetition_index": repetition,
                "speaker_id": user_id,
                "lvf_ref": lvf_ref,
                "landmarks_ref": landmarks_ref,
                "created_at": state.clock(),
            }
            state.add_recording(rec)
        return JSONResponse(status_code=201, content={"recording_id": rec["recording_id"]})

    # -- training jobs --

    @app.post("/train")
    async def submit_train(request: Request):
        state.authenticate(request)
        body = await _json_body(request) if await request.body() else {}
        lex = state.refresh_lexicon()
        covered = {rec["phrase_id"] for rec in state.recordings}
        missing = [i for i in range(len(lex)) if i not in covered]
        if missing:
            raise ApiError(
                422, "InsufficientData", f"phrases without recordings: {missing[:10]}"
            )
        spec_dict = ModelSpec(num_classes=len(lex)).to_dict()
        spec_dict.update(body.get("model_spec") or {})
        spec_dict["num_classes"] = len(lex)
        config_dict = TrainConfig().to_dict()
        config_dict.update(body.get("train_config") or {})
        try:
            ModelSpec.from_dict(spec_dict)
            TrainConfig(**config_dict)
        except (ValueError, TypeError) as exc:
            raise ApiError(400, "BadRequest", f"invalid overrides: {exc}")
        with state.lock:
            busy = (state.running_job is not None) + len(state.job_queue)
            if busy >= 2:
                raise ApiError(409, "JobAlreadyRunning", "training queue is full")
            job_id = uuid.uuid4().hex
            job = {
                "job_id": job_id,
                "state": "queued",
                "model_spec": spec_dict,
                "train_config": config_dict,
                "submitted_by": state.sessions.get(
                    request.headers.get("authorization", "").removeprefix("Bearer ").strip(),
                    {},
                ).get("user_id"),
                "result_weights_ref": None,
                "history": None,
                "error": None,
            }
            state.jobs[job_id] = job
            state.job_queue.append(job_id)
            start_worker = state.running_job is None
            if start_worker:
                state.running_job = job_id
        if start_worker:
            threading.Thread(target=_job_worker, args=(state,), daemon=True).start()
        return JSONResponse(status_code=202, content={"job_id": job_id})

    @app.get("/train/{job_id}")
    async def job_status(job_id: str, request: Request):
        state.authenticate(request)
        job = state.jobs.get(job_id)
        if job is None:
            raise ApiError(404, "UnknownJob", f"no job {job_id}")
        return job

    # -- inference --

    @app.post("/infer")
    async def infer(request: Request):
        user_id = state.authenticate(request)
        lvf_bytes, landmarks_doc, fields = await _media_envelope(request, {"k": 5})
        k = fields["k"]
        with state.lock:
            current = state.current_model
        if current is None:
            raise ApiError(503, "NoModel", "no trained model available")
        version, weights = current
        if not 1 <= k <= weights.spec.num_classes:
            raise ApiError(400, "BadK", f"k must be in [1, {weights.spec.num_classes}]")
        try:
            tensor = _preprocess_upload(
                lvf_bytes, landmarks_doc, weights.spec.input_side, weights.spec.sequence_length
            )
        except LipLinkError as exc:
            raise ApiError(400, "BadLvf", str(exc))
        ranked = predict_topk(weights, tensor.values, k)
        lex = state.refresh_lexicon()
        inference_id = uuid.uuid4().hex
        candidates = [
            {
                "rank": r + 1,
                "phrase_id": c,
                "text": lex.text(c) if c < len(lex) else "",
                "probability": p,
            }
            for r, (c, p) in enumerate(ranked)
        ]
        state.inferences[inference_id] = {
            "user_id": user_id,
            "candidates": candidates,
            "model_version": version,
            "selected": False,
        }
        return {
            "inference_id": inference_id,
            "model_version": version,
            "candidates": candidates,
        }

    # -- selections --

    @app.post("/selections")
    async def select(request: Request):
        user_id = state.authenticate(request)
        body = await _json_body(request)
        inference_id = body.get("inference_id")
        chosen = body.get("chosen_phrase_id")
        record = state.inferences.get(inference_id)
        if record is None:
            raise ApiError(404, "UnknownInference", f"no inference {inference_id}")
        ranks = {c["phrase_id"]: c["rank"] for c in record["candidates"]}
        if chosen not in ranks:
            raise ApiError(422, "NotACandidate", "chosen phrase was not offered")
        with state.lock:
            if record["selected"]:
                raise ApiError(409, "AlreadySelected", "inference already resolved")
            record["selected"] = True
            event = {
                "user_id": user_id,
                "inference_id": inference_id,
                "chosen_phrase_id": chosen,
                "rank_of_choice": ranks[chosen],
                "timestamp": state.clock(),
            }
            with open(state.selections_path, "a") as fh:
                fh.write(json.dumps(event) + "\n")
        return Response(status_code=204)

    return app
