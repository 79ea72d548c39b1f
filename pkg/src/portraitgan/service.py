"""HTTP service exposing extraction, editing and generation to the UI and
batch clients.

Sessions hold a base ConditionSet plus the ordered edit scripts applied to
it; the current state is always reproducible by replaying the history, and
undo pops the latest script. The checkpoint is loaded once at startup and
never mutated while serving.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from fastapi import FastAPI, File, HTTPException, Response, UploadFile
from PIL import Image

from . import editing
from .conditioning import (
    ConditionSet,
    black_palette,
    default_edge_probability,
    extract_conditions,
    extract_light_mask,
    extract_shadow_mask,
    postprocess_edges,
)
from .errors import ConfigError, PortraitGanError
from .networks import load_checkpoint
from .raster import BinaryMask, Raster, SegMask

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ServiceConfig:
    checkpoint_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8321
    session_ttl_seconds: float = 3600.0
    max_upload_bytes: int = 8 * 1024 * 1024
    session_dir: str | None = None

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ServiceConfig":
        """Read the optional YAML config file, then apply PORTRAITGAN_*
        environment overrides."""
        raw: dict = {}
        if path is not None:
            raw = yaml.safe_load(Path(path).read_text()) or {}
            unknown = set(raw) - set(cls.__dataclass_fields__)
            if unknown:
                raise ConfigError(f"unknown service config keys: {sorted(unknown)}")
        env_map = {
            "checkpoint_path": os.environ.get("PORTRAITGAN_CHECKPOINT"),
            "host": os.environ.get("PORTRAITGAN_HOST"),
            "port": os.environ.get("PORTRAITGAN_PORT"),
            "session_ttl_seconds": os.environ.get("PORTRAITGAN_SESSION_TTL"),
            "session_dir": os.environ.get("PORTRAITGAN_SESSION_DIR"),
        }
        for key, value in env_map.items():
            if value is not None:
                raw[key] = value
        if "port" in raw:
            raw["port"] = int(raw["port"])
        if "session_ttl_seconds" in raw:
            raw["session_ttl_seconds"] = float(raw["session_ttl_seconds"])
        if "max_upload_bytes" in raw:
            raw["max_upload_bytes"] = int(raw["max_upload_bytes"])
        return cls(**raw)


@dataclass
class Session:
    session_id: str
    base: ConditionSet
    flags: list[str]
    scripts: list[editing.EditScript] = field(default_factory=list)
    current: ConditionSet | None = None
    last_access: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.current is None:
            self.current = self.replay()

    def replay(self) -> ConditionSet:
        cond = self.base
        for script in self.scripts:
            cond = editing.apply_edit_script(cond, script)
        return cond

    def apply(self, script: editing.EditScript) -> None:
        # Validate against the current state before committing anything.
        updated = editing.apply_edit_script(self.current, script)
        self.scripts.append(script)
        self.current = updated

    def undo(self) -> bool:
        if not self.scripts:
            return False
        self.scripts.pop()
        self.current = self.replay()
        return True


class SessionStore:
    """In-memory session map with TTL eviction and optional directory
    persistence (sessions survive restarts when a directory is set)."""

    def __init__(self, ttl_seconds: float, directory: str | None = None):
        self.ttl = ttl_seconds
        self.directory = Path(directory) if directory else None
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _expired(self, session: Session) -> bool:
        return time.time() - session.last_access > self.ttl

    def sweep(self) -> None:
        with self._lock:
            for sid in [s for s, sess in self._sessions.items() if self._expired(sess)]:
                del self._sessions[sid]

    def create(self, base: ConditionSet, flags: list[str]) -> Session:
        self.sweep()
        session = Session(session_id=uuid.uuid4().hex, base=base, flags=flags)
        with self._lock:
            self._sessions[session.session_id] = session
        self._persist(session)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            session = self._restore(session_id)
        if session is None or self._expired(session):
            raise HTTPException(status_code=404, detail="unknown or expired session")
        session.last_access = time.time()
        return session

    def _session_dir(self, session_id: str) -> Path | None:
        return self.directory / session_id if self.directory else None

    def _persist(self, session: Session) -> None:
        sdir = self._session_dir(session.session_id)
        if sdir is None:
            return
        from .conditioning import save_condition_set

        save_condition_set(session.base, sdir / "base")
        payload = {
            "flags": session.flags,
            "scripts": [json.loads(s.to_json()) for s in session.scripts],
        }
        (sdir / "session.json").write_text(json.dumps(payload))

    def _restore(self, session_id: str) -> Session | None:
        sdir = self._session_dir(session_id)
        if sdir is None or not (sdir / "session.json").exists():
            return None
        from .conditioning import load_condition_set

        payload = json.loads((sdir / "session.json").read_text())
        session = Session(
            session_id=session_id,
            base=load_condition_set(sdir / "base"),
            flags=payload["flags"],
            scripts=[editing.EditScript(tuple(ops["ops"]))
                     for ops in payload["scripts"]],
        )
        with self._lock:
            self._sessions[session_id] = session
        return session

    def persist(self, session: Session) -> None:
        self._persist(session)


def _png_bytes(raster: Raster) -> bytes:
    buf = io.BytesIO()
    byte = raster.to_byte().data.astype(np.uint8)
    mode = "L" if byte.ndim == 2 else "RGB"
    Image.fromarray(byte, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def _mask_png_b64(mask: BinaryMask) -> str:
    return editing.encode_mask_png(mask)


def _decode_upload(data: bytes, what: str) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            return np.asarray(im.convert("RGB") if what == "image" else im.convert("L"))
    except Exception:
        raise HTTPException(status_code=400, detail=f"undecodable {what} PNG")


def _condition_payload(session: Session) -> dict:
    cond = session.current
    seg_missing = "no_segmentation" in session.flags
    channels = {
        "edge": editing.encode_gray_png(cond.edge),
        "light": _mask_png_b64(cond.light),
        "shadow": _mask_png_b64(cond.shadow),
    }
    if not seg_missing:
        channels["color_map"] = base64.b64encode(_png_bytes(cond.color_map)).decode()
        channels["face_mask"] = _mask_png_b64(cond.face_mask)
        channels["eye_mask"] = _mask_png_b64(cond.eye_mask)
    payload = {
        "session_id": session.session_id,
        "flags": session.flags,
        "height": cond.height,
        "width": cond.width,
        "undo_depth": len(session.scripts),
        "channels": channels,
    }
    if not seg_missing:
        payload["palette"] = cond.palette.to_json_obj()
    return payload


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="portraitgan service", version="1")
    store = SessionStore(config.session_ttl_seconds, config.session_dir)
    app.state.config = config
    app.state.sessions = store
    app.state.bundle = None
    app.state.checkpoint_id = None
    if config.checkpoint_path:
        bundle, _ = load_checkpoint(config.checkpoint_path)
        digest = hashlib.sha256(Path(config.checkpoint_path).read_bytes())
        app.state.bundle = bundle
        app.state.checkpoint_id = digest.hexdigest()[:12]
        log.info("loaded checkpoint %s (%s)", config.checkpoint_path,
                 app.state.checkpoint_id)

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "checkpoint": app.state.checkpoint_id}

    @app.post("/v1/extract")
    async def extract(image: UploadFile = File(...),
                      seg: UploadFile | None = File(default=None)):
        data = await image.read()
        if len(data) > config.max_upload_bytes:
            raise HTTPException(status_code=413, detail="image too large")
        arr = _decode_upload(data, "image")
        portrait = Raster(arr.astype(np.float64), "byte")
        flags: list[str] = []
        if seg is not None:
            seg_data = await seg.read()
            if len(seg_data) > config.max_upload_bytes:
                raise HTTPException(status_code=413, detail="segmentation too large")
            seg_arr = _decode_upload(seg_data, "segmentation")
            try:
                seg_mask = SegMask(seg_arr)
                cond = extract_conditions(portrait, seg_mask)
            except PortraitGanError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        else:
            flags.append("no_segmentation")
            height, width = arr.shape[:2]
            zeros = np.zeros((height, width), dtype=np.uint8)
            cond = ConditionSet(
                edge=postprocess_edges(default_edge_probability(portrait)),
                palette=black_palette(),
                color_map=Raster(np.zeros((height, width, 3)), "byte"),
                light=extract_light_mask(portrait),
                shadow=extract_shadow_mask(portrait),
                face_mask=BinaryMask(zeros),
                eye_mask=BinaryMask(zeros.copy()),
            )
        session = store.create(cond, flags)
        return _condition_payload(session)

    @app.post("/v1/sessions/{session_id}/edit")
    def edit(session_id: str, payload: dict):
        session = store.get(session_id)
        try:
            script = editing.EditScript(tuple(payload.get("ops", ())))
        except (PortraitGanError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=f"invalid edit script: {exc}")
        with session.lock:
            try:
                session.apply(script)
            except PortraitGanError as exc:
                raise HTTPException(status_code=422,
                                    detail=f"script not applicable: {exc}")
            store.persist(session)
            return _condition_payload(session)

    @app.post("/v1/sessions/{session_id}/undo")
    def undo(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if not session.undo():
                raise HTTPException(status_code=409, detail="nothing to undo")
            store.persist(session)
            return _condition_payload(session)

    @app.post("/v1/sessions/{session_id}/generate")
    def generate_endpoint(session_id: str):
        session = store.get(session_id)
        if app.state.bundle is None:
            raise HTTPException(status_code=409, detail="no checkpoint loaded")
        with session.lock:
            cond = session.current
        started = time.perf_counter()
        try:
            image = editing.generate(app.state.bundle, cond)
        except PortraitGanError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        latency_ms = (time.perf_counter() - started) * 1000.0
        return Response(
            content=_png_bytes(image),
            media_type="image/png",
            headers={
                "X-Checkpoint-Id": app.state.checkpoint_id,
                "X-Latency-Ms": f"{latency_ms:.1f}",
            },
        )

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
