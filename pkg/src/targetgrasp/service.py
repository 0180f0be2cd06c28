"""REST service exposing grasp sessions to the operator console.

Requests within one session are serialized through a per-session lock;
distinct sessions proceed concurrently on the server's worker threads.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from pydantic import BaseModel

from .config import ServiceConfig
from .detect import Instruction, OracleDetector, RemoteDetector
from .errors import MalformedSpec, TargetGraspError, WrongPhase
from .evaluation import make_executor
from .geometry import BBox2D
from .pipeline import Phase, Session, SimulatedSource, SuspensionCategory, TranscriptWriter
from .scene import build_scene, image_to_png_bytes, render_image

BBOX_COLOR = (255, 40, 40)
SEGMENT_COLOR = (80, 200, 255)
SELECTED_COLOR = (60, 255, 90)


def rasterize_bbox_edges(bbox: BBox2D, width: int, height: int):
    """Integer pixel rows/cols covered by the box border, clamped."""
    x1 = max(0, min(width - 1, int(np.floor(bbox.x1))))
    y1 = max(0, min(height - 1, int(np.floor(bbox.y1))))
    x2 = max(0, min(width - 1, int(np.ceil(bbox.x2)) - 1))
    y2 = max(0, min(height - 1, int(np.ceil(bbox.y2)) - 1))
    return x1, y1, x2, y2


def draw_bbox(image: np.ndarray, bbox: BBox2D, color=BBOX_COLOR) -> None:
    h, w = image.shape[:2]
    x1, y1, x2, y2 = rasterize_bbox_edges(bbox, w, h)
    image[y1, x1:x2 + 1] = color
    image[y2, x1:x2 + 1] = color
    image[y1:y2 + 1, x1] = color
    image[y1:y2 + 1, x2] = color


def draw_segment(image: np.ndarray, p0, p1, color) -> None:
    h, w = image.shape[:2]
    n = int(max(abs(p1[0] - p0[0]), abs(p1[1] - p0[1]))) + 1
    us = np.round(np.linspace(p0[0], p1[0], n)).astype(int)
    vs = np.round(np.linspace(p0[1], p1[1], n)).astype(int)
    ok = (us >= 0) & (us < w) & (vs >= 0) & (vs < h)
    image[vs[ok], us[ok]] = color


def render_overlay(session: Session) -> np.ndarray:
    """Scene raster with the triage box and candidate contact segments."""
    image = session.source.image().copy()
    if session.triage is not None and session.triage.bbox is not None:
        for summary in session.candidate_summaries():
            color = SELECTED_COLOR if summary["selected"] else SEGMENT_COLOR
            draw_segment(image, summary["segment"][0], summary["segment"][1],
                         color)
        draw_bbox(image, session.triage.bbox)
    return image


class CreateSessionBody(BaseModel):
    sceneSpec: Optional[dict] = None
    sceneRef: Optional[str] = None


class InstructionBody(BaseModel):
    text: str


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="targetgrasp service")
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    sessions: Dict[str, Tuple[Session, threading.Lock]] = {}
    store_lock = threading.Lock()
    writer = (TranscriptWriter(config.transcript_path)
              if config.transcript_path else None)

    def detector():
        if config.detector == "remote":
            return RemoteDetector(config.remote)
        return OracleDetector()

    def get_entry(session_id: str):
        with store_lock:
            entry = sessions.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")
        return entry

    if config.auth_token_env:
        @app.middleware("http")
        async def require_token(request: Request, call_next):
            expected = os.environ.get(config.auth_token_env, "")
            if request.url.path != "/healthz" and (
                    not expected
                    or request.headers.get("X-Auth-Token") != expected):
                from fastapi.responses import JSONResponse
                return JSONResponse(status_code=401,
                                    content={"detail": "missing or bad token"})
            return await call_next(request)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if (body.sceneSpec is None) == (body.sceneRef is None):
            raise HTTPException(status_code=422,
                                detail="provide exactly one of sceneSpec "
                                       "or sceneRef")
        spec = body.sceneSpec
        if body.sceneRef is not None:
            if not config.scene_dir:
                raise HTTPException(status_code=422,
                                    detail="no scene directory configured")
            path = Path(config.scene_dir) / f"{body.sceneRef}.json"
            try:
                spec = json.loads(path.read_text())
            except OSError:
                raise HTTPException(status_code=422,
                                    detail=f"scene {body.sceneRef!r} not found")
        try:
            scene = build_scene(spec)
        except MalformedSpec as e:
            raise HTTPException(status_code=422, detail=str(e))
        session = Session(SimulatedSource(scene, spec=spec), detector(),
                          params=config.proposer,
                          executor=make_executor(
                              config.mu, config.proposer.gripper.max_width),
                          auto_confirm=config.auto_confirm,
                          transcript_writer=writer)
        with store_lock:
            sessions[session.id] = (session, threading.Lock())
        return {"sessionId": session.id}

    @app.get("/sessions/{session_id}/scene.png")
    def scene_png(session_id: str):
        session, lock = get_entry(session_id)
        with lock:
            png = image_to_png_bytes(session.source.image())
        return Response(content=png, media_type="image/png")

    @app.get("/sessions/{session_id}/overlay.png")
    def overlay_png(session_id: str):
        session, lock = get_entry(session_id)
        with lock:
            png = image_to_png_bytes(render_overlay(session))
        return Response(content=png, media_type="image/png")

    @app.post("/sessions/{session_id}/instruction")
    def submit_instruction(session_id: str, body: InstructionBody):
        session, lock = get_entry(session_id)
        try:
            instruction = Instruction(body.text)
        except ValueError as e:
            raise HTTPException(status_code=422, detail=str(e))
        with lock:
            try:
                outcome = session.run(instruction)
            except WrongPhase as e:
                raise HTTPException(status_code=409, detail=str(e))
            if outcome.kind == outcome.SUSPENDED and \
                    outcome.category == SuspensionCategory.BACKEND_UNAVAILABLE:
                raise HTTPException(status_code=502, detail=outcome.message)
            return {
                "triage": session.triage.to_dict() if session.triage else None,
                "outcome": outcome.to_dict(),
                "candidates": session.candidate_summaries(),
                "phase": session.phase,
            }

    @app.post("/sessions/{session_id}/confirm")
    def confirm(session_id: str):
        session, lock = get_entry(session_id)
        with lock:
            try:
                outcome = session.confirm()
            except WrongPhase as e:
                raise HTTPException(status_code=409, detail=str(e))
            return {"outcome": outcome.to_dict(), "phase": session.phase}

    @app.post("/sessions/{session_id}/abort")
    def abort(session_id: str):
        session, lock = get_entry(session_id)
        with lock:
            try:
                outcome = session.abort()
            except WrongPhase as e:
                raise HTTPException(status_code=409, detail=str(e))
            return {"outcome": outcome.to_dict(), "phase": session.phase}

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str):
        session, lock = get_entry(session_id)
        with lock:
            return session.state_view()

    return app
