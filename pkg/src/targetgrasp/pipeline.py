"""Grasp session state machine.

A session acquires scene data, triages the instruction, and either runs
the filter -> orient -> refine -> select chain to a grasp (executing it
directly or waiting for human confirmation) or suspends with feedback.
Every step lands in an append-only transcript from which the outcome can
be replayed.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from PIL import Image

from .detect import Instruction, SceneView, Triage
from .errors import (
    BackendUnavailable,
    EmptyAfterFilter,
    NoCandidates,
    WrongPhase,
)
from .geometry import CameraIntrinsics, DEFAULT_INTRINSICS, GraspCandidate, PointCloud
from .ply import read_ply
from .proposer import (
    ProposerParams,
    bbox_depth_mask,
    estimate_normals,
    filter_by_bbox,
    propose_orientations,
    refine,
    score_seeds,
    select_best,
    subsample_indices,
)
from .scene import Scene, render_cloud, render_image


class Phase:
    IDLE = "idle"
    TRIAGED = "triaged"
    CANDIDATES_READY = "candidates_ready"
    AWAITING_CONFIRM = "awaiting_confirm"
    EXECUTED = "executed"
    SUSPENDED = "suspended"

    TERMINAL = (EXECUTED, SUSPENDED)


class SuspensionCategory:
    NO_TARGET = "no_target"
    IRRELEVANT = "irrelevant"
    EMPTY_AFTER_FILTER = "empty_after_filter"
    NO_CANDIDATES = "no_candidates"
    USER_ABORT = "user_abort"
    BACKEND_UNAVAILABLE = "backend_unavailable"


PROPOSER_EVENTS = ("seed_stage", "filter_stage", "orientation_stage",
                   "refine_stage", "candidates_ready")

_EMPTY_FILTER_MESSAGE = ("No graspable points remained inside the detected "
                         "box; the target may be unreachable. Task suspended.")
_NO_CANDIDATES_MESSAGE = ("No stable grasp pose was found on the target; "
                          "task suspended instead of grasping blindly.")


@dataclass(frozen=True)
class TranscriptEvent:
    ts: float
    session: str
    phase: str
    event: str
    payload: dict

    def to_dict(self) -> dict:
        return {"ts": self.ts, "session": self.session, "phase": self.phase,
                "event": self.event, "payload": self.payload}


class TranscriptWriter:
    """Serialized JSONL sink shared by concurrent sessions."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()

    def append(self, event: TranscriptEvent) -> None:
        line = json.dumps(event.to_dict(), sort_keys=True)
        with self._lock:
            with open(self.path, "a") as fh:
                fh.write(line + "\n")


@dataclass(frozen=True)
class SessionOutcome:
    """Either a selected grasp (with its execution result) or a suspension."""

    kind: str                                   # "grasp" | "suspended"
    candidate: Optional[GraspCandidate] = None
    execution_result: Optional[str] = None      # success | failure | not-executed
    category: Optional[str] = None
    message: Optional[str] = None

    GRASP = "grasp"
    SUSPENDED = "suspended"

    def __post_init__(self):
        if self.kind == self.GRASP:
            if self.candidate is None or self.execution_result not in (
                    "success", "failure", "not-executed"):
                raise ValueError("grasp outcome needs candidate and result")
        elif self.kind == self.SUSPENDED:
            if not self.category or not self.message:
                raise ValueError("suspension needs category and message")
        else:
            raise ValueError(f"unknown outcome kind {self.kind!r}")

    @staticmethod
    def grasp(candidate: GraspCandidate, execution_result: str) -> "SessionOutcome":
        return SessionOutcome(SessionOutcome.GRASP, candidate=candidate,
                              execution_result=execution_result)

    @staticmethod
    def suspended(category: str, message: str) -> "SessionOutcome":
        return SessionOutcome(SessionOutcome.SUSPENDED, category=category,
                              message=message)

    def to_dict(self) -> dict:
        if self.kind == self.GRASP:
            return {"kind": self.kind, "candidate": self.candidate.to_dict(),
                    "execution_result": self.execution_result}
        return {"kind": self.kind, "category": self.category,
                "message": self.message}


# ---------------------------------------------------------------------------
# Scene sources
# ---------------------------------------------------------------------------

class SimulatedSource:
    """Scene data straight from the simulator; keeps ground-truth access.

    When built from a JSON scene description, keep it around so the
    transcript records enough to replay the whole session.
    """

    def __init__(self, scene: Scene, spec: Optional[dict] = None):
        self.scene = scene
        self.spec = spec

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return self.scene.camera

    def cloud(self) -> PointCloud:
        return render_cloud(self.scene)

    def image(self) -> np.ndarray:
        return render_image(self.scene)


class FileSource:
    """Ingested PLY cloud + PNG raster pair; no ground truth available."""

    scene = None

    def __init__(self, ply_path, png_path,
                 intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS):
        self._ply_path = ply_path
        self._png_path = png_path
        self.intrinsics = intrinsics

    def cloud(self) -> PointCloud:
        return read_ply(self._ply_path)

    def image(self) -> np.ndarray:
        return np.asarray(Image.open(self._png_path).convert("RGB"))


# ---------------------------------------------------------------------------
# Session
# ---------------------------------------------------------------------------

class Session:
    """One strictly sequential instruction-to-outcome run."""

    def __init__(self, source, detector, params: Optional[ProposerParams] = None,
                 executor: Optional[Callable] = None,
                 auto_confirm: bool = False,
                 transcript_writer: Optional[TranscriptWriter] = None,
                 session_id: Optional[str] = None):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.source = source
        self.detector = detector
        self.params = params or ProposerParams()
        self.executor = executor
        self.auto_confirm = auto_confirm
        self.phase = Phase.IDLE
        self.instruction: Optional[Instruction] = None
        self.triage: Optional[Triage] = None
        self.filtered_seeds: list = []
        self.candidates: List[GraspCandidate] = []
        self.selected: Optional[GraspCandidate] = None
        self.outcome: Optional[SessionOutcome] = None
        self.transcript: List[TranscriptEvent] = []
        self._writer = transcript_writer

    # -- transcript ---------------------------------------------------------

    def _emit(self, event: str, payload: dict) -> None:
        ev = TranscriptEvent(ts=time.time(), session=self.id, phase=self.phase,
                             event=event, payload=payload)
        self.transcript.append(ev)
        if self._writer is not None:
            self._writer.append(ev)

    def _suspend(self, category: str, message: str) -> SessionOutcome:
        self.phase = Phase.SUSPENDED
        self.outcome = SessionOutcome.suspended(category, message)
        self._emit("suspended", {"category": category, "message": message})
        return self.outcome

    # -- main flow ------------------------------------------------------------

    def run(self, instruction: Instruction) -> SessionOutcome:
        """Triage the instruction and drive the pipeline to an outcome.

        With auto_confirm the selected grasp is executed immediately;
        otherwise the session parks in awaiting-confirm and the returned
        grasp outcome carries execution_result "not-executed".
        """
        if self.phase != Phase.IDLE:
            raise WrongPhase(f"run() requires idle phase, not {self.phase}")
        self.instruction = instruction
        start_payload = {"instruction": instruction.text}
        spec = getattr(self.source, "spec", None)
        if spec is not None:
            start_payload["scene_spec"] = spec
        self._emit("session_start", start_payload)

        view = SceneView(image=self.source.image(),
                         intrinsics=self.source.intrinsics,
                         scene=self.source.scene)
        try:
            self.triage = self.detector.triage(instruction, view)
        except BackendUnavailable as e:
            return self._suspend(SuspensionCategory.BACKEND_UNAVAILABLE, str(e))
        self.phase = Phase.TRIAGED
        self._emit("triage", self.triage.to_dict())

        if self.triage.category == Triage.NO_TARGET:
            return self._suspend(SuspensionCategory.NO_TARGET,
                                 self.triage.message)
        if self.triage.category == Triage.IRRELEVANT:
            return self._suspend(SuspensionCategory.IRRELEVANT,
                                 self.triage.message)

        cloud = self.source.cloud()
        full_normals = estimate_normals(cloud, self.params.k_neighbors)
        seed_pool = cloud
        seed_pool_normals = full_normals
        if self.params.prefilter_cloud:
            # Ablation path: crop the cloud before the seed stage instead of
            # filtering between the seed and orientation stages.
            crop = bbox_depth_mask(cloud.points, self.triage.bbox,
                                   self.source.intrinsics,
                                   self.params.depth_cluster_gap)
            if not crop.any():
                return self._suspend(SuspensionCategory.EMPTY_AFTER_FILTER,
                                     _EMPTY_FILTER_MESSAGE)
            seed_pool = PointCloud(cloud.points[crop])
            seed_pool_normals = full_normals[crop]
        idx = subsample_indices(len(seed_pool), self.params.max_cloud_points)
        seed_cloud = PointCloud(seed_pool.points[idx])
        seeds = score_seeds(seed_cloud, self.params,
                            normals=seed_pool_normals[idx])
        self._emit("seed_stage", {"seeds": len(seeds),
                                  "prefiltered": self.params.prefilter_cloud})
        try:
            filtered = filter_by_bbox(seeds, self.triage.bbox,
                                      self.source.intrinsics, self.params)
        except EmptyAfterFilter:
            return self._suspend(SuspensionCategory.EMPTY_AFTER_FILTER,
                                 _EMPTY_FILTER_MESSAGE)
        self.filtered_seeds = filtered
        self._emit("filter_stage", {"kept": len(filtered)})

        # Partners come from every cloud point inside the detected range,
        # so contacts stay inside the box at full resolution.
        mask = bbox_depth_mask(cloud.points, self.triage.bbox,
                               self.source.intrinsics,
                               self.params.depth_cluster_gap)
        partner_cloud = PointCloud(cloud.points[mask])
        partner_normals = full_normals[mask]
        try:
            raw = propose_orientations(filtered, partner_cloud, self.params,
                                       cloud_normals=partner_normals)
        except NoCandidates:
            return self._suspend(SuspensionCategory.NO_CANDIDATES,
                                 _NO_CANDIDATES_MESSAGE)
        self._emit("orientation_stage", {"candidates": len(raw)})

        self.candidates = refine(raw, cloud, self.params)
        self._emit("refine_stage", {"survivors": len(self.candidates)})
        if not self.candidates:
            return self._suspend(SuspensionCategory.NO_CANDIDATES,
                                 _NO_CANDIDATES_MESSAGE)

        self.selected = select_best(self.candidates)
        self.phase = Phase.CANDIDATES_READY
        self._emit("candidates_ready",
                   {"count": len(self.candidates),
                    "selected": self.selected.to_dict()})

        if self.auto_confirm:
            return self._execute()
        self.phase = Phase.AWAITING_CONFIRM
        self._emit("awaiting_confirm", {"selected": self.selected.to_dict()})
        self.outcome = SessionOutcome.grasp(self.selected, "not-executed")
        return self.outcome

    def _execute(self) -> SessionOutcome:
        result = "not-executed"
        if self.executor is not None:
            success = bool(self.executor(self.source.scene, self.selected))
            result = "success" if success else "failure"
        self.phase = Phase.EXECUTED
        self.outcome = SessionOutcome.grasp(self.selected, result)
        self._emit("executed", {"result": result,
                                "candidate": self.selected.to_dict()})
        return self.outcome

    def confirm(self) -> SessionOutcome:
        if self.phase != Phase.AWAITING_CONFIRM:
            raise WrongPhase(f"confirm() requires awaiting_confirm, "
                             f"not {self.phase}")
        return self._execute()

    def abort(self) -> SessionOutcome:
        if self.phase in Phase.TERMINAL:
            raise WrongPhase(f"abort() not allowed in terminal phase "
                             f"{self.phase}")
        return self._suspend(SuspensionCategory.USER_ABORT,
                             "Task aborted by the operator.")

    # -- views ----------------------------------------------------------------

    def candidate_summaries(self) -> List[dict]:
        """Per-candidate 2D contact segments for console display."""
        k = self.source.intrinsics
        out = []
        for i, c in enumerate(self.candidates):
            seg = []
            for p in (c.contact_a, c.contact_b):
                seg.append([k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy])
            out.append({"id": i, "score": c.score, "width": c.width,
                        "segment": seg,
                        "selected": self.selected is not None
                        and c is self.selected})
        return out

    def state_view(self) -> dict:
        """Full session view without internal cloud data."""
        return {
            "sessionId": self.id,
            "phase": self.phase,
            "instruction": self.instruction.text if self.instruction else None,
            "triage": self.triage.to_dict() if self.triage else None,
            "candidates": self.candidate_summaries(),
            "selected": self.selected.to_dict() if self.selected else None,
            "outcome": self.outcome.to_dict() if self.outcome else None,
            "feedback": (self.outcome.message
                         if self.outcome and self.outcome.kind == "suspended"
                         else None),
        }


def run_session(instruction: Instruction, source, detector,
                params: Optional[ProposerParams] = None,
                auto_confirm: bool = True,
                executor: Optional[Callable] = None,
                transcript_writer: Optional[TranscriptWriter] = None,
                session_id: Optional[str] = None):
    """One-shot convenience: build a session, run it, return it with its
    outcome."""
    session = Session(source, detector, params=params, executor=executor,
                      auto_confirm=auto_confirm,
                      transcript_writer=transcript_writer,
                      session_id=session_id)
    outcome = session.run(instruction)
    return outcome, session


def outcome_from_transcript(events: Sequence[TranscriptEvent]) -> SessionOutcome:
    """Replay a transcript into the outcome it recorded."""
    for ev in reversed(list(events)):
        if ev.event == "suspended":
            return SessionOutcome.suspended(ev.payload["category"],
                                            ev.payload["message"])
        if ev.event == "executed":
            return SessionOutcome.grasp(
                GraspCandidate.from_dict(ev.payload["candidate"]),
                ev.payload["result"])
        if ev.event == "awaiting_confirm":
            return SessionOutcome.grasp(
                GraspCandidate.from_dict(ev.payload["selected"]),
                "not-executed")
    raise ValueError("transcript carries no terminal event")
