"""Simulated grasp-success oracle and the six-dimension suite harness.

Success is judged by an antipodal friction-cone test against analytic
object surfaces: both contacts on one object, contact forces inside the
friction cone, width within the gripper limit.  The harness replays
instruction corpora through full pipeline sessions and aggregates
triage / target / grasp agreement per dimension.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set

import numpy as np

from .detect import Instruction, OracleDetector, Triage
from .errors import CorpusNotFound
from .geometry import DEFAULT_GRIPPER, GraspCandidate, Point3
from .pipeline import PROPOSER_EVENTS, SessionOutcome, SimulatedSource, run_session
from .proposer import ProposerParams
from .scene import Scene, build_scene

DIMENSIONS = ("common", "vague", "direction", "complex", "erroneous",
              "irrelevant")
TARGETED_DIMENSIONS = ("common", "vague", "direction", "complex")

DEFAULT_MU = 0.5
CONTACT_SURFACE_TOL = 0.003


# ---------------------------------------------------------------------------
# Grasp-success oracle
# ---------------------------------------------------------------------------

def contact_owners(scene: Scene, point: Point3,
                   tol: float = CONTACT_SURFACE_TOL) -> Set[int]:
    """Ids of objects whose analytic surface passes within tol of point."""
    p = point.to_array()
    owners = set()
    for obj in scene.objects:
        local = obj.pose.inverse().apply_array(p[None, :])[0]
        if abs(obj.shape.signed_distance(local)) <= tol:
            owners.add(obj.id)
    return owners


def grasp_success(scene: Scene, grasp: GraspCandidate, mu: float = DEFAULT_MU,
                  max_width: float = DEFAULT_GRIPPER.max_width,
                  surface_tol: float = CONTACT_SURFACE_TOL) -> bool:
    """Antipodal force-closure check for a grasp on a simulated scene.

    True iff both contacts lie on the same object's surface (within
    surface_tol), each contact's inward normal stays within atan(mu) of
    the closing line, and the jaw width is feasible.
    """
    if mu <= 0:
        raise ValueError("friction coefficient must be positive")
    if grasp.width > max_width:
        return False
    a = grasp.contact_a.to_array()
    b = grasp.contact_b.to_array()
    gap = np.linalg.norm(b - a)
    if gap < 1e-9:
        return False
    u = (b - a) / gap
    cos_limit = 1.0 / math.sqrt(1.0 + mu * mu)   # cos(atan(mu))

    shared = contact_owners(scene, grasp.contact_a, surface_tol) \
        & contact_owners(scene, grasp.contact_b, surface_tol)
    for oid in sorted(shared):
        obj = scene.object_by_id(oid)
        inv = obj.pose.inverse()
        la = inv.apply_array(a[None, :])[0]
        lb = inv.apply_array(b[None, :])[0]
        na = obj.pose.rotation @ obj.shape.outward_normal(la)
        nb = obj.pose.rotation @ obj.shape.outward_normal(lb)
        # Force at A pushes along +u, at B along -u; both must stay
        # inside the friction cone around the inward surface normal.
        if (-na) @ u >= cos_limit - 1e-12 and (-nb) @ (-u) >= cos_limit - 1e-12:
            return True
    return False


def make_executor(mu: float = DEFAULT_MU,
                  max_width: float = DEFAULT_GRIPPER.max_width):
    """Executor callable for sessions: runs the grasp oracle."""
    def execute(scene, candidate):
        if scene is None:
            return False
        return grasp_success(scene, candidate, mu=mu, max_width=max_width)
    return execute


# ---------------------------------------------------------------------------
# Suite cases and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteCase:
    dimension: str
    instruction: str
    scene_spec: dict
    expected_category: str
    expected_object_id: Optional[int] = None

    def __post_init__(self):
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if self.expected_category not in (Triage.TARGET, Triage.NO_TARGET,
                                          Triage.IRRELEVANT):
            raise ValueError("bad expected category")
        if self.expected_category != Triage.TARGET \
                and self.expected_object_id is not None:
            raise ValueError("non-target cases carry no expected object id")

    def to_dict(self) -> dict:
        d = {"dimension": self.dimension, "instruction": self.instruction,
             "scene": self.scene_spec,
             "expected_category": self.expected_category}
        if self.expected_object_id is not None:
            d["expected_object_id"] = self.expected_object_id
        return d

    @staticmethod
    def from_dict(d: dict) -> "SuiteCase":
        return SuiteCase(dimension=d["dimension"],
                         instruction=d["instruction"],
                         scene_spec=d["scene"],
                         expected_category=d["expected_category"],
                         expected_object_id=d.get("expected_object_id"))


def save_corpus(cases: Sequence[SuiteCase], path) -> None:
    with open(path, "w") as fh:
        json.dump([c.to_dict() for c in cases], fh, indent=2, sort_keys=True)


def load_corpus(path) -> List[SuiteCase]:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise CorpusNotFound(f"corpus file not found: {path}")
    return [SuiteCase.from_dict(d) for d in raw]


@dataclass
class SuiteReport:
    dimension: str
    records: List[dict]

    @property
    def aggregates(self) -> dict:
        return compute_aggregates(self.dimension, self.records)

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "records": self.records,
                "aggregates": self.aggregates}


def compute_aggregates(dimension: str, records: Sequence[dict]) -> dict:
    n = len(records)
    triage_ok = sum(1 for r in records if r["triage_correct"])
    agg = {
        "cases": n,
        "triage_accuracy": triage_ok / n if n else 0.0,
        "proposer_event_violations": sum(
            1 for r in records
            if r["expected_category"] != Triage.TARGET
            and r["proposer_events"] > 0),
        "grasps_executed": sum(1 for r in records if r["grasp_executed"]),
    }
    if dimension in TARGETED_DIMENSIONS:
        target_ok = sum(1 for r in records if r.get("target_correct"))
        success = sum(1 for r in records if r.get("grasp_success"))
        agg["target_accuracy"] = target_ok / n if n else 0.0
        agg["grasp_success_rate"] = success / n if n else 0.0
        agg["contacts_in_bbox_rate"] = (
            sum(1 for r in records if r.get("contacts_in_bbox")) / n
            if n else 0.0)
        agg["seeds_in_bbox_rate"] = (
            sum(1 for r in records if r.get("seeds_in_bbox")) / n
            if n else 0.0)
    return agg


def _contacts_within_bbox(session, tol_px: float = 1.0) -> Optional[bool]:
    """Do both selected contacts project inside the triage box (within
    tol_px of its edges)?  None when no grasp was selected."""
    if session.selected is None or session.triage is None \
            or session.triage.bbox is None:
        return None
    bbox = session.triage.bbox
    k = session.source.intrinsics
    for p in (session.selected.contact_a, session.selected.contact_b):
        u = k.fx * p.x / p.z + k.cx
        v = k.fy * p.y / p.z + k.cy
        if not (bbox.x1 - tol_px <= u < bbox.x2 + tol_px
                and bbox.y1 - tol_px <= v < bbox.y2 + tol_px):
            return False
    return True


def _seeds_within_bbox(session) -> Optional[bool]:
    """Do all filter-stage survivors project strictly inside the box?"""
    if not session.filtered_seeds or session.triage is None \
            or session.triage.bbox is None:
        return None
    bbox = session.triage.bbox
    k = session.source.intrinsics
    for s in session.filtered_seeds:
        x, y, z = s.point
        if not bbox.contains(k.fx * x / z + k.cx, k.fy * y / z + k.cy):
            return False
    return True


def run_case(case: SuiteCase, detector=None,
             params: Optional[ProposerParams] = None,
             mu: float = DEFAULT_MU, overlay_path=None) -> dict:
    """Execute one case with auto-confirm and record agreement facts."""
    detector = detector or OracleDetector()
    params = params or ProposerParams()
    scene = build_scene(case.scene_spec)
    source = SimulatedSource(scene, spec=case.scene_spec)
    outcome, session = run_session(
        Instruction(case.instruction), source, detector, params=params,
        auto_confirm=True, executor=make_executor(mu, params.gripper.max_width))
    if overlay_path is not None:
        from .scene import save_png
        from .service import render_overlay
        save_png(render_overlay(session), overlay_path)

    triage_category = session.triage.category if session.triage else "error"
    record = {
        "dimension": case.dimension,
        "instruction": case.instruction,
        "expected_category": case.expected_category,
        "triage_category": triage_category,
        "triage_correct": triage_category == case.expected_category,
        "outcome_kind": outcome.kind,
        "suspension_category": outcome.category,
        "suspension_message": outcome.message,
        "proposer_events": sum(1 for e in session.transcript
                               if e.event in PROPOSER_EVENTS),
        "grasp_executed": outcome.kind == SessionOutcome.GRASP
        and outcome.execution_result != "not-executed",
    }
    if case.expected_category == Triage.TARGET:
        target_correct = False
        success = False
        if outcome.kind == SessionOutcome.GRASP and case.expected_object_id:
            owners_a = contact_owners(scene, outcome.candidate.contact_a)
            owners_b = contact_owners(scene, outcome.candidate.contact_b)
            target_correct = (case.expected_object_id in owners_a
                              and case.expected_object_id in owners_b)
            success = outcome.execution_result == "success"
        record["target_correct"] = target_correct
        record["grasp_success"] = success
        record["contacts_in_bbox"] = _contacts_within_bbox(session)
        record["seeds_in_bbox"] = _seeds_within_bbox(session)
    return record


def run_suite(dimension: str, corpus: Optional[Sequence[SuiteCase]] = None,
              detector=None, params: Optional[ProposerParams] = None,
              mu: float = DEFAULT_MU, overlay_dir=None) -> SuiteReport:
    """Run one dimension's corpus through full sessions."""
    if dimension not in DIMENSIONS:
        raise CorpusNotFound(f"unknown suite dimension {dimension!r}")
    if corpus is None:
        from .corpora import built_in_corpus
        corpus = built_in_corpus(dimension)
    bad = [c for c in corpus if c.dimension != dimension]
    if bad:
        raise CorpusNotFound(f"corpus mixes dimensions: {bad[0].dimension}")
    records = []
    for i, case in enumerate(corpus):
        overlay_path = None
        if overlay_dir is not None:
            from pathlib import Path
            overlay_path = Path(overlay_dir) / f"{dimension}_{i:03d}.png"
        records.append(run_case(case, detector=detector, params=params,
                                mu=mu, overlay_path=overlay_path))
    return SuiteReport(dimension=dimension, records=records)


def report_to_json(reports: Sequence[SuiteReport]) -> str:
    """Deterministic JSON document (no timestamps) over suite reports."""
    doc = {"suites": {r.dimension: r.to_dict() for r in reports}}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_summary_table(reports: Sequence[SuiteReport]) -> str:
    lines = [f"{'dimension':<12}{'cases':>6}{'triage':>8}{'target':>8}"
             f"{'grasp':>8}{'suspended-ok':>14}"]
    for r in reports:
        agg = r.aggregates
        triage = f"{agg['triage_accuracy']:.0%}"
        target = (f"{agg['target_accuracy']:.0%}"
                  if "target_accuracy" in agg else "-")
        grasp = (f"{agg['grasp_success_rate']:.0%}"
                 if "grasp_success_rate" in agg else "-")
        suspended_ok = ("yes" if agg["proposer_event_violations"] == 0
                        else f"{agg['proposer_event_violations']} violations")
        lines.append(f"{r.dimension:<12}{agg['cases']:>6}{triage:>8}"
                     f"{target:>8}{grasp:>8}{suspended_ok:>14}")
    return "\n".join(lines) + "\n"
