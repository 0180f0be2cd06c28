"""Acceptance gate: one test per criterion, each printing a PASS line.

The six-dimension suite (and its determinism twin) run once per pytest
session through the real CLI; the remaining criteria are self-contained.
Run with `pytest tests/test_acceptance.py -v -s` to see the PASS lines.
"""

import itertools
import json
import math
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from targetgrasp.cli import main
from targetgrasp.detect import (
    Instruction,
    RemoteEndpoint,
    default_prompt_set,
    parse_vlm_response,
    remote_triage,
)
from targetgrasp.errors import BackendUnavailable, EmptyAfterFilter, MalformedBox
from targetgrasp.evaluation import grasp_success
from targetgrasp.geometry import (
    BBox2D,
    CameraIntrinsics,
    GraspCandidate,
    Point3,
    PointCloud,
    Pose,
    deproject,
    project,
    rotation_about_z,
)
from targetgrasp.proposer import ProposerParams, ScoredPoint, filter_by_bbox, select_best
from targetgrasp.scene import Box, Cylinder, Scene, SceneObject, Sphere

K = CameraIntrinsics(fx=615.0, fy=615.0, cx=320.0, cy=240.0, width=640, height=480)


def _pass(label: str) -> None:
    print(f"ACCEPTANCE PASS: {label}")


# ---------------------------------------------------------------------------
# Criterion: geometry round-trips (1e-9 relative, 1e4 samples, < 1 s)
# ---------------------------------------------------------------------------

def test_geometry_round_trips_within_1e9():
    rng = np.random.default_rng(12)
    start = time.perf_counter()

    pts = rng.uniform([-2, -2, 0.05], [2, 2, 5.0], size=(10_000, 3))
    u = K.fx * pts[:, 0] / pts[:, 2] + K.cx
    v = K.fy * pts[:, 1] / pts[:, 2] + K.cy
    back = np.stack([(u - K.cx) * pts[:, 2] / K.fx,
                     (v - K.cy) * pts[:, 2] / K.fy,
                     pts[:, 2]], axis=1)
    rel = np.abs(back - pts) / np.maximum(np.abs(pts), 1e-12)
    assert np.all(rel[np.abs(pts) > 1e-9] <= 1e-9)

    # Scalar API agrees on a sample of the same points
    for i in range(0, 10_000, 997):
        p = Point3.from_array(pts[i])
        uu, vv = project(p, K)
        q = deproject(uu, vv, p.z, K)
        assert np.allclose(q.to_array(), pts[i], rtol=1e-9, atol=1e-12)

    # Pose inverse identity on the same 1e4 points
    pose = Pose.from_rt(rotation_about_z(0.7), [0.05, -0.1, 0.2])
    round_tripped = pose.inverse().apply_array(pose.apply_array(pts))
    rel = np.abs(round_tripped - pts) / np.maximum(np.abs(pts), 1e-12)
    assert np.all(rel[np.abs(pts) > 1e-9] <= 1e-9)

    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _pass(f"geometry round-trips within 1e-9 on 1e4 samples in {elapsed:.3f}s")


# ---------------------------------------------------------------------------
# Criterion: filter oracle equivalence on 100 random cloud/bbox pairs
# ---------------------------------------------------------------------------

def test_filter_oracle_equivalence_100_pairs():
    rng = np.random.default_rng(77)
    params = ProposerParams(depth_cluster_gap=None)
    checked = 0
    for _ in range(100):
        pts = rng.uniform([-0.4, -0.3, 0.3], [0.4, 0.3, 2.0],
                          size=(rng.integers(20, 120), 3))
        seeds = [ScoredPoint(p, np.array([0.0, 0.0, -1.0]),
                             float(rng.uniform(0, 1))) for p in pts]
        x1 = rng.uniform(0, 560)
        y1 = rng.uniform(0, 420)
        bbox = BBox2D(x1, y1, x1 + rng.uniform(30, 80),
                      y1 + rng.uniform(30, 60))
        expected = [s for s in seeds
                    if bbox.contains(K.fx * s.point[0] / s.point[2] + K.cx,
                                     K.fy * s.point[1] / s.point[2] + K.cy)]
        try:
            got = filter_by_bbox(seeds, bbox, K, params)
        except EmptyAfterFilter:
            got = []
        assert got == expected
        checked += 1
    assert checked == 100
    _pass("filter equals naive project-and-test oracle on 100 random pairs")


# ---------------------------------------------------------------------------
# Criterion: selection argmax under permutation and positive scaling
# ---------------------------------------------------------------------------

def _candidate(score, x):
    closing = np.array([1.0, 0, 0])
    approach = np.array([0.0, 0, 1.0])
    rot = np.column_stack([closing, np.cross(approach, closing), approach])
    center = np.array([x, 0.0, 1.0])
    a = center - np.array([0.02, 0, 0])
    b = center + np.array([0.02, 0, 0])
    return GraspCandidate(pose=Pose(rot, Point3.from_array(center)),
                          width=0.04, score=score,
                          contact_a=Point3.from_array(a),
                          contact_b=Point3.from_array(b))


def test_selection_invariance():
    rng = np.random.default_rng(5)
    for trial in range(200):
        n = int(rng.integers(1, 7))
        cands = [_candidate(float(rng.uniform(0, 1)),
                            float(rng.uniform(-0.3, 0.3))) for _ in range(n)]
        chosen = select_best(cands)
        assert all(chosen.score >= c.score for c in cands)
        perms = (itertools.permutations(cands) if n <= 4 else
                 (rng.permutation(n) for _ in range(12)))
        for perm in perms:
            ordered = (list(perm) if isinstance(perm, tuple)
                       else [cands[int(i)] for i in perm])
            assert select_best(ordered) is chosen
        for lam in (0.1, 0.5, 0.93):
            scaled = [GraspCandidate(pose=c.pose, width=c.width,
                                     score=c.score * lam,
                                     contact_a=c.contact_a,
                                     contact_b=c.contact_b) for c in cands]
            assert (select_best(scaled).pose.translation
                    == chosen.pose.translation)
    _pass("selection is argmax, permutation-stable, scale-invariant")


# ---------------------------------------------------------------------------
# Criterion: six-dimension suites via the CLI, plus byte-identical reruns
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def suite_all_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("acceptance")
    paths = [tmp / "report_a.json", tmp / "report_b.json"]
    elapsed = []
    for path in paths:
        start = time.perf_counter()
        code = main(["suite", "--all", "--report", str(path)])
        elapsed.append(time.perf_counter() - start)
        assert code == 0
    return paths[0].read_bytes(), paths[1].read_bytes(), elapsed


def test_six_dimension_suites(suite_all_runs):
    raw, _, elapsed = suite_all_runs
    doc = json.loads(raw)
    suites = doc["suites"]
    assert set(suites) == {"common", "vague", "direction", "complex",
                           "erroneous", "irrelevant"}

    for dim in ("common", "vague", "direction", "complex"):
        agg = suites[dim]["aggregates"]
        assert agg["cases"] >= 20, dim
        assert agg["triage_accuracy"] == 1.0, dim
        assert agg["target_accuracy"] == 1.0, dim
        assert agg["grasp_success_rate"] >= 0.9, dim

    err = suites["erroneous"]
    assert err["aggregates"]["cases"] >= 20
    assert err["aggregates"]["triage_accuracy"] == 1.0
    assert err["aggregates"]["proposer_event_violations"] == 0
    assert err["aggregates"]["grasps_executed"] == 0
    for rec in err["records"]:
        assert rec["outcome_kind"] == "suspended"
        assert rec["suspension_category"] == "no_target"
        assert rec["proposer_events"] == 0

    irr = suites["irrelevant"]
    assert irr["aggregates"]["cases"] >= 20
    assert irr["aggregates"]["triage_accuracy"] == 1.0
    assert irr["aggregates"]["proposer_event_violations"] == 0
    for rec in irr["records"]:
        assert rec["outcome_kind"] == "suspended"
        assert rec["suspension_category"] == "irrelevant"
        assert rec["suspension_message"]

    assert elapsed[0] < 120.0
    _pass(f"six suites: 100% triage/target, grasp >= 90%, suspensions clean, "
          f"{elapsed[0]:.1f}s < 120s")


def test_filter_soundness_on_suite_runs(suite_all_runs):
    raw, _, _ = suite_all_runs
    suites = json.loads(raw)["suites"]
    for dim in ("common", "vague", "direction", "complex"):
        agg = suites[dim]["aggregates"]
        assert agg["seeds_in_bbox_rate"] == 1.0, dim
        assert agg["contacts_in_bbox_rate"] == 1.0, dim
    _pass("filter soundness: all surviving seeds and final contacts project "
          "inside the triage bbox on every suite run")


def test_suite_determinism_byte_identical(suite_all_runs):
    first, second, _ = suite_all_runs
    assert first == second
    _pass("two `suite --all` runs produce byte-identical reports")


# ---------------------------------------------------------------------------
# Criterion: grasp oracle properties on 1e3 randomized cases each
# ---------------------------------------------------------------------------

def _random_grasp_cases(n, seed):
    rng = np.random.default_rng(seed)
    cases = []
    while len(cases) < n:
        kind = rng.integers(3)
        if kind == 0:
            shape = Sphere(float(rng.uniform(0.02, 0.04)))
        elif kind == 1:
            shape = Cylinder(float(rng.uniform(0.02, 0.04)),
                             float(rng.uniform(0.05, 0.15)))
        else:
            shape = Box(*(float(d) for d in rng.uniform(0.03, 0.07, 3)))
        obj = SceneObject(
            id=1, name="thing", shape=shape,
            pose=Pose.from_rt(rotation_about_z(float(rng.uniform(0, 6.28))),
                              [float(rng.uniform(-0.1, 0.1)),
                               float(rng.uniform(-0.1, 0.1)),
                               float(rng.uniform(0.6, 1.0))]))
        scene = Scene(objects=[obj], table=None)

        def surface_point():
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            lo, hi = 0.0, 0.2
            for _ in range(45):
                mid = 0.5 * (lo + hi)
                if shape.signed_distance(mid * d) < 0:
                    lo = mid
                else:
                    hi = mid
            return obj.pose.apply_array((0.5 * (lo + hi) * d)[None, :])[0]

        a, b = surface_point(), surface_point()
        width = float(np.linalg.norm(b - a))
        if width < 2e-3:
            continue
        closing = (b - a) / width
        helper = np.zeros(3)
        helper[int(np.argmin(np.abs(closing)))] = 1.0
        approach = np.cross(closing, helper)
        approach /= np.linalg.norm(approach)
        rot = np.column_stack([closing, np.cross(approach, closing), approach])
        grasp = GraspCandidate(pose=Pose(rot, Point3.from_array(0.5 * (a + b))),
                               width=width, score=0.5,
                               contact_a=Point3.from_array(a),
                               contact_b=Point3.from_array(b))
        cases.append((scene, obj, grasp))
    return cases


def test_grasp_oracle_properties_1000_cases_each():
    swap_cases = _random_grasp_cases(1000, seed=21)
    for scene, _, grasp in swap_cases:
        swapped = GraspCandidate(pose=grasp.pose, width=grasp.width,
                                 score=grasp.score,
                                 contact_a=grasp.contact_b,
                                 contact_b=grasp.contact_a)
        assert grasp_success(scene, grasp, 0.5) == \
            grasp_success(scene, swapped, 0.5)

    rng = np.random.default_rng(22)
    for scene, obj, grasp in _random_grasp_cases(1000, seed=23):
        motion = Pose.from_rt(rotation_about_z(float(rng.uniform(0, 6.28))),
                              rng.uniform(-0.2, 0.2, 3))
        moved_scene = Scene(objects=[SceneObject(
            id=obj.id, name=obj.name, shape=obj.shape,
            pose=motion.compose(obj.pose))], table=None)
        moved = GraspCandidate(pose=motion.compose(grasp.pose),
                               width=grasp.width, score=grasp.score,
                               contact_a=motion.apply(grasp.contact_a),
                               contact_b=motion.apply(grasp.contact_b))
        assert grasp_success(scene, grasp, 0.5) == \
            grasp_success(moved_scene, moved, 0.5)

    mus = (0.15, 0.3, 0.5, 0.9, 1.4)
    for scene, _, grasp in _random_grasp_cases(1000, seed=25):
        results = [grasp_success(scene, grasp, mu) for mu in mus]
        assert results == sorted(results)

    _pass("grasp oracle: swap symmetry, rigid invariance, mu-monotonicity "
          "on 1000 randomized cases each")


# ---------------------------------------------------------------------------
# Criterion: remote adapter conformance against a local stub server
# ---------------------------------------------------------------------------

class _StubHandler(BaseHTTPRequestHandler):
    responses = []

    def do_POST(self):
        self.rfile.read(int(self.headers.get("Content-Length", 0)))
        status, text = (type(self).responses.pop(0)
                        if type(self).responses else (200, "ok"))
        payload = json.dumps({"text": text}).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


def test_remote_adapter_conformance():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    url = f"http://127.0.0.1:{server.server_port}"
    image = np.zeros((480, 640, 3), dtype=np.uint8)
    prompts = default_prompt_set()
    try:
        # Box token maps through the 0-999 grid to pixel coordinates
        triage = parse_vlm_response("<box>(100,100),(500,500)</box>", 640, 480)
        assert triage.bbox.as_tuple() == (64.0, 48.0, 320.0, 240.0)

        _StubHandler.responses = [(200, "<box>(100,100),(500,500)</box>")]
        endpoint = RemoteEndpoint(url=url, retries=0, backoff_base=0.0)
        triage = remote_triage(endpoint, prompts,
                               Instruction("Give me the mug."), image)
        assert triage.bbox.as_tuple() == (64.0, 48.0, 320.0, 240.0)

        with pytest.raises(MalformedBox):
            parse_vlm_response("<box>(500,500),(100,100)</box>", 640, 480)

        _StubHandler.responses = [(500, "e"), (500, "e"), (500, "e")]
        endpoint = RemoteEndpoint(url=url, retries=2, backoff_base=0.0)
        with pytest.raises(BackendUnavailable):
            remote_triage(endpoint, prompts,
                          Instruction("Give me the mug."), image)
    finally:
        server.shutdown()
    _pass("remote adapter: box mapping, MalformedBox on inversion, "
          "BackendUnavailable after 3x500 with retries=2")
