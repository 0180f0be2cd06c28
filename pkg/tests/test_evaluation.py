import json
import math

import numpy as np
import pytest

from targetgrasp.corpora import built_in_corpus
from targetgrasp.errors import CorpusNotFound
from targetgrasp.evaluation import (
    SuiteCase,
    compute_aggregates,
    contact_owners,
    grasp_success,
    load_corpus,
    report_summary_table,
    report_to_json,
    run_suite,
    save_corpus,
)
from targetgrasp.geometry import GraspCandidate, Point3, Pose, rotation_about_z
from targetgrasp.scene import Box, Cylinder, Scene, SceneObject, Sphere

import targetgrasp.geometry as geom


def _object(oid, shape, translation, rotation=None, name="thing"):
    rot = np.eye(3) if rotation is None else rotation
    return SceneObject(id=oid, name=name, shape=shape,
                       pose=Pose.from_rt(rot, translation))


def _grasp(a, b, score=0.8):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    width = float(np.linalg.norm(b - a))
    closing = (b - a) / width
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(closing)))] = 1.0
    approach = np.cross(closing, helper)
    approach /= np.linalg.norm(approach)
    y = np.cross(approach, closing)
    rot = np.column_stack([closing, y, approach])
    return GraspCandidate(pose=Pose(rot, Point3.from_array(0.5 * (a + b))),
                          width=width, score=score,
                          contact_a=Point3.from_array(a),
                          contact_b=Point3.from_array(b))


def test_opposite_box_faces_succeed():
    scene = Scene(objects=[_object(1, Box(0.04, 0.06, 0.05), [0, 0, 0.8])],
                  table=None)
    grasp = _grasp([-0.02, 0.0, 0.8], [0.02, 0.0, 0.8])
    assert grasp_success(scene, grasp, mu=0.5)


def test_adjacent_perpendicular_faces_fail():
    # Inward normals are 45 degrees off the closing line; atan(0.5) is 26.57
    scene = Scene(objects=[_object(1, Box(0.04, 0.04, 0.05), [0, 0, 0.8])],
                  table=None)
    a = np.array([-0.02, 0.01, 0.8])        # on the -x face
    b = np.array([-0.01, 0.02, 0.8])        # on the +y face
    grasp = _grasp(a, b)
    angle = math.degrees(math.acos(
        np.dot([1, 0, 0], (b - a) / np.linalg.norm(b - a))))
    assert angle > math.degrees(math.atan(0.5))
    assert not grasp_success(scene, grasp, mu=0.5)


def test_contacts_on_two_objects_fail():
    scene = Scene(objects=[
        _object(1, Sphere(0.02), [-0.03, 0, 0.8]),
        _object(2, Sphere(0.02), [0.03, 0, 0.8])],
        table=None)
    grasp = _grasp([-0.01, 0, 0.8], [0.01, 0, 0.8])
    assert not grasp_success(scene, grasp, mu=0.5)


def test_width_above_limit_fails():
    scene = Scene(objects=[_object(1, Box(0.12, 0.06, 0.05), [0, 0, 0.8])],
                  table=None)
    grasp = _grasp([-0.06, 0, 0.8], [0.06, 0, 0.8])
    assert not grasp_success(scene, grasp, mu=0.5, max_width=0.08)
    assert grasp_success(scene, grasp, mu=0.5, max_width=0.13)


def test_contact_owners_tolerance():
    scene = Scene(objects=[_object(1, Sphere(0.03), [0, 0, 0.8])], table=None)
    on = Point3(0.03, 0, 0.8)
    near = Point3(0.032, 0, 0.8)
    far = Point3(0.05, 0, 0.8)
    assert contact_owners(scene, on) == {1}
    assert contact_owners(scene, near) == {1}
    assert contact_owners(scene, far) == set()


def _random_cases(n, seed=0):
    """Random single-object scenes with surface contact pairs."""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n):
        kind = rng.integers(3)
        if kind == 0:
            shape = Sphere(float(rng.uniform(0.02, 0.04)))
        elif kind == 1:
            shape = Cylinder(float(rng.uniform(0.02, 0.04)),
                             float(rng.uniform(0.05, 0.15)))
        else:
            shape = Box(*(float(v) for v in rng.uniform(0.03, 0.07, 3)))
        yaw = float(rng.uniform(0, 2 * math.pi))
        center = [float(rng.uniform(-0.1, 0.1)),
                  float(rng.uniform(-0.1, 0.1)),
                  float(rng.uniform(0.6, 1.0))]
        obj = _object(1, shape, center, rotation_about_z(yaw))
        scene = Scene(objects=[obj], table=None)

        # Two random points on the analytic surface
        def surface_point():
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            lo, hi = 0.0, 0.2
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if shape.signed_distance(mid * d) < 0:
                    lo = mid
                else:
                    hi = mid
            local = 0.5 * (lo + hi) * d
            return obj.pose.apply_array(local[None, :])[0]

        a, b = surface_point(), surface_point()
        if np.linalg.norm(a - b) < 1e-3:
            continue
        cases.append((scene, obj, _grasp(a, b)))
    return cases


def test_grasp_oracle_contact_swap_symmetry():
    for scene, _, grasp in _random_cases(150, seed=1):
        swapped = GraspCandidate(pose=grasp.pose, width=grasp.width,
                                 score=grasp.score,
                                 contact_a=grasp.contact_b,
                                 contact_b=grasp.contact_a)
        for mu in (0.3, 0.5, 1.0):
            assert grasp_success(scene, grasp, mu) == \
                grasp_success(scene, swapped, mu)


def test_grasp_oracle_rigid_motion_invariance():
    rng = np.random.default_rng(2)
    for scene, obj, grasp in _random_cases(100, seed=3):
        angle = float(rng.uniform(0, 2 * math.pi))
        motion = Pose.from_rt(rotation_about_z(angle),
                              rng.uniform(-0.2, 0.2, 3))
        moved_obj = SceneObject(
            id=obj.id, name=obj.name, shape=obj.shape,
            pose=motion.compose(obj.pose))
        moved_scene = Scene(objects=[moved_obj], table=None)
        moved_grasp = GraspCandidate(
            pose=motion.compose(grasp.pose), width=grasp.width,
            score=grasp.score,
            contact_a=motion.apply(grasp.contact_a),
            contact_b=motion.apply(grasp.contact_b))
        assert grasp_success(scene, grasp, 0.5) == \
            grasp_success(moved_scene, moved_grasp, 0.5)


def test_grasp_oracle_mu_monotonicity():
    mus = (0.2, 0.35, 0.5, 0.8, 1.2)
    for scene, _, grasp in _random_cases(150, seed=4):
        results = [grasp_success(scene, grasp, mu) for mu in mus]
        # Once true, stays true as mu grows
        assert results == sorted(results)


def test_grasp_oracle_rejects_nonpositive_mu():
    scene = Scene(objects=[_object(1, Sphere(0.03), [0, 0, 0.8])], table=None)
    grasp = _grasp([-0.03, 0, 0.8], [0.03, 0, 0.8])
    with pytest.raises(ValueError):
        grasp_success(scene, grasp, mu=0.0)


# ---------------------------------------------------------------------------
# Suite harness
# ---------------------------------------------------------------------------

def test_suite_case_validation():
    spec = {"objects": []}
    with pytest.raises(ValueError):
        SuiteCase(dimension="nope", instruction="x", scene_spec=spec,
                  expected_category="target")
    with pytest.raises(ValueError):
        SuiteCase(dimension="erroneous", instruction="x", scene_spec=spec,
                  expected_category="no_target", expected_object_id=3)


def test_corpus_json_round_trip(tmp_path):
    cases = built_in_corpus("common")[:3]
    path = tmp_path / "corpus.json"
    save_corpus(cases, path)
    back = load_corpus(path)
    assert [c.to_dict() for c in back] == [c.to_dict() for c in cases]


def test_load_corpus_missing_file(tmp_path):
    with pytest.raises(CorpusNotFound):
        load_corpus(tmp_path / "absent.json")


def test_run_suite_unknown_dimension():
    with pytest.raises(CorpusNotFound):
        run_suite("sideways")


def test_run_suite_rejects_mixed_corpus():
    mixed = built_in_corpus("common")[:1] + built_in_corpus("erroneous")[:1]
    with pytest.raises(CorpusNotFound):
        run_suite("common", corpus=mixed)


def test_built_in_corpora_have_at_least_twenty_cases():
    for dim in ("common", "vague", "direction", "complex", "erroneous",
                "irrelevant"):
        cases = built_in_corpus(dim)
        assert len(cases) >= 20
        assert all(c.dimension == dim for c in cases)


def test_run_suite_smoke_and_aggregate_consistency():
    corpus = built_in_corpus("common")[:3]
    report = run_suite("common", corpus=corpus)
    assert len(report.records) == 3
    agg = report.aggregates
    assert agg == compute_aggregates("common", report.records)
    assert agg["cases"] == 3
    assert set(report.records[0]) >= {
        "dimension", "instruction", "expected_category", "triage_category",
        "triage_correct", "outcome_kind", "proposer_events", "grasp_executed"}


def test_suspension_suite_records_no_proposer_events():
    corpus = built_in_corpus("erroneous")[:3]
    report = run_suite("erroneous", corpus=corpus)
    assert all(r["proposer_events"] == 0 for r in report.records)
    assert all(not r["grasp_executed"] for r in report.records)
    assert report.aggregates["proposer_event_violations"] == 0


def test_report_json_is_deterministic_and_timestamp_free():
    corpus = built_in_corpus("irrelevant")[:2]
    r1 = run_suite("irrelevant", corpus=corpus)
    r2 = run_suite("irrelevant", corpus=corpus)
    j1, j2 = report_to_json([r1]), report_to_json([r2])
    assert j1 == j2
    assert "ts" not in json.loads(j1)["suites"]["irrelevant"]["records"][0]


def test_report_summary_table_readable():
    corpus = built_in_corpus("irrelevant")[:2]
    table = report_summary_table([run_suite("irrelevant", corpus=corpus)])
    assert "irrelevant" in table
    assert "dimension" in table.splitlines()[0]
