"""Target-oriented grasping pipeline with a simulated desk-scale bench.

A textual instruction is triaged (feasible / referent absent / off-task),
grounded to a 2D box, and turned into a 6-DoF parallel-jaw grasp through
seed scoring, box filtering, orientation generation, and refinement.
"""

from .detect import (
    Instruction,
    OracleDetector,
    PromptSet,
    RemoteDetector,
    RemoteEndpoint,
    SceneView,
    Triage,
    build_prompt_messages,
    default_prompt_set,
    oracle_resolve,
    parse_vlm_response,
    remote_triage,
)
from .evaluation import SuiteCase, SuiteReport, grasp_success, run_suite
from .geometry import (
    BBox2D,
    CameraIntrinsics,
    DEFAULT_GRIPPER,
    DEFAULT_INTRINSICS,
    GraspCandidate,
    GripperModel,
    Point3,
    PointCloud,
    Pose,
    deproject,
    pixel_in_bbox,
    project,
    project_points,
    transform_cloud,
)
from .pipeline import (
    FileSource,
    Phase,
    Session,
    SessionOutcome,
    SimulatedSource,
    SuspensionCategory,
    run_session,
)
from .ply import read_ply, write_ply
from .proposer import (
    ProposerParams,
    ScoredPoint,
    estimate_normals,
    filter_by_bbox,
    propose_orientations,
    refine,
    score_seeds,
    select_best,
)
from .scene import (
    Box,
    Cylinder,
    Scene,
    SceneObject,
    Sphere,
    build_scene,
    ground_truth_bbox,
    render_cloud,
    render_image,
)

__all__ = [
    "BBox2D", "Box", "CameraIntrinsics", "Cylinder", "DEFAULT_GRIPPER",
    "DEFAULT_INTRINSICS", "FileSource", "GraspCandidate", "GripperModel",
    "Instruction", "OracleDetector", "Phase", "Point3", "PointCloud", "Pose",
    "PromptSet", "ProposerParams", "RemoteDetector", "RemoteEndpoint",
    "Scene", "SceneObject", "SceneView", "ScoredPoint", "Session",
    "SessionOutcome", "SimulatedSource", "Sphere", "SuiteCase", "SuiteReport",
    "SuspensionCategory", "Triage", "build_prompt_messages", "build_scene",
    "default_prompt_set", "deproject", "estimate_normals", "filter_by_bbox",
    "grasp_success", "ground_truth_bbox", "oracle_resolve",
    "parse_vlm_response", "pixel_in_bbox", "project", "project_points",
    "propose_orientations", "read_ply", "refine", "remote_triage",
    "render_cloud", "render_image", "run_session", "run_suite", "score_seeds",
    "select_best", "transform_cloud", "write_ply",
]
