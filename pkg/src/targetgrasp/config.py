"""Service and CLI configuration: JSON file to validated settings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from .detect import BOX_TOKEN_PATTERN, DEFAULT_NO_TARGET_PHRASES, RemoteEndpoint
from .errors import ConfigError
from .geometry import CameraIntrinsics, DEFAULT_INTRINSICS, GripperModel
from .proposer import ProposerParams

# Box-grammar profiles selectable by id in the endpoint configuration
BOX_GRAMMARS = {
    "grid1000": BOX_TOKEN_PATTERN,
}


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8080
    detector: str = "oracle"
    remote: Optional[RemoteEndpoint] = None
    proposer: ProposerParams = field(default_factory=ProposerParams)
    camera: CameraIntrinsics = DEFAULT_INTRINSICS
    scene_dir: Optional[str] = None
    corpus_dir: Optional[str] = None
    transcript_path: Optional[str] = None
    auto_confirm: bool = False
    mu: float = 0.5
    auth_token_env: Optional[str] = None   # shared-token header, off by default

    def __post_init__(self):
        if not (1 <= self.port <= 65535):
            raise ConfigError("port must be in [1, 65535]")
        if self.detector not in ("oracle", "remote"):
            raise ConfigError("detector must be 'oracle' or 'remote'")
        if self.detector == "remote" and self.remote is None:
            raise ConfigError("remote detector selected but no remote profile")


def _gripper_from(d: dict) -> GripperModel:
    try:
        return GripperModel(
            max_width=float(d.get("max_width", 0.08)),
            finger_depth=float(d.get("finger_depth", 0.04)),
            finger_thickness=float(d.get("finger_thickness", 0.01)),
            palm_clearance=float(d.get("palm_clearance", 0.02)))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"gripper: {e}")


def _proposer_from(d: dict, gripper: GripperModel) -> ProposerParams:
    defaults = ProposerParams()
    try:
        return ProposerParams(
            k_neighbors=int(d.get("k_neighbors", defaults.k_neighbors)),
            approach_bins=int(d.get("approach_bins", defaults.approach_bins)),
            antipodal_angle_tol=math.radians(float(
                d.get("antipodal_angle_tol_deg",
                      math.degrees(defaults.antipodal_angle_tol)))),
            depth_cluster_gap=(None if d.get("depth_cluster_gap") is None
                               and "depth_cluster_gap" in d
                               else float(d.get("depth_cluster_gap",
                                                defaults.depth_cluster_gap))),
            gripper=gripper,
            seed_limit=int(d.get("seed_limit", defaults.seed_limit)),
            min_pair_separation=float(d.get("min_pair_separation",
                                            defaults.min_pair_separation)),
            max_cloud_points=int(d.get("max_cloud_points",
                                       defaults.max_cloud_points)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"proposer: {e}")


def _camera_from(d: dict) -> CameraIntrinsics:
    try:
        return CameraIntrinsics(
            fx=float(d.get("fx", DEFAULT_INTRINSICS.fx)),
            fy=float(d.get("fy", DEFAULT_INTRINSICS.fy)),
            cx=float(d.get("cx", DEFAULT_INTRINSICS.cx)),
            cy=float(d.get("cy", DEFAULT_INTRINSICS.cy)),
            width=int(d.get("width", DEFAULT_INTRINSICS.width)),
            height=int(d.get("height", DEFAULT_INTRINSICS.height)))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"camera: {e}")


def _remote_from(d: dict) -> RemoteEndpoint:
    url = d.get("url")
    if not url:
        raise ConfigError("remote.url is required")
    grammar_id = d.get("box_grammar", "grid1000")
    pattern = BOX_GRAMMARS.get(grammar_id)
    if pattern is None:
        raise ConfigError(f"remote.box_grammar: unknown id {grammar_id!r}")
    phrases = d.get("no_target_phrases", list(DEFAULT_NO_TARGET_PHRASES))
    if not isinstance(phrases, list):
        raise ConfigError("remote.no_target_phrases must be a list")
    try:
        return RemoteEndpoint(
            url=str(url),
            auth_env=d.get("auth_env"),
            retries=int(d.get("retries", 2)),
            timeout=float(d.get("timeout", 10.0)),
            backoff_base=float(d.get("backoff_base", 0.05)),
            no_target_phrases=tuple(str(p) for p in phrases),
            box_pattern=pattern)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"remote: {e}")


def config_from_dict(d: dict) -> ServiceConfig:
    if not isinstance(d, dict):
        raise ConfigError("config root must be an object")
    gripper = _gripper_from(d.get("gripper", {}))
    remote = _remote_from(d["remote"]) if "remote" in d else None
    try:
        return ServiceConfig(
            port=int(d.get("port", 8080)),
            detector=str(d.get("detector", "oracle")),
            remote=remote,
            proposer=_proposer_from(d.get("proposer", {}), gripper),
            camera=_camera_from(d.get("camera", {})),
            scene_dir=d.get("scene_dir"),
            corpus_dir=d.get("corpus_dir"),
            transcript_path=d.get("transcript_path"),
            auto_confirm=bool(d.get("auto_confirm", False)),
            mu=float(d.get("mu", 0.5)),
            auth_token_env=d.get("auth_token_env"))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))


def load_config(path) -> ServiceConfig:
    try:
        raw = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    return config_from_dict(data)
