"""Exception types shared across the grasping pipeline."""


class TargetGraspError(Exception):
    """Base class for all pipeline errors."""


class NonPositiveDepth(TargetGraspError):
    """Projection or deprojection requested for a point at z <= 0."""


class CloudTooSmall(TargetGraspError):
    """Point cloud has fewer points than the operation needs."""


class MalformedPly(TargetGraspError):
    """PLY file is not ASCII or lacks float x/y/z vertex properties."""


class EmptyScene(TargetGraspError):
    """Rendering produced no visible surface points."""


class UnknownObject(TargetGraspError):
    """Object id not present in the scene."""


class NotVisible(TargetGraspError):
    """Object is entirely occluded from the scene camera."""


class MalformedSpec(TargetGraspError):
    """Scene description failed validation; message carries the field path."""


class EmptyAfterFilter(TargetGraspError):
    """No seed survived the bounding-box filter stage."""


class NoCandidates(TargetGraspError):
    """No grasp candidate is available for selection."""


class MalformedBox(TargetGraspError):
    """Model response contains a box token with invalid coordinates."""


class BackendUnavailable(TargetGraspError):
    """Remote detector endpoint unreachable after retries."""


class WrongPhase(TargetGraspError):
    """Session operation invoked in a phase that does not allow it."""


class CorpusNotFound(TargetGraspError):
    """Requested suite corpus does not exist."""


class ConfigError(TargetGraspError):
    """Service or CLI configuration is invalid."""
