"""Instruction triage: decide whether an instruction names a graspable
target, names an absent one, or is unrelated to grasping.

Two interchangeable backends implement the same contract: a deterministic
oracle that resolves referents over simulator metadata, and a wire client
for a remote vision-language model steered by preloaded prompts.
"""

from __future__ import annotations

import base64
import logging
import math
import re
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import httpx
import numpy as np

from .errors import BackendUnavailable, MalformedBox, NotVisible
from .geometry import BBox2D, CameraIntrinsics
from .scene import Scene, ground_truth_bbox, image_to_png_bytes

logger = logging.getLogger(__name__)

MAX_INSTRUCTION_LENGTH = 4096


@dataclass(frozen=True)
class Instruction:
    text: str

    def __post_init__(self):
        stripped = self.text.strip()
        if not stripped:
            raise ValueError("instruction must be non-empty after trimming")
        if len(self.text) > MAX_INSTRUCTION_LENGTH:
            raise ValueError("instruction exceeds 4096 characters")
        object.__setattr__(self, "text", stripped)


@dataclass(frozen=True)
class Triage:
    """Exactly one of: a located target, a missing referent, or off-task.

    Target carries a bbox and label; the other two carry only a message
    (the box is deliberately suppressed for them).
    """

    category: str                       # "target" | "no_target" | "irrelevant"
    bbox: Optional[BBox2D] = None
    label: Optional[str] = None
    message: Optional[str] = None

    TARGET = "target"
    NO_TARGET = "no_target"
    IRRELEVANT = "irrelevant"

    def __post_init__(self):
        if self.category == self.TARGET:
            if self.bbox is None or not self.label:
                raise ValueError("target triage needs a bbox and a label")
            if self.message is not None:
                raise ValueError("target triage carries no message")
        elif self.category in (self.NO_TARGET, self.IRRELEVANT):
            if not self.message:
                raise ValueError(f"{self.category} triage needs a message")
            if self.bbox is not None:
                raise ValueError("suppressed triage never carries a bbox")
        else:
            raise ValueError(f"unknown triage category {self.category!r}")

    @staticmethod
    def target(bbox: BBox2D, label: str) -> "Triage":
        return Triage(Triage.TARGET, bbox=bbox, label=label)

    @staticmethod
    def no_target(message: str) -> "Triage":
        return Triage(Triage.NO_TARGET, message=message)

    @staticmethod
    def irrelevant(message: str) -> "Triage":
        return Triage(Triage.IRRELEVANT, message=message)

    def to_dict(self) -> dict:
        d = {"category": self.category}
        if self.bbox is not None:
            d["bbox"] = list(self.bbox.as_tuple())
        if self.label is not None:
            d["label"] = self.label
        if self.message is not None:
            d["message"] = self.message
        return d


@dataclass(frozen=True)
class SceneView:
    """What a detector may look at: the raster, intrinsics, and (oracle
    backend only) the simulator scene metadata."""

    image: np.ndarray
    intrinsics: CameraIntrinsics
    scene: Optional[Scene] = None


# ---------------------------------------------------------------------------
# Preloaded prompts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PromptSet:
    system_preamble: str
    task_rules: Tuple[str, ...]
    box_grammar: str

    def __post_init__(self):
        if not self.task_rules:
            raise ValueError("task_rules must be non-empty")
        re.compile(self.box_grammar)  # must be parseable


BOX_TOKEN_PATTERN = r"<box>\((\d+),(\d+)\),\((\d+),(\d+)\)</box>"
REF_TOKEN_PATTERN = r"<ref>(.*?)</ref>"

DEFAULT_NO_TARGET_PHRASES = (
    "there is no",
    "no such object",
    "not in the workspace",
    "not on the workspace",
    "cannot find",
    "can't find",
    "no target object",
)


def default_prompt_set() -> PromptSet:
    return PromptSet(
        system_preamble=(
            "You operate a desk robot arm with a two-finger gripper. "
            "You see one workspace image per request and receive one human "
            "instruction."),
        task_rules=(
            "Classify the instruction into exactly one category: "
            "(1) a grasp request whose target is visible in the image, "
            "(2) a grasp request whose target is absent from the workspace, "
            "(3) anything unrelated to grasping.",
            "For category 1, reply with the target reference and exactly one "
            "box token <box>(x1,y1),(x2,y2)</box>; coordinates are integers "
            "normalized to a 0-999 grid over the image.",
            "For category 2, never emit a box token; reply starting with "
            "'There is no' and name the missing object.",
            "For category 3, never emit a box token; answer the human "
            "briefly and mention that you handle grasping requests.",
        ),
        box_grammar=BOX_TOKEN_PATTERN,
    )


def build_prompt_messages(prompts: PromptSet, instruction: Instruction) -> List[dict]:
    """Deterministic message list: preamble, rules, image slot, instruction."""
    messages = [{"role": "system", "content": prompts.system_preamble}]
    for rule in prompts.task_rules:
        messages.append({"role": "system", "content": rule})
    messages.append({"role": "user", "content": "<image>"})
    messages.append({"role": "user", "content": instruction.text})
    return messages


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------

def parse_vlm_response(raw: str, image_w: int, image_h: int,
                       no_target_phrases: Sequence[str] = DEFAULT_NO_TARGET_PHRASES,
                       box_pattern: str = BOX_TOKEN_PATTERN) -> Triage:
    """Map raw model text to a Triage.

    A box token wins; otherwise configured no-target phrases; otherwise
    the reply is treated as off-task conversation.
    """
    if not raw:
        raise ValueError("raw response must be non-empty")
    matches = list(re.finditer(box_pattern, raw))
    if matches:
        if len(matches) > 1:
            logger.info("response carried %d box tokens; using the first",
                        len(matches))
        m = matches[0]
        x1, y1, x2, y2 = (int(g) for g in m.groups())
        for v in (x1, y1, x2, y2):
            if not (0 <= v < 1000):
                raise MalformedBox(f"box coordinate {v} outside [0, 1000)")
        if x1 >= x2 or y1 >= y2:
            raise MalformedBox("box corners are inverted")
        bbox = BBox2D(x1 / 1000 * image_w, y1 / 1000 * image_h,
                      x2 / 1000 * image_w, y2 / 1000 * image_h)
        refs = [r for r in re.finditer(REF_TOKEN_PATTERN, raw)
                if r.start() < m.start()]
        label = refs[-1].group(1).strip() if refs else "target"
        return Triage.target(bbox, label or "target")
    lowered = raw.lower()
    if any(p in lowered for p in no_target_phrases):
        return Triage.no_target(raw)
    return Triage.irrelevant(raw)


# ---------------------------------------------------------------------------
# Remote wire client
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RemoteEndpoint:
    url: str
    auth_env: Optional[str] = None
    retries: int = 2
    timeout: float = 10.0
    backoff_base: float = 0.05
    no_target_phrases: Tuple[str, ...] = DEFAULT_NO_TARGET_PHRASES
    box_pattern: str = BOX_TOKEN_PATTERN


def remote_triage(endpoint: RemoteEndpoint, prompts: PromptSet,
                  instruction: Instruction, image: np.ndarray) -> Triage:
    """POST the prompt bundle and image to the model endpoint and parse.

    Transient failures (transport errors, 5xx) are retried with
    exponential backoff up to endpoint.retries extra attempts.
    """
    import os

    body = {
        "messages": build_prompt_messages(prompts, instruction),
        "image_png_b64": base64.b64encode(image_to_png_bytes(image)).decode(),
    }
    headers = {}
    if endpoint.auth_env:
        token = os.environ.get(endpoint.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"

    last_error: Optional[Exception] = None
    for attempt in range(endpoint.retries + 1):
        if attempt:
            time.sleep(endpoint.backoff_base * 2 ** (attempt - 1))
        try:
            resp = httpx.post(endpoint.url, json=body, headers=headers,
                              timeout=endpoint.timeout)
        except httpx.HTTPError as e:
            last_error = e
            continue
        if resp.status_code >= 500:
            last_error = RuntimeError(f"server returned {resp.status_code}")
            continue
        if resp.status_code != 200:
            raise BackendUnavailable(
                f"endpoint rejected request: HTTP {resp.status_code}")
        text = resp.json().get("text", "")
        if not text:
            raise BackendUnavailable("endpoint returned an empty response")
        h, w = image.shape[:2]
        return parse_vlm_response(text, w, h,
                                  no_target_phrases=endpoint.no_target_phrases,
                                  box_pattern=endpoint.box_pattern)
    raise BackendUnavailable(f"endpoint unreachable after "
                             f"{endpoint.retries + 1} attempts: {last_error}")


# ---------------------------------------------------------------------------
# Deterministic oracle resolver over simulator metadata
# ---------------------------------------------------------------------------

GRASP_VERBS = ("grasp", "give", "get", "pick", "take", "fetch", "hand",
               "pass", "bring", "grab", "lift", "retrieve")

GENERIC_NOUNS = ("object", "item", "thing", "one", "something", "anything")

COLOR_WORDS = ("red", "green", "blue", "yellow", "black", "white", "orange",
               "purple", "pink", "gray", "grey", "brown")

# Capability cues: instruction phrase -> required capability tag
CAPABILITY_PHRASES = (
    ("hold water", "hold-water"),
    ("contain water", "hold-water"),
    ("drink", "hold-water"),
    ("write", "writable"),
    ("writing", "writable"),
    ("draw with", "writable"),
)

SUPERLATIVES = ("longest", "largest", "biggest", "smallest", "tallest")

# Common desk/household nouns the resolver recognizes even when the scene
# lacks them, so absent referents are reported instead of guessed.  The
# modal "can" is deliberately not listed.
OBJECT_VOCABULARY = (
    "mug", "cup", "glass", "bottle", "bowl", "plate",
    "pen", "pencil", "marker", "eraser", "ruler", "scissors", "stapler",
    "tape", "notebook", "book", "phone", "remote", "keyboard", "mouse",
    "apple", "orange", "banana", "lemon", "ball", "box", "block", "toy",
    "spoon", "fork", "knife", "screwdriver", "hammer", "wrench", "brush",
)

_IRRELEVANT_REPLIES = {
    "who are you": ("I am a desk grasping assistant: tell me which object "
                    "to pick up and I will plan the grasp."),
    "what can you do": ("I can locate an object you describe on the desk "
                        "and grasp it with a two-finger gripper."),
}
_GENERIC_IRRELEVANT_REPLY = (
    "That does not look like a grasping request. Describe an object on the "
    "desk and I will pick it up.")


def _tokenize(text: str) -> List[str]:
    return re.findall(r"[a-z]+", text.lower())


def _phrase_in(phrase: str, text: str) -> bool:
    return re.search(rf"\b{re.escape(phrase.lower())}\b", text) is not None


def _max_dimension(shape) -> float:
    dims = getattr(shape, "dims", None)
    if dims is not None:
        return float(max(dims))
    radius = getattr(shape, "radius", 0.0)
    height = getattr(shape, "height", 0.0)
    return float(max(2 * radius, height))


def _volume(shape) -> float:
    dims = getattr(shape, "dims", None)
    if dims is not None:
        return float(np.prod(dims))
    r = getattr(shape, "radius", 0.0)
    h = getattr(shape, "height", None)
    if h is not None:
        return math.pi * r * r * h
    return 4.0 / 3.0 * math.pi * r ** 3


def _height(obj) -> float:
    shape = obj.shape
    dims = getattr(shape, "dims", None)
    if dims is not None:
        return float(dims[2])
    h = getattr(shape, "height", None)
    return float(h) if h is not None else 2 * float(shape.radius)


def _point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _no_target_message(descriptor: str) -> str:
    return (f"There is no {descriptor} in the workspace. "
            f"Please check the instruction or ask for another object.")


def oracle_resolve(instruction: Instruction, scene: Scene) -> Triage:
    """Ground an instruction against simulator metadata.

    Resolution order: grasp-intent check, then referent narrowing over
    names and synonyms, colors, capability tags, spatial relations, and
    superlatives.  Ties break toward the smallest object id.
    """
    text = instruction.text.lower()
    tokens = _tokenize(text)
    token_set = set(tokens)

    visible = []
    boxes = {}
    for obj in sorted(scene.objects, key=lambda o: o.id):
        try:
            boxes[obj.id] = ground_truth_bbox(scene, obj.id)
            visible.append(obj)
        except NotVisible:
            continue

    has_verb = any(v in token_set for v in GRASP_VERBS)
    mentioned_colors = [c for c in COLOR_WORDS if c in token_set]
    needed_caps = [tag for phrase, tag in CAPABILITY_PHRASES
                   if phrase in text]
    superlative = next((s for s in SUPERLATIVES if s in token_set), None)
    spatial = _spatial_cue(text)
    vocabulary_nouns = [n for n in OBJECT_VOCABULARY if _phrase_in(n, text)]
    generic_noun = any(n in token_set for n in GENERIC_NOUNS)
    name_matched = [o for o in visible
                    if _phrase_in(o.name.lower(), text)
                    or any(_phrase_in(s.lower(), text) for s in o.synonyms)]

    has_referent = bool(name_matched or vocabulary_nouns or generic_noun
                        or mentioned_colors or needed_caps or superlative
                        or spatial)
    if not has_verb or not has_referent:
        for cue, reply in _IRRELEVANT_REPLIES.items():
            if cue in text:
                return Triage.irrelevant(reply)
        return Triage.irrelevant(_GENERIC_IRRELEVANT_REPLY)

    # "between X and Y" resolves against two named anchors
    between = re.search(r"between (?:the |a |an )?([a-z]+) and (?:the |a |an )?([a-z]+)",
                        text)
    if between:
        anchors = []
        for name in between.groups():
            match = next((o for o in visible
                          if _phrase_in(name, o.name.lower())
                          or any(_phrase_in(name, s.lower()) for s in o.synonyms)),
                         None)
            anchors.append(match)
        if all(a is not None for a in anchors) and anchors[0] is not anchors[1]:
            a_center = boxes[anchors[0].id].center()
            b_center = boxes[anchors[1].id].center()
            others = [o for o in visible if o not in anchors]
            if not others:
                return Triage.no_target(_no_target_message(
                    f"object between the {anchors[0].name} and the {anchors[1].name}"))
            best = min(others, key=lambda o: (
                _point_segment_distance(boxes[o.id].center(), a_center, b_center),
                o.id))
            return Triage.target(boxes[best.id], best.name)
        missing = [n for n, a in zip(between.groups(), anchors) if a is None]
        if missing:
            return Triage.no_target(_no_target_message(missing[0]))

    candidates = list(visible)

    if name_matched:
        candidates = name_matched
    elif vocabulary_nouns:
        # The instruction names a known object kind that nothing here matches
        return Triage.no_target(_no_target_message(
            " ".join(mentioned_colors[:1] + [vocabulary_nouns[0]])))

    if mentioned_colors:
        colored = [o for o in candidates if o.color_label in mentioned_colors]
        if not colored:
            descriptor = f"{mentioned_colors[0]} " + (
                vocabulary_nouns[0] if vocabulary_nouns else "object")
            return Triage.no_target(_no_target_message(descriptor))
        candidates = colored

    if needed_caps:
        capable = [o for o in candidates
                   if all(tag in o.capabilities for tag in needed_caps)]
        if not capable:
            return Triage.no_target(_no_target_message(
                f"object that could {needed_caps[0].replace('-', ' ')}"))
        candidates = capable

    if spatial:
        k = scene.camera
        located = [o for o in candidates
                   if _in_region(boxes[o.id].center(), spatial, k.width, k.height)]
        if not located:
            return Triage.no_target(_no_target_message(
                f"matching object in the {spatial.replace('_', ' ')} of the scene"))
        candidates = located

    if superlative:
        if superlative == "longest":
            key = lambda o: _max_dimension(o.shape)
            candidates = _arg_extreme(candidates, key, largest=True)
        elif superlative in ("largest", "biggest"):
            candidates = _arg_extreme(candidates, lambda o: _volume(o.shape),
                                      largest=True)
        elif superlative == "smallest":
            candidates = _arg_extreme(candidates, lambda o: _volume(o.shape),
                                      largest=False)
        elif superlative == "tallest":
            candidates = _arg_extreme(candidates, _height, largest=True)

    if not candidates:
        return Triage.no_target(_no_target_message("matching object"))
    chosen = min(candidates, key=lambda o: o.id)
    return Triage.target(boxes[chosen.id], chosen.name)


def _arg_extreme(objects, key, largest: bool):
    if not objects:
        return objects
    values = [key(o) for o in objects]
    best = max(values) if largest else min(values)
    return [o for o, v in zip(objects, values) if abs(v - best) < 1e-12]


def _spatial_cue(text: str) -> Optional[str]:
    corners = (
        ("lower right", "lower_right"), ("bottom right", "lower_right"),
        ("lower left", "lower_left"), ("bottom left", "lower_left"),
        ("upper right", "upper_right"), ("top right", "upper_right"),
        ("upper left", "upper_left"), ("top left", "upper_left"),
    )
    for phrase, region in corners:
        if phrase in text:
            return region
    if re.search(r"\bleft\b", text):
        return "left"
    if re.search(r"\bright\b", text):
        return "right"
    if re.search(r"\b(middle|center)\b", text):
        return "center"
    return None


def _in_region(center: Tuple[float, float], region: str,
               width: int, height: int) -> bool:
    """Thirds for left/right/center, quadrants for corners."""
    u, v = center
    if region == "left":
        return u < width / 3
    if region == "right":
        return u > 2 * width / 3
    if region == "center":
        return width / 3 <= u <= 2 * width / 3
    horiz = u >= width / 2 if region.endswith("right") else u < width / 2
    vert = v >= height / 2 if region.startswith("lower") else v < height / 2
    return horiz and vert


# ---------------------------------------------------------------------------
# Detector backends
# ---------------------------------------------------------------------------

class OracleDetector:
    """Resolves triage deterministically from simulator ground truth."""

    name = "oracle"

    def triage(self, instruction: Instruction, view: SceneView) -> Triage:
        if view.scene is None:
            raise ValueError("oracle detector needs simulator scene metadata")
        return oracle_resolve(instruction, view.scene)


class RemoteDetector:
    """Delegates triage to a remote vision-language model endpoint."""

    name = "remote"

    def __init__(self, endpoint: RemoteEndpoint,
                 prompts: Optional[PromptSet] = None):
        self.endpoint = endpoint
        self.prompts = prompts or default_prompt_set()

    def triage(self, instruction: Instruction, view: SceneView) -> Triage:
        return remote_triage(self.endpoint, self.prompts, instruction,
                             view.image)
