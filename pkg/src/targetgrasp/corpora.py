"""Shipped instruction corpora for the six suite dimensions.

Scenes are composed from a small catalog of desk objects at pre-verified
table slots so that each case has exactly one defensible referent, the
expected object is graspable by a parallel jaw, and spatial cues land in
the intended image regions.  Everything is deterministic.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

from .detect import Triage
from .errors import CorpusNotFound
from .evaluation import DIMENSIONS, SuiteCase

COLORS: Dict[str, Tuple[int, int, int]] = {
    "red": (200, 35, 35),
    "green": (40, 160, 60),
    "blue": (40, 70, 200),
    "yellow": (230, 200, 40),
    "black": (25, 25, 25),
    "white": (235, 235, 235),
    "orange": (240, 140, 30),
    "purple": (130, 50, 160),
    "brown": (120, 80, 50),
    "gray": (128, 128, 128),
    "pink": (240, 120, 160),
}

# name -> (shape spec, capabilities, synonyms, lying, default color)
CATALOG: Dict[str, dict] = {
    "mug": {"shape": {"type": "cylinder", "radius": 0.033, "height": 0.09},
            "capabilities": ["hold-water"], "synonyms": ["coffee mug"],
            "color": "blue"},
    "cup": {"shape": {"type": "cylinder", "radius": 0.030, "height": 0.08},
            "capabilities": ["hold-water"], "color": "white"},
    "glass": {"shape": {"type": "cylinder", "radius": 0.029, "height": 0.11},
              "capabilities": ["hold-water"], "color": "gray"},
    "bottle": {"shape": {"type": "cylinder", "radius": 0.028, "height": 0.17},
               "capabilities": ["hold-water"], "synonyms": ["water bottle"],
               "color": "green"},
    "apple": {"shape": {"type": "sphere", "radius": 0.034}, "color": "red"},
    "orange": {"shape": {"type": "sphere", "radius": 0.036}, "color": "orange"},
    "ball": {"shape": {"type": "sphere", "radius": 0.030}, "color": "yellow"},
    "pen": {"shape": {"type": "cylinder", "radius": 0.008, "height": 0.14},
            "capabilities": ["writable", "long"], "lying": True,
            "color": "black"},
    "pencil": {"shape": {"type": "cylinder", "radius": 0.007, "height": 0.16},
               "capabilities": ["writable", "long"], "lying": True,
               "color": "yellow"},
    "marker": {"shape": {"type": "cylinder", "radius": 0.010, "height": 0.12},
               "capabilities": ["writable", "long"], "lying": True,
               "color": "blue"},
    "banana": {"shape": {"type": "cylinder", "radius": 0.018, "height": 0.17},
               "capabilities": ["long"], "lying": True, "color": "yellow"},
    # Box-shaped items appear as distractors only
    "book": {"shape": {"type": "box", "dx": 0.17, "dy": 0.12, "dz": 0.025},
             "color": "brown"},
    "block": {"shape": {"type": "box", "dx": 0.05, "dy": 0.05, "dz": 0.05},
              "color": "green"},
    "stapler": {"shape": {"type": "box", "dx": 0.12, "dy": 0.04, "dz": 0.03},
                "color": "black"},
    "remote": {"shape": {"type": "box", "dx": 0.15, "dy": 0.045, "dz": 0.02},
               "color": "gray"},
    "notebook": {"shape": {"type": "box", "dx": 0.20, "dy": 0.14, "dz": 0.02},
                 "color": "purple"},
    "phone": {"shape": {"type": "box", "dx": 0.14, "dy": 0.07, "dz": 0.012},
              "color": "white"},
}

GRASPABLE = ("mug", "cup", "glass", "bottle", "apple", "orange", "ball",
             "pen", "pencil", "marker", "banana")
DISTRACTORS = ("book", "block", "stapler", "remote", "notebook", "phone")

# Table-frame slots whose projected bbox centers verifiably land in the
# intended image regions under the default rig.
SLOT_LEFT = (-0.20, 0.0)
SLOT_RIGHT = (0.20, 0.0)
SLOT_CENTER = (0.0, 0.0)
SLOT_LOWER_RIGHT = (0.15, -0.12)
SLOT_UPPER_RIGHT = (0.15, 0.12)
SLOT_LOWER_LEFT = (-0.15, -0.12)
SLOT_UPPER_LEFT = (-0.15, 0.12)
SCATTER = ((-0.20, 0.06), (0.02, -0.12), (0.20, 0.08), (-0.04, 0.14))


def _obj(oid: int, name: str, slot: Tuple[float, float],
         color: Optional[str] = None, yaw: float = 0.0) -> dict:
    entry = CATALOG[name]
    color_label = color or entry["color"]
    spec = {
        "id": oid,
        "name": name,
        "shape": dict(entry["shape"]),
        "color": {"label": color_label, "rgb": list(COLORS[color_label])},
        "capabilities": list(entry.get("capabilities", [])),
        "synonyms": list(entry.get("synonyms", [])),
        "pose": {"table": {"x": slot[0], "y": slot[1], "yaw_deg": yaw,
                           "lying": bool(entry.get("lying", False))}},
    }
    return spec


def _scene(case_index: int, placed: Sequence[Tuple[str, Tuple[float, float]]],
           colors: Optional[Sequence[Optional[str]]] = None,
           target_index: int = 0) -> Tuple[dict, int]:
    """Scene spec with the target shuffled into a varying list slot."""
    colors = colors or [None] * len(placed)
    order = list(range(len(placed)))
    shift = case_index % len(placed)
    order = order[shift:] + order[:shift]
    objects = []
    target_id = None
    for oid, idx in enumerate(order, start=1):
        name, slot = placed[idx]
        yaw = (37.0 * (case_index + oid)) % 360.0
        if CATALOG[name].get("lying"):
            # Keep lying cylinders pointing roughly away from the camera so
            # both silhouette sides stay visible for a side grasp.
            yaw = (23.0 * (case_index + oid)) % 60.0 - 30.0
            if (case_index + oid) % 2:
                yaw += 180.0
        objects.append(_obj(oid, name, slot, colors[idx], yaw=yaw))
        if idx == target_index:
            target_id = oid
    return {"seed": 1000 + case_index, "objects": objects}, target_id


def _target_case(dimension: str, index: int, instruction: str,
                 placed, colors=None, target_index: int = 0) -> SuiteCase:
    spec, target_id = _scene(index, placed, colors, target_index)
    return SuiteCase(dimension=dimension, instruction=instruction,
                     scene_spec=spec, expected_category=Triage.TARGET,
                     expected_object_id=target_id)


# ---------------------------------------------------------------------------
# Dimension builders
# ---------------------------------------------------------------------------

def common_corpus() -> List[SuiteCase]:
    """Plain named-object requests."""
    templates = (
        "Give me the {name}.",
        "please grasp me that {color} {name}.",
        "Pick up the {name}.",
        "Could you hand me the {name}, please?",
    )
    cases = []
    others = [n for n in GRASPABLE + DISTRACTORS]
    for i in range(24):
        target = GRASPABLE[i % len(GRASPABLE)]
        pool = [n for n in others if n != target]
        d1 = pool[i % len(pool)]
        d2 = pool[(i * 5 + 3) % len(pool)]
        if d2 == d1:
            d2 = pool[(i * 5 + 4) % len(pool)]
        placed = [(target, SCATTER[i % 4]),
                  (d1, SCATTER[(i + 1) % 4]),
                  (d2, SCATTER[(i + 2) % 4])]
        color = CATALOG[target]["color"]
        instruction = templates[i % 4].format(name=target, color=color)
        cases.append(_target_case("common", i, instruction, placed))
    return cases


def vague_corpus() -> List[SuiteCase]:
    """Descriptive requests with no object name."""
    cases = []
    holders = ("mug", "cup", "glass", "bottle")
    fillers = ("apple", "ball", "book", "block")
    hold_templates = (
        "Give me object which could hold water.",
        "I need a drink, so hand me something that could hold water.",
    )
    for i in range(6):
        target = holders[i % 4]
        placed = [(target, SCATTER[i % 4]),
                  (fillers[i % 4], SCATTER[(i + 1) % 4]),
                  (fillers[(i + 1) % 4], SCATTER[(i + 2) % 4])]
        cases.append(_target_case("vague", i, hold_templates[i % 2], placed))

    writers = ("pen", "pencil", "marker")
    write_templates = (
        "hand me something I could write with.",
        "Give me an object for writing.",
    )
    for i in range(6):
        target = writers[i % 3]
        placed = [(target, SCATTER[i % 4]),
                  ("mug", SCATTER[(i + 1) % 4]),
                  (fillers[i % 4], SCATTER[(i + 2) % 4])]
        cases.append(_target_case("vague", 6 + i, write_templates[i % 2],
                                  placed))

    # Strictly-longest target among every object in the scene
    longest_sets = (
        ("banana", "mug", "ball"),
        ("pencil", "cup", "apple"),
        ("bottle", "mug", "orange"),
        ("pen", "block", "ball"),
        ("marker", "cup", "apple"),
        ("banana", "glass", "block"),
    )
    long_templates = ("give me the longest object in that table.",
                      "grasp the longest object.")
    for i, names in enumerate(longest_sets):
        placed = [(names[0], SCATTER[0]), (names[1], SCATTER[1]),
                  (names[2], SCATTER[2])]
        cases.append(_target_case("vague", 12 + i, long_templates[i % 2],
                                  placed))

    # Strict volume extremes (target graspable, distractors small/large)
    size_sets = (
        ("bottle", "block", "ball", "largest"),
        ("mug", "pen", "ball", "biggest"),
        ("pen", "mug", "apple", "smallest"),
        ("glass", "ball", "block", "largest"),
        ("pencil", "cup", "orange", "smallest"),
        ("apple", "book", "notebook", "smallest"),
    )
    for i, (target, d1, d2, word) in enumerate(size_sets):
        placed = [(target, SCATTER[i % 4]), (d1, SCATTER[(i + 1) % 4]),
                  (d2, SCATTER[(i + 2) % 4])]
        cases.append(_target_case("vague", 18 + i,
                                  f"Please get me the {word} object here.",
                                  placed))
    return cases


def direction_corpus() -> List[SuiteCase]:
    """Spatial-cue requests: image sides, corners, and between-anchors."""
    cases = []
    side_targets = ("mug", "apple", "ball", "cup", "orange")
    for i in range(5):
        target = side_targets[i]
        placed = [(target, SLOT_LEFT),
                  ("block", SLOT_CENTER),
                  (side_targets[(i + 1) % 5], SLOT_RIGHT)]
        cases.append(_target_case(
            "direction", i, "pick up the object on the left side.", placed))
    for i in range(5):
        target = side_targets[i]
        placed = [(target, SLOT_RIGHT),
                  ("stapler", SLOT_CENTER),
                  (side_targets[(i + 2) % 5], SLOT_LEFT)]
        cases.append(_target_case(
            "direction", 5 + i, "give me the object on the right.", placed))

    corners = (
        ("lower right", SLOT_LOWER_RIGHT, SLOT_UPPER_LEFT, SLOT_LOWER_LEFT),
        ("upper left", SLOT_UPPER_LEFT, SLOT_LOWER_RIGHT, SLOT_UPPER_RIGHT),
        ("lower left", SLOT_LOWER_LEFT, SLOT_UPPER_RIGHT, SLOT_LOWER_RIGHT),
        ("upper right", SLOT_UPPER_RIGHT, SLOT_LOWER_LEFT, SLOT_UPPER_LEFT),
    )
    corner_targets = ("mug", "ball", "cup", "apple", "orange", "glass")
    for i in range(6):
        name, t_slot, d1_slot, d2_slot = corners[i % 4]
        target = corner_targets[i]
        placed = [(target, t_slot),
                  ("block", d1_slot),
                  (corner_targets[(i + 3) % 6], d2_slot)]
        cases.append(_target_case(
            "direction", 10 + i,
            f"give me the object at the {name} corner of the scene.", placed))

    between_sets = (
        ("mug", "bottle", "pen"),
        ("cup", "glass", "ball"),
        ("mug", "glass", "apple"),
        ("bottle", "cup", "orange"),
        ("mug", "bottle", "marker"),
        ("glass", "bottle", "ball"),
        ("cup", "mug", "apple"),
        ("bottle", "glass", "pen"),
    )
    for i, (a, b, target) in enumerate(between_sets):
        placed = [(target, SLOT_CENTER),
                  (a, SLOT_LEFT),
                  (b, SLOT_RIGHT),
                  ("block", (0.02, 0.17))]
        cases.append(_target_case(
            "direction", 16 + i,
            f"Give me the object between the {a} and the {b}.", placed))
    return cases


def complex_corpus() -> List[SuiteCase]:
    """Combined cues and long sentences with distracting filler."""
    cases = []
    # Color + side: same-colored rival on the other side forces the cue
    color_side = (
        ("apple", "red", "cup", "red", "block"),
        ("ball", "yellow", "banana", "yellow", "mug"),
        ("mug", "blue", "marker", "blue", "apple"),
        ("bottle", "green", "block", "green", "ball"),
    )
    for i in range(8):
        target, color, rival, rival_color, neutral = color_side[i % 4]
        side = "left" if i % 2 == 0 else "right"
        t_slot = SLOT_LEFT if side == "left" else SLOT_RIGHT
        r_slot = SLOT_RIGHT if side == "left" else SLOT_LEFT
        placed = [(target, t_slot), (rival, r_slot), (neutral, SLOT_CENTER)]
        colors = [color, rival_color, None]
        cases.append(_target_case(
            "complex", i,
            f"give me the {color} object on the {side} scene.",
            placed, colors=colors))

    # Superlative + side: a longer-but-wrong-side object misleads
    sup_side = (
        ("pen", "banana", "mug"),
        ("marker", "pencil", "cup"),
        ("pen", "pencil", "glass"),
        ("marker", "banana", "apple"),
    )
    for i in range(8):
        target, decoy, neutral = sup_side[i % 4]
        side = "right" if i % 2 == 0 else "left"
        t_slot = (0.20, 0.0) if side == "right" else (-0.20, 0.0)
        partner_slot = (0.16, 0.15) if side == "right" else (-0.16, 0.15)
        d_slot = (-0.20, -0.06) if side == "right" else (0.20, -0.06)
        placed = [(target, t_slot), (neutral, partner_slot), (decoy, d_slot)]
        cases.append(_target_case(
            "complex", 8 + i,
            f"after all that has happened today, would you kindly grasp the "
            f"longest object on the {side} side for me?",
            placed))

    # Long filler + a single explicit name buried in chatter
    chatter = (
        ("mug", "I spent the whole morning sorting papers and answering "
                "calls, and I am honestly exhausted, but before I forget "
                "again, could you pass me the mug?"),
        ("bottle", "My meeting ran long and then the printer jammed twice; "
                   "anyway, what I actually wanted was for you to bring me "
                   "the bottle."),
        ("apple", "The weather forecast said rain all week which ruined my "
                  "plans for the garden, so to cheer myself up please hand "
                  "me the apple."),
        ("pen", "I know you are busy doing your checks and the desk is a "
                "mess of cables and folders, but please fetch the pen so I "
                "am able to sign this."),
        ("ball", "Somebody kept calling about an invoice that was already "
                 "paid, unbelievable really; meanwhile just toss over, I "
                 "mean carefully give me, the ball."),
        ("glass", "While the kettle boils and the emails pile up ever "
                  "higher, would you be so kind as to fetch the glass?"),
        ("cup", "Honestly the commute this morning took forever because of "
                "the roadworks near the bridge, so please bring the cup "
                "over here."),
        ("banana", "After the call I still need to draft two summaries and "
                   "review a budget, so for a quick snack please grab the "
                   "banana."),
    )
    fillers = ("block", "stapler", "remote", "book")
    for i, (target, text) in enumerate(chatter):
        placed = [(target, SCATTER[i % 4]),
                  (fillers[i % 4], SCATTER[(i + 1) % 4]),
                  (fillers[(i + 1) % 4], SCATTER[(i + 2) % 4])]
        cases.append(_target_case("complex", 16 + i, text, placed))
    return cases


def erroneous_corpus() -> List[SuiteCase]:
    """Grasp requests whose referent is absent from the workspace."""
    templates = (
        "Give me the {noun}.",
        "please grasp me that black {noun}.",
        "Pick up the {noun} for me.",
        "Could you grab the {noun}?",
    )
    absent_pool = ("pen", "scissors", "knife", "spoon", "hammer", "lemon",
                   "mouse", "ruler", "brush", "fork", "eraser")
    scene_pool = ("mug", "bottle", "apple", "ball", "book", "cup", "block",
                  "orange", "glass", "stapler")
    cases = []
    for i in range(22):
        noun = absent_pool[i % len(absent_pool)]
        names = [scene_pool[(i + k) % len(scene_pool)] for k in range(3)]
        placed = [(n, SCATTER[(i + k) % 4]) for k, n in enumerate(names)]
        spec, _ = _scene(i, placed)
        cases.append(SuiteCase(
            dimension="erroneous",
            instruction=templates[i % 4].format(noun=noun),
            scene_spec=spec, expected_category=Triage.NO_TARGET))
    return cases


def irrelevant_corpus() -> List[SuiteCase]:
    """Off-task instructions: questions about the system or misdirected
    chatter with no grasp request in them."""
    instructions = (
        "who are you?",
        "what can you do?",
        "what's the weather like today?",
        "tell me a joke.",
        "how old are you?",
        "sing me a song.",
        "what time is it?",
        "do you enjoy your work?",
        "my meeting moved to friday.",
        "the printer is out of toner.",
        "turn off the lights when you leave.",
        "how many languages do you speak?",
        "what is the capital of france?",
        "open the window, it is warm in here.",
        "good morning!",
        "thanks for your help earlier.",
        "please stop moving.",
        "what day is it tomorrow?",
        "this desk is really messy.",
        "are you listening to me?",
        "give it a break, will you?",
        "remember to water the plants.",
    )
    scene_pool = ("mug", "apple", "pen", "bottle", "ball", "book")
    cases = []
    for i, text in enumerate(instructions):
        names = [scene_pool[(i + k) % len(scene_pool)] for k in range(3)]
        placed = [(n, SCATTER[(i + k) % 4]) for k, n in enumerate(names)]
        spec, _ = _scene(i, placed)
        cases.append(SuiteCase(dimension="irrelevant", instruction=text,
                               scene_spec=spec,
                               expected_category=Triage.IRRELEVANT))
    return cases


_BUILDERS = {
    "common": common_corpus,
    "vague": vague_corpus,
    "direction": direction_corpus,
    "complex": complex_corpus,
    "erroneous": erroneous_corpus,
    "irrelevant": irrelevant_corpus,
}


def built_in_corpus(dimension: str) -> List[SuiteCase]:
    builder = _BUILDERS.get(dimension)
    if builder is None:
        raise CorpusNotFound(f"no built-in corpus for {dimension!r}")
    return builder()


def all_corpora() -> Dict[str, List[SuiteCase]]:
    return {dim: built_in_corpus(dim) for dim in DIMENSIONS}
