"""The bundled reference kitchen scenario.

A 10 m x 10 m flat on a 20 x 20 grid of 0.5 m cells: a kitchen (lower left),
a corridor (upper left) and a living room (right half), separated by walls
with doorways. Smoke is emitted by the oven. The scripted path sweeps the
corridor, then the kitchen, then the living room.

``python -m semgsl.scenarios [PATH]`` rewrites ``data/kitchen_scenario.json``
(or writes the document to PATH).
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

from .ontology import Ontology, kitchen_ontology
from .simulator import Scenario, scenario_from_dict

W = H = 20

KITCHEN_OBJECTS = {
    (0, 0): "countertop",
    (1, 0): "countertop",
    (2, 0): "oven",
    (3, 0): "countertop",
    (4, 0): "sink",
    (5, 0): "countertop",
    (6, 0): "countertop",
    (7, 0): "microwave",
    (8, 0): "refrigerator",
    (8, 1): "refrigerator",
    (4, 5): "table",
    (5, 5): "table",
    (4, 6): "table",
    (5, 6): "table",
}
LIVING_OBJECTS = {
    **{(c, 18): "sofa" for c in range(12, 16)},
    **{(c, r): "table" for c in (13, 14) for r in (12, 13)},
    (19, 10): "refrigerator",
}
CORRIDOR_OBJECTS = {(1, 17): "table"}

WAYPOINTS = [
    # corridor
    (1, 18), (7, 18), (7, 16), (1, 16), (1, 14), (7, 14), (7, 12), (4, 12),
    # through the kitchen door
    (4, 9),
    # kitchen
    (7, 8), (1, 8), (1, 6), (7, 6), (7, 4), (1, 4), (1, 2), (7, 2), (8, 3),
    # through the living-room door
    (10, 3),
    # living room
    (18, 2), (18, 6), (10, 6), (10, 10), (18, 10), (18, 14), (10, 14), (10, 18), (18, 18),
]


def _room(c: int, r: int):
    if c == 9 or (r == 10 and c < 9):
        return None
    if c > 9:
        return "living_room"
    return "kitchen" if r < 10 else "corridor"


def _occupied(c: int, r: int) -> bool:
    if c == 9:
        return r not in (3, 4, 15, 16)
    if r == 10 and c < 9:
        return c not in (4, 5)
    return False


def reference_kitchen_doc() -> dict:
    objects = {**KITCHEN_OBJECTS, **LIVING_OBJECTS, **CORRIDOR_OBJECTS}
    return {
        "name": "reference-kitchen",
        "grid": {"width": W, "height": H, "cell_size": 0.5, "layers": 1},
        "occupancy": ["".join("#" if _occupied(c, r) else "." for c in range(W)) for r in range(H)],
        "ground_truth": [[objects.get((c, r), "floor") for c in range(W)] for r in range(H)],
        "rooms": [[_room(c, r) for c in range(W)] for r in range(H)],
        "source": [2, 0],
        "gas": "smoke",
        "wind": {"direction": 0.0, "speed": 0.5},
        "detector": {"accuracy": 0.7},
        "camera": {"fov_angle": math.pi / 2, "fov_range": 2.5},
        "plume": {"p_d": 0.9, "p_fa": 0.05, "sigma_r": 3.0, "sigma_theta": 0.6},
        "seed": 0,
        "steps": 150,
        "declare_threshold": 0.5,
        "path": [list(p) for p in WAYPOINTS],
    }


def reference_kitchen(ont: Ontology | None = None) -> Scenario:
    ont = ont or kitchen_ontology()
    text = resources.files("semgsl.data").joinpath("kitchen_scenario.json").read_text()
    scn = scenario_from_dict(json.loads(text), ont)
    scn.check(ont)
    return scn


def write_reference(path=None) -> Path:
    path = Path(path) if path else Path(__file__).parent / "data" / "kitchen_scenario.json"
    path.write_text(json.dumps(reference_kitchen_doc(), indent=1) + "\n")
    return path


if __name__ == "__main__":
    import sys

    print(write_reference(sys.argv[1] if len(sys.argv) > 1 else None))
