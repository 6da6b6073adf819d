"""Semantic model relating object classes to gas emission.

An ontology holds, for every gas type, the probability that the source
cell contains an object of each class (``emission[gas, class]``), the
a-priori class distribution, and optional room-conditional class priors.

JSON layout::

    {"classes": ["oven", ...], "gases": ["smoke", ...],
     "class_priors": {"oven": 0.1, ...},
     "emission": {"smoke": {"oven": 0.4, ...}},
     "room_priors": {"kitchen": {"oven": 0.2, ...}}}

Classes missing from a table get probability 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .core import SUM_TOL
from .errors import OntologyError, OutOfBoundsError, UnknownRoomError


@dataclass(frozen=True, eq=False)
class Ontology:
    classes: tuple[str, ...]
    gases: tuple[str, ...]
    class_priors: np.ndarray
    emission: np.ndarray  # (n_gases, n_classes)
    rooms: tuple[str, ...] = ()
    room_priors: np.ndarray | None = None  # (n_rooms, n_classes)
    _class_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "gases", tuple(self.gases))
        object.__setattr__(self, "rooms", tuple(self.rooms))
        k = len(self.classes)
        priors = np.array(self.class_priors, dtype=np.float64)
        emission = np.array(self.emission, dtype=np.float64)
        if emission.ndim == 1:
            emission = emission[None, :]
        if priors.shape != (k,) or emission.shape != (len(self.gases), k):
            raise OntologyError([f"table shapes do not match {k} classes / {len(self.gases)} gases"])
        priors.setflags(write=False)
        emission.setflags(write=False)
        object.__setattr__(self, "class_priors", priors)
        object.__setattr__(self, "emission", emission)
        if self.room_priors is not None:
            rp = np.array(self.room_priors, dtype=np.float64).reshape(len(self.rooms), k)
            rp.setflags(write=False)
            object.__setattr__(self, "room_priors", rp)
        elif self.rooms:
            raise OntologyError(["rooms listed without room_priors"])
        object.__setattr__(self, "_class_index", {c: i for i, c in enumerate(self.classes)})

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_gases(self) -> int:
        return len(self.gases)

    def class_id(self, name: str) -> int:
        try:
            return self._class_index[name]
        except KeyError:
            raise OutOfBoundsError(f"unknown class {name!r}") from None

    def gas_id(self, name: str) -> int:
        try:
            return self.gases.index(name)
        except ValueError:
            raise OutOfBoundsError(f"unknown gas {name!r}") from None

    def room_id(self, name: str) -> int:
        try:
            return self.rooms.index(name)
        except ValueError:
            raise UnknownRoomError(f"unknown room {name!r}") from None

    @classmethod
    def from_dict(cls, doc: dict) -> "Ontology":
        """Build an ontology from its JSON document and enforce :func:`validate`."""
        try:
            classes = list(doc["classes"])
            gases = list(doc["gases"])
        except KeyError as e:
            raise OntologyError([f"missing key {e.args[0]!r}"]) from None
        index = {c: i for i, c in enumerate(classes)}
        problems = []

        def table(mapping, where):
            row = np.zeros(len(classes))
            for name, p in mapping.items():
                if name not in index:
                    problems.append(f"{where}: unknown class {name!r}")
                    continue
                row[index[name]] = float(p)
            return row

        if "class_priors" in doc:
            priors = table(doc["class_priors"], "class_priors")
        else:
            priors = np.full(len(classes), 1.0 / max(len(classes), 1))
        emission_doc = doc.get("emission", {})
        for g in emission_doc:
            if g not in gases:
                problems.append(f"emission: unknown gas {g!r}")
        emission = np.array(
            [table(emission_doc.get(g, {}), f"emission[{g}]") for g in gases]
        ).reshape(len(gases), len(classes))
        room_doc = doc.get("room_priors") or {}
        rooms = list(room_doc)
        room_priors = (
            np.array([table(room_doc[r], f"room_priors[{r}]") for r in rooms])
            if rooms
            else None
        )
        if problems:
            raise OntologyError(problems)
        ont = cls(classes, gases, priors, emission, rooms, room_priors)
        violations = validate(ont)
        if violations:
            raise OntologyError(violations)
        return ont

    def to_dict(self) -> dict:
        def named(row):
            return {c: float(p) for c, p in zip(self.classes, row)}

        doc = {
            "classes": list(self.classes),
            "gases": list(self.gases),
            "class_priors": named(self.class_priors),
            "emission": {g: named(row) for g, row in zip(self.gases, self.emission)},
        }
        if self.rooms:
            doc["room_priors"] = {r: named(row) for r, row in zip(self.rooms, self.room_priors)}
        return doc


def _row_violations(row: np.ndarray, name: str) -> list[str]:
    out = []
    if not np.all(np.isfinite(row)):
        out.append(f"{name}: non-finite entry")
    elif np.any(row < 0) or np.any(row > 1):
        out.append(f"{name}: entries must lie in [0, 1]")
    elif abs(row.sum() - 1.0) > SUM_TOL:
        out.append(f"{name}: sums to {row.sum():.12g}, expected 1")
    return out


def validate(ont: Ontology) -> list[str]:
    """Return one message per violated invariant; an empty list means valid."""
    violations = []
    if ont.n_classes < 1:
        violations.append("ontology needs at least one class")
    if ont.n_gases < 1:
        violations.append("ontology needs at least one gas")
    violations += _row_violations(ont.class_priors, "class_priors")
    for g, row in zip(ont.gases, ont.emission):
        violations += _row_violations(row, f"emission[{g}]")
    if ont.room_priors is not None:
        for r, row in zip(ont.rooms, ont.room_priors):
            violations += _row_violations(row, f"room_priors[{r}]")
    return violations


def emission_prob(ont: Ontology, i: int, gas: int) -> float:
    """Probability that the source cell's object is of class ``i`` given gas ``gas``."""
    if not 0 <= i < ont.n_classes:
        raise OutOfBoundsError(f"class {i} outside {ont.n_classes} classes")
    if not 0 <= gas < ont.n_gases:
        raise OutOfBoundsError(f"gas {gas} outside {ont.n_gases} gases")
    return float(ont.emission[gas, i])


def prior_for_cell(ont: Ontology, room: int | None = None) -> np.ndarray:
    """Class prior of a cell, conditioned on its room when a room table exists."""
    if room is None or ont.room_priors is None:
        return ont.class_priors
    if not 0 <= room < len(ont.rooms):
        raise UnknownRoomError(f"room {room} outside {len(ont.rooms)} rooms")
    return ont.room_priors[room]


def load_ontology(path) -> Ontology:
    with open(path) as fh:
        return Ontology.from_dict(json.load(fh))


def save_ontology(ont: Ontology, path) -> None:
    Path(path).write_text(json.dumps(ont.to_dict(), indent=2) + "\n")


def kitchen_ontology() -> Ontology:
    """The bundled kitchen ontology used by the reference scenario."""
    text = resources.files("semgsl.data").joinpath("kitchen_ontology.json").read_text()
    return Ontology.from_dict(json.loads(text))
