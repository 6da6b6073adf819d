"""Deterministic desk-scale search simulation.

A scenario fixes the ground-truth object map, the source, a steady wind
and the sensor noise. The robot moves between cells (ideal motion), takes
a binary gas reading from the same hit model family the estimator uses,
and observes every visible cell through a confusion-matrix detector. Gas
readings and camera detections draw from separate random streams seeded
from the run seed, so runs in different modes see identical readings.

Scenario JSON (rows are listed bottom-up, row 0 first)::

    {"name": "...", "grid": {"width": 20, "height": 20, "cell_size": 0.5, "layers": 1},
     "occupancy": ["....#...", ...],          # '#' marks occupied cells
     "ground_truth": [["floor", ...], ...],    # rows of class names; a list of such
                                               # blocks (one per layer) when layers > 1
     "rooms": [["kitchen", null, ...], ...],   # optional
     "source": [col, row], "gas": "smoke",
     "wind": {"direction": 0.0, "speed": 0.5},
     "detector": {"accuracy": 0.7} | {"matrix": [[...]]},
     "camera": {"fov_angle": 1.57, "fov_range": 2.5},
     "plume": {"p_d": 0.9, "p_fa": 0.05, "sigma_r": 3.0, "sigma_theta": 0.6},
     "estimator": {...},                       # optional, defaults to "plume"
     "gas_belief": {"smoke": 0.8, ...},        # optional
     "seed": 0, "steps": 150, "declare_threshold": 0.5,
     "path": [[col, row], ...]}                # waypoints joined by straight moves
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import belief as belief_mod
from .belief import ConfusionMatrix, SemanticObservation, likelihood_from_detection
from .core import Grid2D, VoxelGrid, entropy, uniform
from .errors import AllZeroError, OutOfBoundsError, ScenarioError
from .estimation import (
    aggregate_columns,
    expected_location,
    fuse,
    semantic_source,
    semantic_source_mixture,
)
from .infogain import InfoState, Pose, argmax_first, score_candidates, visible_cells
from .olfaction import HitBayesFilter, HitModel, HitReading, hit_likelihood
from .ontology import Ontology

log = logging.getLogger(__name__)

MODES = ("olfaction", "semantic", "semantic+rooms")
STRATEGIES = ("scripted", "infogain")


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    grid: Grid2D
    truth: np.ndarray  # class id per cell, or per voxel when layers > 1
    source: int
    gas: int
    wind_direction: float
    wind_speed: float
    detector: ConfusionMatrix
    fov_angle: float = math.pi / 2
    fov_range: float = 2.5
    plume: HitModel = field(default_factory=HitModel)
    estimator: HitModel | None = None
    rooms: tuple | None = None  # room id (or None) per cell
    gas_belief: np.ndarray | None = None
    layers: int = 1
    seed: int = 0
    steps: int = 150
    path: tuple = ()  # expanded cell sequence
    declare_threshold: float = 0.5

    def __post_init__(self):
        g = self.grid
        n_truth = g.n_cells * self.layers
        truth = np.asarray(self.truth, dtype=np.intp).reshape(-1)
        if truth.size != n_truth:
            raise ScenarioError(f"ground truth has {truth.size} entries, expected {n_truth}")
        object.__setattr__(self, "truth", truth)
        if not g.is_free(self.source):
            raise ScenarioError(f"source cell {self.source} is not free")
        if self.rooms is not None and len(self.rooms) != g.n_cells:
            raise ScenarioError("room map must have one entry per cell")
        if self.steps < 0:
            raise ScenarioError("step budget must be non-negative")
        for c in self.path:
            if not g.is_free(c):
                raise ScenarioError(f"path visits occupied cell {c}")
        if not self.path:
            raise ScenarioError("scenario needs a start cell (path)")

    @property
    def space(self):
        return VoxelGrid(self.grid, self.layers) if self.layers > 1 else self.grid

    @property
    def estimator_model(self) -> HitModel:
        return self.estimator or self.plume

    @property
    def source_xy(self) -> tuple[float, float]:
        return self.grid.center(self.source)

    def check(self, ont: Ontology) -> None:
        """Invariants that need the ontology."""
        if self.detector.k != ont.n_classes:
            raise ScenarioError("detector size does not match the ontology's classes")
        if np.any(self.truth < 0) or np.any(self.truth >= ont.n_classes):
            raise ScenarioError("ground truth refers to unknown classes")
        if not 0 <= self.gas < ont.n_gases:
            raise ScenarioError("unknown scenario gas")
        src_classes = self.truth.reshape(self.layers, -1)[:, self.source]
        if max(ont.emission[self.gas, i] for i in src_classes) <= 0:
            raise ScenarioError("no object in the source column can emit the scenario gas")


def expand_path(grid: Grid2D, waypoints: Sequence[Sequence[int]]) -> tuple:
    """Join (col, row) waypoints with straight moves between 8-connected cells."""
    cells = []
    for (c0, r0), (c1, r1) in zip(waypoints, waypoints[1:]):
        n = max(abs(c1 - c0), abs(r1 - r0))
        for t in range(n):
            cells.append(grid.cell_index(round(c0 + (c1 - c0) * t / n), round(r0 + (r1 - r0) * t / n)))
    cells.append(grid.cell_index(*waypoints[-1]))
    out = [cells[0]]
    for c in cells[1:]:
        if c != out[-1]:
            out.append(c)
    return tuple(out)


def _rows(doc, width, height, what):
    if len(doc) != height or any(len(r) != width for r in doc):
        raise ScenarioError(f"{what} must be {height} rows of {width} entries")
    return [x for row in doc for x in row]


def scenario_from_dict(doc: dict, ont: Ontology) -> Scenario:
    try:
        g = doc["grid"]
        width, height = int(g["width"]), int(g["height"])
        layers = int(g.get("layers", 1))
        occ = doc.get("occupancy")
        free = [ch != "#" for ch in _rows(occ, width, height, "occupancy")] if occ else None
        grid = Grid2D(width, height, float(g.get("cell_size", 1.0)), free)
        gt = doc["ground_truth"]
        blocks = gt if layers > 1 else [gt]
        if len(blocks) != layers:
            raise ScenarioError(f"ground truth needs {layers} layer blocks")
        truth = [ont.class_id(n) for b in blocks for n in _rows(b, width, height, "ground_truth")]
        rooms = None
        if doc.get("rooms") is not None:
            rooms = tuple(
                None if r is None else ont.room_id(r) for r in _rows(doc["rooms"], width, height, "rooms")
            )
        det = doc.get("detector", {"accuracy": 0.8})
        detector = (
            ConfusionMatrix(det["matrix"])
            if "matrix" in det
            else ConfusionMatrix.symmetric(ont.n_classes, float(det["accuracy"]))
        )
        cam = doc.get("camera", {})
        wind = doc.get("wind", {})
        gas_belief = None
        if doc.get("gas_belief"):
            gb = np.zeros(ont.n_gases)
            for name, p in doc["gas_belief"].items():
                gb[ont.gas_id(name)] = float(p)
            gas_belief = gb / gb.sum()
        path = expand_path(grid, doc["path"])
        return Scenario(
            name=doc.get("name", "scenario"),
            grid=grid,
            truth=np.array(truth),
            source=grid.cell_index(*doc["source"]),
            gas=ont.gas_id(doc["gas"]),
            wind_direction=float(wind.get("direction", 0.0)),
            wind_speed=float(wind.get("speed", 0.0)),
            detector=detector,
            fov_angle=float(cam.get("fov_angle", math.pi / 2)),
            fov_range=float(cam.get("fov_range", 2.5)),
            plume=HitModel(**doc.get("plume", {})),
            estimator=HitModel(**doc["estimator"]) if doc.get("estimator") else None,
            rooms=rooms,
            gas_belief=gas_belief,
            layers=layers,
            seed=int(doc.get("seed", 0)),
            steps=int(doc.get("steps", 150)),
            path=path,
            declare_threshold=float(doc.get("declare_threshold", 0.5)),
        )
    except (KeyError, TypeError) as e:
        raise ScenarioError(f"malformed scenario: {e!r}") from None
    except (ValueError, IndexError) as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError(f"invalid scenario: {e}") from None


def load_scenario(path, ont: Ontology) -> Scenario:
    with open(path) as fh:
        scn = scenario_from_dict(json.load(fh), ont)
    scn.check(ont)
    return scn


def sample_hit(scn: Scenario, x, rng: np.random.Generator) -> HitReading:
    """Binary gas reading at position ``x`` drawn from the true plume."""
    c = scn.grid.cell_at(*x)
    if not scn.grid.is_free(c):
        raise OutOfBoundsError(f"position {x} is inside an occupied cell")
    p = hit_likelihood(scn.source_xy, x, scn.wind_direction, scn.wind_speed, scn.plume)
    return HitReading(bool(rng.random() < p), scn.wind_direction, scn.wind_speed)


def _observed_elements(scn: Scenario, cells) -> list[int]:
    n = scn.grid.n_cells
    return [layer * n + c for layer in range(scn.layers) for c in sorted(cells)]


def observe(scn: Scenario, pose: Pose, rng: np.random.Generator) -> list[SemanticObservation]:
    """One detection per visible cell (per voxel of each visible column in 3D)."""
    cm = scn.detector.matrix
    cdf = np.cumsum(cm, axis=1)
    out = []
    for e in _observed_elements(scn, visible_cells(pose, scn.grid)):
        row = cdf[scn.truth[e]]
        detected = min(int(np.searchsorted(row, rng.random() * row[-1], side="right")), cm.shape[1] - 1)
        out.append(SemanticObservation(e, likelihood_from_detection(scn.detector, detected)))
    return out


@dataclass
class MetricRow:
    step: int
    x: float
    y: float
    error_m: float
    std_m: float
    entropy_bits: float


@dataclass
class TraceRow:
    step: int
    candidate_index: int
    phi_semantic: float
    phi_olfactory: float
    total: float
    chosen: bool


METRIC_FIELDS = ["step", "x", "y", "error_m", "std_m", "entropy_bits"]
TRACE_FIELDS = ["step", "candidate_index", "phi_semantic", "phi_olfactory", "total", "chosen"]


@dataclass
class RunMetrics:
    rows: list[MetricRow] = field(default_factory=list)
    trace: list[TraceRow] = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)  # step -> fused SourceDist
    declared_step: int | None = None
    declared_cell: int | None = None
    fallbacks: int = 0

    @property
    def final_error(self) -> float:
        return self.rows[-1].error_m

    def error_at(self, step: int) -> float:
        return self.rows[min(step, len(self.rows) - 1)].error_m


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metrics_csv(rows: Sequence[MetricRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, f)) for f in METRIC_FIELDS])


def read_metrics_csv(path) -> list[MetricRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRIC_FIELDS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            MetricRow(int(r["step"]), *(float(r[f]) for f in METRIC_FIELDS[1:])) for r in reader
        ]


def write_trace_csv(rows: Sequence[TraceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, f)) for f in TRACE_FIELDS])


def read_trace_csv(path) -> list[TraceRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_FIELDS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            TraceRow(
                int(r["step"]),
                int(r["candidate_index"]),
                float(r["phi_semantic"]),
                float(r["phi_olfactory"]),
                float(r["total"]),
                r["chosen"] == "1",
            )
            for r in reader
        ]


_NEIGHBORS = [(0, 0), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
_HEADINGS = [k * math.pi / 4 for k in range(8)]


def candidate_poses(scn: Scenario, cell: int) -> list[Pose]:
    """Stay or step to any free 8-neighbor, facing any of 8 directions."""
    g = scn.grid
    col, row = g.col_row(cell)
    out = []
    for dc, dr in _NEIGHBORS:
        c, r = col + dc, row + dr
        if 0 <= c < g.width and 0 <= r < g.height and g.free_mask[r * g.width + c]:
            x, y = g.center(r * g.width + c)
            out += [Pose(x, y, h, scn.fov_angle, scn.fov_range) for h in _HEADINGS]
    return out


def _scripted_cells(scn: Scenario, steps: int) -> list[int]:
    """Path cells for steps 0..steps, bouncing back and forth when the path is short."""
    p = list(scn.path)
    if len(p) == 1:
        return p * (steps + 1)
    cycle = p + p[-2:0:-1]
    return [cycle[t % len(cycle)] for t in range(steps + 1)]


class _Search:
    """Mutable per-run state; one instance per run, never shared."""

    def __init__(self, scn: Scenario, ont: Ontology, mode: str, semantic_denominator: str):
        self.scn, self.ont, self.mode = scn, ont, mode
        self.olf = HitBayesFilter(scn.grid, scn.estimator_model)
        rooms = scn.rooms if mode == "semantic+rooms" else None
        if mode == "semantic+rooms" and rooms is None:
            raise ScenarioError("mode semantic+rooms needs a scenario room map")
        self.belief = belief_mod.init(scn.space, ont, rooms, semantic_denominator)
        self.gas_belief = (
            scn.gas_belief if scn.gas_belief is not None else np.eye(ont.n_gases)[scn.gas]
        )
        self.fallbacks = 0

    def semantic(self) -> np.ndarray:
        if self.mode == "olfaction":
            return uniform(self.scn.grid.n_cells, self.scn.grid.free_mask)
        if self.scn.gas_belief is not None:
            sem = semantic_source_mixture(self.belief, self.ont, self.gas_belief)
        else:
            sem = semantic_source(self.belief, self.ont, self.scn.gas)
        if isinstance(self.belief.grid, VoxelGrid):
            sem = aggregate_columns(sem, self.belief.grid)
        return sem

    def fused(self) -> np.ndarray:
        olf = self.olf.current()
        try:
            return fuse(olf, self.semantic())
        except AllZeroError as e:
            # contradictory modalities: keep the olfactory estimate
            log.warning("fusion fallback to olfaction: %s", e)
            self.fallbacks += 1
            return olf

    def info_state(self) -> InfoState:
        olf = self.olf.current()
        if isinstance(self.belief.grid, VoxelGrid):
            olf = np.tile(olf, self.scn.layers) / self.scn.layers
        return InfoState(self.belief, self.ont, self.gas_belief, olf)


def run(
    scn: Scenario,
    ont: Ontology,
    mode: str = "semantic",
    strategy: str = "scripted",
    seed: int | None = None,
    steps: int | None = None,
    snapshot_every: int = 0,
    semantic_denominator: str = "global",
) -> RunMetrics:
    """Execute one search and return its per-step metrics.

    Row 0 is the state before any move. Each later step moves the robot,
    takes a gas reading, updates the olfactory filter, observes the visible
    cells, updates the semantic belief and records the fused estimate.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    seed = scn.seed if seed is None else seed
    steps = scn.steps if steps is None else steps
    rng_gas = np.random.default_rng([seed, 0])
    rng_cam = np.random.default_rng([seed, 1])
    search = _Search(scn, ont, mode, semantic_denominator)
    scripted = _scripted_cells(scn, steps) if strategy == "scripted" else None
    g = scn.grid
    sx, sy = scn.source_xy
    metrics = RunMetrics()

    cell = scn.path[0]
    heading = 0.0

    def record(step: int, fused: np.ndarray, x: float, y: float):
        loc = expected_location(fused, g)
        metrics.rows.append(
            MetricRow(step, x, y, math.hypot(loc.x - sx, loc.y - sy), loc.std, entropy(fused))
        )
        if snapshot_every and step % snapshot_every == 0:
            metrics.snapshots[step] = fused
        if metrics.declared_step is None and fused.max() > scn.declare_threshold:
            metrics.declared_step = step
            metrics.declared_cell = int(np.argmax(fused))

    fused = search.fused()
    record(0, fused, *g.center(cell))
    for t in range(1, steps + 1):
        if scripted is not None:
            nxt = scripted[t]
            if nxt != cell:
                (x0, y0), (x1, y1) = g.center(cell), g.center(nxt)
                heading = math.atan2(y1 - y0, x1 - x0)
            cell = nxt
            pose = Pose(*g.center(cell), heading, scn.fov_angle, scn.fov_range)
        else:
            pose = _plan(search, cell, t, metrics)
            cell, heading = g.cell_at(pose.x, pose.y), pose.heading
        reading = sample_hit(scn, (pose.x, pose.y), rng_gas)
        search.olf.update((pose.x, pose.y), reading)
        if mode != "olfaction":
            search.belief = belief_mod.update_many(search.belief, observe(scn, pose, rng_cam))
        fused = search.fused()
        record(t, fused, pose.x, pose.y)
    if snapshot_every:
        metrics.snapshots[steps] = fused
    metrics.fallbacks = search.fallbacks
    return metrics


def _plan(search: _Search, cell: int, step: int, metrics: RunMetrics) -> Pose:
    candidates = candidate_poses(search.scn, cell)
    if search.mode == "olfaction":
        reports = [(0.0, search.olf.expected_gain((p.x, p.y))) for p in candidates]
    else:
        rep = score_candidates(candidates, search.info_state(), lambda p: search.olf.expected_gain((p.x, p.y)))
        reports = [(r.phi_semantic, r.phi_olfactory) for r in rep]
    totals = [a + b for a, b in reports]
    best = argmax_first(totals)
    for i, (a, b) in enumerate(reports):
        metrics.trace.append(TraceRow(step, i, a, b, totals[i], i == best))
    return candidates[best]


def with_overrides(scn: Scenario, **kw) -> Scenario:
    return replace(scn, **kw)
