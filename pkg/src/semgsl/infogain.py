"""Expected information gain of candidate poses and greedy pose selection.

A pose's gain splits into a semantic part, the summed mutual information
between the source location and the object class of every cell in the
camera's field of view, and an olfactory part supplied by the olfaction
backend (or zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .belief import SemanticBelief
from .core import Grid2D, VoxelGrid, base_grid
from .errors import EmptyCandidatesError, OutOfBoundsError
from .estimation import mixture_scores
from .ontology import Ontology


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0
    fov_angle: float = 2 * math.pi
    fov_range: float = 3.0

    def __post_init__(self):
        if not 0 < self.fov_angle <= 2 * math.pi + 1e-12:
            raise ValueError("fov_angle must lie in (0, 2*pi]")
        if not self.fov_range > 0:
            raise ValueError("fov_range must be positive")


@dataclass(frozen=True)
class GainReport:
    phi_semantic: float
    phi_olfactory: float
    visible_cells: frozenset = field(default_factory=frozenset)

    @property
    def total(self) -> float:
        return self.phi_semantic + self.phi_olfactory


def _line_cells(c0: int, r0: int, c1: int, r1: int):
    """Bresenham traversal from (c0, r0) to (c1, r1), endpoints included."""
    dc, dr = abs(c1 - c0), -abs(r1 - r0)
    sc, sr = (1 if c1 > c0 else -1), (1 if r1 > r0 else -1)
    err = dc + dr
    while True:
        yield c0, r0
        if c0 == c1 and r0 == r1:
            return
        e2 = 2 * err
        if e2 >= dr:
            err += dr
            c0 += sc
        if e2 <= dc:
            err += dc
            r0 += sr


@lru_cache(maxsize=200_000)
def _clear_line(grid: Grid2D, a: int, b: int) -> bool:
    ca, ra = a % grid.width, a // grid.width
    cb, rb = b % grid.width, b // grid.width
    free = grid.free_mask
    return all(free[r * grid.width + c] for c, r in _line_cells(ca, ra, cb, rb))


def visible_cells(pose: Pose, grid) -> frozenset:
    """Free cells whose centers fall inside the pose's view sector with a clear line of sight."""
    g = base_grid(grid)
    here = g.cell_at(pose.x, pose.y)
    delta = g.centers - np.array([pose.x, pose.y])
    dist = np.hypot(delta[:, 0], delta[:, 1])
    ok = (dist <= pose.fov_range) & g.free_mask
    if pose.fov_angle < 2 * math.pi:
        bearing = np.arctan2(delta[:, 1], delta[:, 0]) - pose.heading
        off = np.abs((bearing + np.pi) % (2 * np.pi) - np.pi)
        ok &= (off <= pose.fov_angle / 2 + 1e-12) | (dist == 0)
    return frozenset(int(c) for c in np.flatnonzero(ok) if _clear_line(g, here, int(c)))


def _xlog2x(w: np.ndarray) -> np.ndarray:
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] * np.log2(w[pos])
    return out


def _entropy_of_weights(total: np.ndarray, sum_xlogx: np.ndarray) -> np.ndarray:
    """Entropy (bits) of weights normalized by ``total``, from sum(w log2 w)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2(total) - sum_xlogx / total


@dataclass
class InfoState:
    """Everything the semantic gain depends on, frozen at planning time.

    ``olfaction`` is the current olfactory source distribution; when it is
    None, or ``fused`` is False, entropies are taken over the semantic term
    alone.
    """

    belief: SemanticBelief
    ontology: Ontology
    gas_belief: np.ndarray
    olfaction: np.ndarray | None = None
    fused: bool = True
    _mi: np.ndarray | None = field(default=None, init=False, repr=False)

    def mutual_info(self) -> np.ndarray:
        """I(S; O_n) in bits for every cell n (cached)."""
        if self._mi is None:
            self._mi = _mutual_info_all(self)
        return self._mi


def _mutual_info_all(state: InfoState) -> np.ndarray:
    b, ont = state.belief, state.ontology
    gas = np.asarray(state.gas_belief, dtype=np.float64)
    scores = mixture_scores(b, ont, gas)
    n, k = b.n_cells, b.n_classes
    if state.fused and state.olfaction is not None:
        olf = np.asarray(state.olfaction, dtype=np.float64)
    else:
        olf = np.ones(n)
    w = olf * scores
    total = w.sum()
    xlogx = _xlog2x(w)
    sum_xlogx = xlogx.sum()
    h_now = float(_entropy_of_weights(np.array(total), np.array(sum_xlogx)))

    # score of cell n if its class were known to be i; same operation order as the real score
    inv_ref = 1.0 / b.reference_prior
    hyp = np.zeros((n, k))
    for g in range(ont.n_gases):
        if gas[g] > 0:
            hyp += gas[g] * (inv_ref * ont.emission[g])
    hyp[~b.grid.free_mask] = 0.0
    w_hyp = olf[:, None] * hyp
    total_hyp = total - w[:, None] + w_hyp
    sum_hyp = sum_xlogx - xlogx[:, None] + _xlog2x(w_hyp)
    h_hyp = _entropy_of_weights(total_hyp, sum_hyp)
    # a hypothetical that removes all mass is refused: it leaves the entropy where it is
    h_hyp = np.where(total_hyp > 0, h_hyp, h_now)
    # unchanged weights mean an unchanged distribution
    h_hyp = np.where(w_hyp == w[:, None], h_now, h_hyp)
    expected = (b.probs() * h_hyp).sum(axis=1)
    return np.clip(h_now - expected, 0.0, None)


def current_entropy(state: InfoState) -> float:
    b = state.belief
    scores = mixture_scores(b, state.ontology, np.asarray(state.gas_belief, dtype=np.float64))
    olf = state.olfaction if (state.fused and state.olfaction is not None) else np.ones(b.n_cells)
    w = np.asarray(olf) * scores
    return float(_entropy_of_weights(np.array(w.sum()), np.array(_xlog2x(w).sum())))


def mutual_info_cell(state: InfoState, n: int) -> float:
    """I(S; O_n): expected entropy drop of the source distribution from learning cell n's class."""
    if not 0 <= n < state.belief.n_cells:
        raise OutOfBoundsError(f"cell {n} outside {state.belief.n_cells} cells")
    return float(state.mutual_info()[n])


def semantic_gain(pose: Pose, state: InfoState, visible=None) -> float:
    """Sum of I(S; O_n) over the cells visible from ``pose``."""
    grid = state.belief.grid
    cells = visible_cells(pose, grid) if visible is None else visible
    mi = state.mutual_info()
    if isinstance(grid, VoxelGrid):
        # a visible cell exposes every voxel of its column
        mi = mi.reshape(grid.layers, -1).sum(axis=0)
    # fixed summation order keeps the result independent of set iteration order
    return float(sum(mi[c] for c in sorted(cells)))


def score_candidates(
    candidates: Sequence[Pose],
    state: InfoState,
    olfactory_gain: Callable[[Pose], float] | None = None,
) -> list[GainReport]:
    reports = []
    for pose in candidates:
        cells = visible_cells(pose, state.belief.grid)
        phi_o = semantic_gain(pose, state, cells)
        phi_g = max(0.0, float(olfactory_gain(pose))) if olfactory_gain is not None else 0.0
        reports.append(GainReport(phi_o, phi_g, cells))
    return reports


def argmax_first(values: Sequence[float]) -> int:
    """Index of the largest value; ties go to the lowest index."""
    if not values:
        raise EmptyCandidatesError("no candidate poses")
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def plan_next_pose(
    candidates: Sequence[Pose],
    state: InfoState,
    olfactory_gain: Callable[[Pose], float] | None = None,
) -> Pose:
    """Greedy one-step choice: the candidate with the highest total expected gain."""
    if not candidates:
        raise EmptyCandidatesError("no candidate poses")
    reports = score_candidates(candidates, state, olfactory_gain)
    return candidates[argmax_first([r.total for r in reports])]
