"""Source-location estimates from semantic evidence, and fusion with olfaction.

For a candidate cell c the semantic score is

    score_c = sum_i  belief[c, i] / prior[c, i] * emission[gas, i]

which depends on cell c's belief only; the source distribution is the
scores normalized over free cells. Cost is O(n_cells * n_classes).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .belief import SemanticBelief
from .core import Grid2D, VoxelGrid, base_grid, normalize
from .errors import AllZeroError, DomainMismatchError, OutOfBoundsError
from .ontology import Ontology


def _free_mask(grid) -> np.ndarray:
    return grid.free_mask


def source_scores(b: SemanticBelief, ont: Ontology, gas: int) -> np.ndarray:
    """Unnormalized per-cell semantic scores for a single gas (zero on occupied cells)."""
    if b.n_classes != ont.n_classes:
        raise DomainMismatchError(
            f"belief has {b.n_classes} classes, ontology has {ont.n_classes}"
        )
    if not 0 <= gas < ont.n_gases:
        raise OutOfBoundsError(f"gas {gas} outside {ont.n_gases} gases")
    ratio = b.probs() / b.reference_prior
    scores = (ratio * ont.emission[gas]).sum(axis=1)
    scores[~_free_mask(b.grid)] = 0.0
    return scores


def mixture_scores(b: SemanticBelief, ont: Ontology, gas_belief) -> np.ndarray:
    w = np.asarray(gas_belief, dtype=np.float64)
    if w.shape != (ont.n_gases,):
        raise DomainMismatchError(f"gas belief has {w.size} entries, ontology has {ont.n_gases} gases")
    total = np.zeros(b.n_cells)
    for g in range(ont.n_gases):
        if w[g] > 0:
            total += w[g] * source_scores(b, ont, g)
    return total


def semantic_source(b: SemanticBelief, ont: Ontology, gas: int) -> np.ndarray:
    """p(source = c | semantic evidence) for a known gas type."""
    scores = source_scores(b, ont, gas)
    try:
        return normalize(scores)
    except AllZeroError:
        raise AllZeroError("no free cell can host the source under the current belief") from None


def semantic_source_mixture(b: SemanticBelief, ont: Ontology, gas_belief) -> np.ndarray:
    """Semantic source distribution when the gas type is itself uncertain.

    ``gas_belief`` is a distribution over the ontology's gases; the result
    mixes the per-gas scores with those weights before normalizing.
    """
    scores = mixture_scores(b, ont, gas_belief)
    try:
        return normalize(scores)
    except AllZeroError:
        raise AllZeroError("no free cell can host the source under the current belief") from None


def aggregate_columns(src, grid: VoxelGrid) -> np.ndarray:
    """Collapse a voxel source distribution onto the 2D cells of its columns."""
    p = np.asarray(src, dtype=np.float64)
    if p.shape != (grid.n_voxels,):
        raise DomainMismatchError(f"distribution has {p.size} entries, grid has {grid.n_voxels} voxels")
    out = p.reshape(grid.layers, grid.base.n_cells).sum(axis=0)
    out.setflags(write=False)
    return out


def fuse(olfaction, semantic) -> np.ndarray:
    """Combine olfactory and semantic source distributions by product and normalization."""
    a = np.asarray(olfaction, dtype=np.float64)
    b = np.asarray(semantic, dtype=np.float64)
    if a.shape != b.shape:
        raise DomainMismatchError(f"cannot fuse distributions of shapes {a.shape} and {b.shape}")
    try:
        return normalize(a * b)
    except AllZeroError:
        raise AllZeroError("olfactory and semantic estimates have disjoint support") from None


class Location(NamedTuple):
    x: float
    y: float
    std: float


def expected_location(src, grid) -> Location:
    """Probability-weighted mean of cell centers and the spread around it (meters)."""
    if isinstance(grid, VoxelGrid):
        src = aggregate_columns(src, grid)
    g: Grid2D = base_grid(grid)
    p = np.asarray(src, dtype=np.float64)
    if p.shape != (g.n_cells,):
        raise DomainMismatchError(f"distribution has {p.size} entries, grid has {g.n_cells} cells")
    mean = p @ g.centers
    sq = ((g.centers - mean) ** 2).sum(axis=1)
    return Location(float(mean[0]), float(mean[1]), float(np.sqrt(max(0.0, p @ sq))))
