"""Spatial discretization and categorical-distribution primitives.

Distributions are plain float64 numpy arrays. Functions that produce a
distribution return a read-only array so snapshots can be shared freely.
Cells are indexed row-major (``cell = row * width + col``); voxels are
layer-major (``voxel = layer * n_cells + cell``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllZeroError, InvalidWeightError, OutOfBoundsError

EPS = 1e-12
SUM_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def normalize(weights) -> np.ndarray:
    """Scale non-negative weights so they sum to one.

    Raises InvalidWeightError on negative/NaN/inf entries and AllZeroError
    when every weight is zero.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise InvalidWeightError(f"expected a non-empty vector, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidWeightError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise AllZeroError("all weights are zero")
    # already normalized up to rounding: pass through, which keeps normalize idempotent
    if abs(total - 1.0) <= 4 * np.finfo(np.float64).eps * w.size:
        return _frozen(w.copy())
    return _frozen(w / total)


def normalize_log(log_weights) -> np.ndarray:
    """Normalize a vector of log-weights (``-inf`` allowed for zero mass)."""
    lw = np.asarray(log_weights, dtype=np.float64)
    if lw.ndim != 1 or lw.size == 0:
        raise InvalidWeightError(f"expected a non-empty vector, got shape {lw.shape}")
    if np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise InvalidWeightError("log-weights must not be NaN or +inf")
    top = lw.max()
    if top == -np.inf:
        raise AllZeroError("all weights are zero")
    return normalize(np.exp(lw - top))


def is_categorical(p, tol: float = SUM_TOL) -> bool:
    a = np.asarray(p, dtype=np.float64)
    return (
        a.ndim == 1
        and a.size >= 1
        and bool(np.all(np.isfinite(a)))
        and bool(np.all(a >= 0))
        and bool(np.all(a <= 1))
        and abs(a.sum() - 1.0) <= tol
    )


def entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 taken as 0."""
    a = np.asarray(p, dtype=np.float64)
    nz = a[a > 0]
    return float(max(0.0, -np.sum(nz * np.log2(nz))))


def uniform(size: int, mask=None) -> np.ndarray:
    """Uniform distribution over ``size`` items, optionally restricted to ``mask``."""
    w = np.ones(size) if mask is None else np.asarray(mask, dtype=np.float64)
    return normalize(w)


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Regular 2D grid of square cells.

    ``free_mask`` has one boolean per cell (row-major); False marks walls or
    other space that cannot host the source. ``origin`` is the world
    position of the grid's lower-left corner.
    """

    width: int
    height: int
    cell_size: float = 1.0
    free_mask: np.ndarray | None = None
    origin: tuple[float, float] = (0.0, 0.0)
    _centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid needs width, height >= 1")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        n = self.width * self.height
        if self.free_mask is None:
            mask = np.ones(n, dtype=bool)
        else:
            mask = np.array(self.free_mask, dtype=bool).reshape(-1)
            if mask.size != n:
                raise ValueError(f"free_mask has {mask.size} entries, grid has {n} cells")
        object.__setattr__(self, "free_mask", _frozen(mask))
        idx = np.arange(n)
        cols, rows = idx % self.width, idx // self.width
        centers = np.column_stack(
            [
                self.origin[0] + (cols + 0.5) * self.cell_size,
                self.origin[1] + (rows + 0.5) * self.cell_size,
            ]
        )
        object.__setattr__(self, "_centers", _frozen(centers))

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def centers(self) -> np.ndarray:
        """(n_cells, 2) array of cell-center coordinates in meters."""
        return self._centers

    def check_cell(self, c: int) -> int:
        if not 0 <= c < self.n_cells:
            raise OutOfBoundsError(f"cell {c} outside grid of {self.n_cells} cells")
        return int(c)

    def cell_index(self, col: int, row: int) -> int:
        if not (0 <= col < self.width and 0 <= row < self.height):
            raise OutOfBoundsError(f"cell ({col}, {row}) outside {self.width}x{self.height} grid")
        return row * self.width + col

    def col_row(self, c: int) -> tuple[int, int]:
        self.check_cell(c)
        return c % self.width, c // self.width

    def center(self, c: int) -> tuple[float, float]:
        self.check_cell(c)
        x, y = self._centers[c]
        return float(x), float(y)

    def cell_at(self, x: float, y: float) -> int:
        """Cell containing world point (x, y); OutOfBoundsError outside the grid."""
        col = int(np.floor((x - self.origin[0]) / self.cell_size))
        row = int(np.floor((y - self.origin[1]) / self.cell_size))
        return self.cell_index(col, row)

    def is_free(self, c: int) -> bool:
        return bool(self.free_mask[self.check_cell(c)])


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Stack of ``layers`` voxel slabs over a 2D base grid; each column is one cell."""

    base: Grid2D
    layers: int = 1

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")

    @property
    def n_cells(self) -> int:
        return self.base.n_cells

    @property
    def n_voxels(self) -> int:
        return self.base.n_cells * self.layers

    @property
    def free_mask(self) -> np.ndarray:
        """Per-voxel mask: a voxel is free when its column's cell is free."""
        return np.tile(self.base.free_mask, self.layers)

    def voxel_index(self, cell: int, layer: int) -> int:
        self.base.check_cell(cell)
        if not 0 <= layer < self.layers:
            raise OutOfBoundsError(f"layer {layer} outside {self.layers} layers")
        return layer * self.base.n_cells + cell

    def check_voxel(self, v: int) -> int:
        if not 0 <= v < self.n_voxels:
            raise OutOfBoundsError(f"voxel {v} outside grid of {self.n_voxels} voxels")
        return int(v)


def column_of(grid: VoxelGrid, v: int) -> int:
    """Cell id of the vertical column holding voxel ``v``."""
    grid.check_voxel(v)
    return int(v) % grid.base.n_cells


def columns(grid: VoxelGrid) -> np.ndarray:
    """Cell id for every voxel, in voxel order."""
    return np.tile(np.arange(grid.base.n_cells), grid.layers)


def domain_size(grid) -> int:
    return grid.n_voxels if isinstance(grid, VoxelGrid) else grid.n_cells


def base_grid(grid) -> Grid2D:
    return grid.base if isinstance(grid, VoxelGrid) else grid
