"""Per-cell object-class belief under sequential noisy observations."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import EPS, SUM_TOL, VoxelGrid, base_grid, domain_size, normalize
from .errors import AllZeroError, DomainMismatchError, InvalidWeightError, OutOfBoundsError
from .ontology import Ontology, prior_for_cell


@dataclass(frozen=True)
class SemanticObservation:
    """Evidence about one cell (or voxel): ``likelihood[i]`` is proportional to p(z | class i)."""

    cell: int
    likelihood: np.ndarray

    def __post_init__(self):
        lik = np.array(self.likelihood, dtype=np.float64)
        if lik.ndim != 1 or not np.all(np.isfinite(lik)) or np.any(lik < 0):
            raise InvalidWeightError("likelihood must be a finite non-negative vector")
        if not np.any(lik > 0):
            raise InvalidWeightError("likelihood needs at least one positive entry")
        lik.setflags(write=False)
        object.__setattr__(self, "likelihood", lik)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Row-stochastic detector model, ``matrix[true, detected]``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"confusion matrix must be square, got {m.shape}")
        if np.any(m < 0) or np.any(m > 1) or np.any(np.abs(m.sum(axis=1) - 1) > SUM_TOL):
            raise ValueError("confusion matrix rows must be distributions")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def symmetric(cls, k: int, accuracy: float) -> "ConfusionMatrix":
        """Correct label with probability ``accuracy``, errors spread evenly."""
        if k == 1:
            return cls(np.ones((1, 1)))
        off = (1.0 - accuracy) / (k - 1)
        m = np.full((k, k), off)
        np.fill_diagonal(m, accuracy)
        return cls(m)


def likelihood_from_detection(cm: ConfusionMatrix, detected: int) -> np.ndarray:
    """p(detected | true class i) for every i: column ``detected`` of the matrix."""
    if not 0 <= detected < cm.k:
        raise OutOfBoundsError(f"detected label {detected} outside {cm.k} classes")
    return cm.matrix[:, detected].copy()


class SemanticBelief:
    """Snapshot of p(o_c | z_c) for every cell or voxel of ``grid``.

    Weights are kept in log-space, one row per cell. ``reference_prior`` holds
    the class prior each cell divides by when scoring source candidates.
    Updates return new snapshots; the arrays of a snapshot are never mutated.
    """

    def __init__(self, grid, log_weights: np.ndarray, reference_prior: np.ndarray):
        n = domain_size(grid)
        lw = np.asarray(log_weights, dtype=np.float64)
        ref = np.asarray(reference_prior, dtype=np.float64)
        if lw.ndim != 2 or lw.shape[0] != n or ref.shape != lw.shape:
            raise DomainMismatchError(
                f"belief arrays {lw.shape}/{ref.shape} do not match {n} grid elements"
            )
        lw.setflags(write=False)
        ref.setflags(write=False)
        self.grid = grid
        self.log_weights = lw
        self.reference_prior = ref

    @property
    def n_cells(self) -> int:
        return self.log_weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.log_weights.shape[1]

    def probs(self) -> np.ndarray:
        """(n, k) array of per-cell class distributions."""
        lw = self.log_weights
        w = np.exp(lw - lw.max(axis=1, keepdims=True))
        return w / w.sum(axis=1, keepdims=True)

    def cell(self, c: int) -> np.ndarray:
        if not 0 <= c < self.n_cells:
            raise OutOfBoundsError(f"cell {c} outside belief of {self.n_cells} cells")
        row = self.log_weights[c]
        return normalize(np.exp(row - row.max()))

    def with_cell(self, c: int, probs) -> "SemanticBelief":
        """Copy with cell ``c`` overwritten by the distribution ``probs``."""
        lw = self.log_weights.copy()
        with np.errstate(divide="ignore"):
            lw[c] = np.log(normalize(probs))
        return SemanticBelief(self.grid, lw, self.reference_prior)


def init(grid, ont: Ontology, room_map=None, denominator: str = "global") -> SemanticBelief:
    """Belief before any camera evidence.

    Each cell starts at its (room-conditioned) class prior. ``room_map`` is a
    per-cell sequence of room ids or None; for voxel grids it is indexed by
    column. ``denominator`` picks the prior that source scoring divides by:
    ``"global"`` (the ontology's class priors) or ``"cell"`` (the cell's own
    initial prior).
    """
    if denominator not in ("global", "cell"):
        raise ValueError(f"denominator must be 'global' or 'cell', got {denominator!r}")
    base = base_grid(grid)
    if room_map is None:
        cell_priors = np.tile(ont.class_priors, (base.n_cells, 1))
    else:
        if len(room_map) != base.n_cells:
            raise DomainMismatchError(
                f"room map has {len(room_map)} entries, grid has {base.n_cells} cells"
            )
        cell_priors = np.array([prior_for_cell(ont, r) for r in room_map])
    layers = grid.layers if isinstance(grid, VoxelGrid) else 1
    priors = np.tile(cell_priors, (layers, 1))
    ref = np.tile(ont.class_priors, (priors.shape[0], 1)) if denominator == "global" else priors
    with np.errstate(divide="ignore"):
        lw = np.log(priors)
    return SemanticBelief(grid, lw, np.maximum(ref, EPS))


def _apply(lw: np.ndarray, obs: SemanticObservation, k: int) -> None:
    if not 0 <= obs.cell < lw.shape[0]:
        raise OutOfBoundsError(f"observation of cell {obs.cell} outside {lw.shape[0]} cells")
    if obs.likelihood.shape != (k,):
        raise DomainMismatchError(f"likelihood has {obs.likelihood.size} classes, belief has {k}")
    with np.errstate(divide="ignore"):
        row = lw[obs.cell] + np.log(obs.likelihood)
    top = row.max()
    if top == -np.inf:
        raise AllZeroError(f"observation of cell {obs.cell} contradicts its belief")
    # keep rows anchored at log-sum 0 so long sequences never drift out of range
    lw[obs.cell] = row - (top + np.log(np.exp(row - top).sum()))


def update(b: SemanticBelief, obs: SemanticObservation) -> SemanticBelief:
    """Bayes update of one cell: new belief is proportional to likelihood times old."""
    lw = b.log_weights.copy()
    _apply(lw, obs, b.n_classes)
    return SemanticBelief(b.grid, lw, b.reference_prior)


def update_many(b: SemanticBelief, observations: Iterable[SemanticObservation]) -> SemanticBelief:
    """Apply a batch of observations in order, copying the arrays once."""
    lw = b.log_weights.copy()
    for obs in observations:
        _apply(lw, obs, b.n_classes)
    return SemanticBelief(b.grid, lw, b.reference_prior)


def dump_belief_csv(b: SemanticBelief, path, class_names=None) -> None:
    """Write ``cell,class,prob`` rows, cells in index order."""
    probs = b.probs()
    names = list(class_names) if class_names is not None else list(range(b.n_classes))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell", "class", "prob"])
        for c in range(b.n_cells):
            for i in range(b.n_classes):
                w.writerow([c, names[i], repr(float(probs[c, i]))])


def read_belief_csv(path, class_names=None) -> np.ndarray:
    """Read a belief dump back into an (n, k) array."""
    index = {str(n): i for i, n in enumerate(class_names)} if class_names is not None else None
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["cell", "class", "prob"]:
            raise DomainMismatchError(f"{path}: expected header cell,class,prob")
        for r in reader:
            i = index[r["class"]] if index is not None else int(r["class"])
            rows.append((int(r["cell"]), i, float(r["prob"])))
    n = max(r[0] for r in rows) + 1
    k = max(r[1] for r in rows) + 1
    out = np.zeros((n, k))
    for c, i, p in rows:
        out[c, i] = p
    return out
