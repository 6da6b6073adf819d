import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semgsl.core import (
    Grid2D,
    VoxelGrid,
    column_of,
    entropy,
    is_categorical,
    normalize,
    normalize_log,
)
from semgsl.errors import AllZeroError, InvalidWeightError, OutOfBoundsError

weights = st.lists(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False),
    min_size=1,
    max_size=12,
).filter(lambda w: sum(w) > 1e-300)


def test_normalize_symmetric():
    np.testing.assert_array_equal(normalize([2.0, 2.0]), [0.5, 0.5])


def test_normalize_scores_from_two_cell_example():
    # 1.48 / 2.48 and 1.0 / 2.48, evaluated by hand
    np.testing.assert_allclose(normalize([1.48, 1.0]), [0.59677, 0.40323], atol=1e-5)


def test_normalize_all_zero():
    with pytest.raises(AllZeroError):
        normalize([0.0, 0.0])


@pytest.mark.parametrize("bad", [[-1.0, 2.0], [np.nan, 1.0], [np.inf, 1.0], []])
def test_normalize_invalid(bad):
    with pytest.raises(InvalidWeightError):
        normalize(bad)


def test_normalize_output_is_read_only():
    p = normalize([1.0, 3.0])
    with pytest.raises(ValueError):
        p[0] = 1.0


def test_normalize_log_matches_linear():
    w = np.array([0.2, 0.0, 3.0, 1e-5])
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    np.testing.assert_allclose(normalize_log(lw), normalize(w), rtol=1e-14)
    with pytest.raises(AllZeroError):
        normalize_log([-np.inf, -np.inf])


def test_normalize_log_survives_underflow():
    lw = np.array([-2000.0, -2001.0])
    p = normalize_log(lw)
    np.testing.assert_allclose(p, [1 / (1 + math.exp(-1)), math.exp(-1) / (1 + math.exp(-1))])


@given(weights)
def test_normalize_idempotent(w):
    p = normalize(w)
    np.testing.assert_array_equal(normalize(p), p)
    assert is_categorical(p)


@given(weights, st.sampled_from([1e-6, 1.0, 1e6]))
def test_normalize_scale_invariant(w, k):
    np.testing.assert_allclose(normalize(np.array(w) * k), normalize(w), atol=1e-12, rtol=0)


@pytest.mark.parametrize(
    "p, h",
    [([1.0, 0.0], 0.0), ([0.5, 0.5], 1.0), ([0.25] * 4, 2.0)],
)
def test_entropy_examples(p, h):
    assert entropy(p) == pytest.approx(h, abs=1e-15)


@settings(max_examples=200)
@given(weights)
def test_entropy_bounded_by_uniform(w):
    p = normalize(w)
    assert 0.0 <= entropy(p) <= math.log2(len(p)) + 1e-12


def test_column_of_examples():
    g = VoxelGrid(Grid2D(2, 1), layers=3)
    assert column_of(g, 0) == 0
    assert column_of(g, 5) == 1
    with pytest.raises(OutOfBoundsError):
        column_of(g, 6)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4))
def test_column_of_partitions_voxels(w, h, layers):
    g = VoxelGrid(Grid2D(w, h), layers=layers)
    preimages = {c: set() for c in range(g.n_cells)}
    for v in range(g.n_voxels):
        preimages[column_of(g, v)].add(v)
    assert set().union(*preimages.values()) == set(range(g.n_voxels))
    assert sum(len(s) for s in preimages.values()) == g.n_voxels
    assert all(len(s) == layers for s in preimages.values())


def test_grid_geometry():
    g = Grid2D(3, 2, cell_size=0.5, origin=(1.0, -1.0))
    assert g.n_cells == 6
    assert g.center(0) == (1.25, -0.75)
    assert g.center(5) == (2.25, -0.25)
    assert g.cell_at(2.2, -0.3) == 5
    assert g.col_row(4) == (1, 1)
    with pytest.raises(OutOfBoundsError):
        g.cell_at(0.9, 0.0)


def test_grid_rejects_bad_shapes():
    with pytest.raises(ValueError):
        Grid2D(0, 3)
    with pytest.raises(ValueError):
        Grid2D(2, 2, cell_size=0.0)
    with pytest.raises(ValueError):
        Grid2D(2, 2, free_mask=[True, False])
