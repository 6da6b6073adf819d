"""Builders shared by the oracle-equivalence tests."""

import numpy as np

from semgsl.belief import SemanticBelief, SemanticObservation, init, update
from semgsl.core import Grid2D
from semgsl.infogain import InfoState
from semgsl.ontology import Ontology
from semgsl.oracle import JointInstance


def random_instance(rng, n, k, n_gases=1, olfaction=True, sparse=False):
    priors = rng.random((n, k)) + 0.05
    priors /= priors.sum(axis=1, keepdims=True)
    emission = rng.random((n_gases, k))
    if sparse:
        emission[:, 0] = 0.0
    emission /= emission.sum(axis=1, keepdims=True)
    likelihoods = rng.random((n, k)) + 1e-3
    gas = rng.random(n_gases)
    return JointInstance(
        priors=priors,
        emission=emission,
        likelihoods=likelihoods,
        olfaction=rng.random(n) + 1e-3 if olfaction else None,
        gas_belief=gas / gas.sum(),
    )


def fast_path_inputs(inst: JointInstance):
    """Belief and ontology equivalent to an oracle instance.

    The belief of each cell is its observation likelihood times its
    non-source prior, and that prior is what the scores divide by.
    """
    grid = Grid2D(inst.n, 1, free_mask=inst.free)
    post = inst.likelihoods * inst.priors
    post /= post.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        belief = SemanticBelief(grid, np.log(post), inst.priors)
    k, g = inst.k, inst.emission.shape[0]
    ont = Ontology([f"c{i}" for i in range(k)], [f"g{j}" for j in range(g)], np.full(k, 1 / k), inst.emission)
    return belief, ont


def random_state(rng, kitchen, fused=True, occupied=False):
    grid = Grid2D(5, 4, free_mask=(rng.random(20) > 0.2) if occupied else None)
    b = init(grid, kitchen, rng.integers(0, len(kitchen.rooms), 20))
    for c in range(20):
        if rng.random() < 0.7:
            b = update(b, SemanticObservation(c, rng.random(kitchen.n_classes) ** 3 + 1e-3))
    if rng.random() < 0.3:
        b = b.with_cell(0, np.eye(kitchen.n_classes)[int(rng.integers(kitchen.n_classes))])
    olf = rng.random(20) * grid.free_mask
    gas = rng.dirichlet([1, 1])
    return InfoState(b, kitchen, gas, olf / olf.sum(), fused=fused)
