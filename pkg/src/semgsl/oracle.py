"""Exact inference by exhaustive enumeration, for certifying the fast estimators.

The model has one binary source indicator per cell, an object class per
cell, and a constraint variable that is 1 exactly when a single indicator
is set. Given the source indicator of its own cell, each object follows
either the ontology's emission row (source cell) or the cell's non-source
class prior. Each cell's observation depends only on that cell's object.
Every quantity below is obtained by summing the full joint over all source
configurations and all k**n object maps, so this is only usable for tiny
instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import normalize
from .errors import AllZeroError, DomainMismatchError, TooLargeError

MAX_STATES = 10**7


@dataclass
class JointInstance:
    """A small, fully specified instance of the model.

    priors:      (n, k) p(o_n | cell n is not the source)
    emission:    (g, k) or (k,) p(o_c | cell c is the source, gas)
    likelihoods: (n, k) p(z_n | o_n), up to a per-cell constant
    olfaction:   (n,)   p(gas readings | single source at c), optional
    gas_belief:  (g,)   weights over gas types, optional (default: first gas)
    free:        (n,)   cells allowed to be the source, optional
    source_rate: a-priori probability of each binary source indicator
    """

    priors: np.ndarray
    emission: np.ndarray
    likelihoods: np.ndarray
    olfaction: np.ndarray | None = None
    gas_belief: np.ndarray | None = None
    free: np.ndarray | None = None
    source_rate: float | None = None

    def __post_init__(self):
        self.priors = np.atleast_2d(np.asarray(self.priors, dtype=np.float64))
        self.emission = np.atleast_2d(np.asarray(self.emission, dtype=np.float64))
        self.likelihoods = np.atleast_2d(np.asarray(self.likelihoods, dtype=np.float64))
        n, k = self.priors.shape
        if self.likelihoods.shape != (n, k) or self.emission.shape[1] != k:
            raise DomainMismatchError("instance tables disagree on n or k")
        if self.gas_belief is None:
            self.gas_belief = np.eye(self.emission.shape[0])[0]
        self.gas_belief = np.asarray(self.gas_belief, dtype=np.float64)
        if self.gas_belief.shape != (self.emission.shape[0],):
            raise DomainMismatchError("gas belief does not match emission table")
        if self.olfaction is not None:
            self.olfaction = np.asarray(self.olfaction, dtype=np.float64)
            if self.olfaction.shape != (n,):
                raise DomainMismatchError("olfaction likelihood must have one entry per cell")
        self.free = np.ones(n, bool) if self.free is None else np.asarray(self.free, dtype=bool)
        if self.source_rate is None:
            self.source_rate = 1.0 / n
        if max(k, 2) ** n > MAX_STATES:
            raise TooLargeError(f"{k}**{n} object maps exceed the enumeration bound {MAX_STATES}")

    @property
    def n(self) -> int:
        return self.priors.shape[0]

    @property
    def k(self) -> int:
        return self.priors.shape[1]


def _maps(n: int, k: int) -> np.ndarray:
    # lexicographic in class indices so failures reproduce
    return np.array(list(itertools.product(range(k), repeat=n)), dtype=np.intp).reshape(-1, n)


def _source_prior(inst: JointInstance, s: tuple[int, ...]) -> float:
    """p(S = s) * p(constraint = 1 | s)."""
    if sum(s) != 1:
        return 0.0
    if any(si and not fi for si, fi in zip(s, inst.free)):
        return 0.0
    pi = inst.source_rate
    return pi ** sum(s) * (1.0 - pi) ** (inst.n - sum(s))


def _joint_terms(inst: JointInstance, use_olfaction: bool):
    """Joint weights split by (gas, single-source cell, map) plus the object-map prior pieces.

    Returns ``prior_part[g, c, M] = p(gamma) p(s_c) p(alpha|s_c) p(o_M | s_c, gamma)`` and
    ``evidence[c, M] = p(z | o_M) * p(readings | s_c)``.
    """
    n, k = inst.n, inst.k
    maps = _maps(n, k)
    rows = np.arange(n)
    non_source = inst.priors[rows, maps]  # (M, n)
    p_z = np.prod(inst.likelihoods[rows, maps], axis=1)
    n_gas = inst.emission.shape[0]
    prior_part = np.zeros((n_gas, n, maps.shape[0]))
    evidence = np.zeros((n, maps.shape[0]))
    for s in itertools.product((0, 1), repeat=n):
        ps = _source_prior(inst, s)
        if ps == 0.0:
            continue
        c = s.index(1)
        mask = np.array(s, dtype=bool)
        for g in range(n_gas):
            if inst.gas_belief[g] == 0:
                continue
            source = inst.emission[g][maps]  # (M, n)
            p_maps = np.prod(np.where(mask[None, :], source, non_source), axis=1)
            prior_part[g, c] = inst.gas_belief[g] * ps * p_maps
        g_lik = inst.olfaction[c] if (use_olfaction and inst.olfaction is not None) else 1.0
        evidence[c] = p_z * g_lik
    return prior_part, evidence


def semantic_source_bruteforce(inst: JointInstance) -> np.ndarray:
    """p(s_c | z) as sum over maps of p(s_c | o_M) * p(o_M | z), fully enumerated.

    Olfaction likelihoods, if present, are ignored.
    """
    prior_part, evidence = _joint_terms(inst, use_olfaction=False)
    # p(s_c | o_M, gamma, alpha): the observations are irrelevant once the map is known
    per_map = prior_part.sum(axis=1, keepdims=True)  # (g, 1, M)
    with np.errstate(invalid="ignore", divide="ignore"):
        p_s_given_map = np.where(per_map > 0, prior_part / per_map, 0.0)
    # p(o_M, gamma | z, alpha)
    post_map = (prior_part * evidence[None, :, :]).sum(axis=1)  # (g, M)
    total = post_map.sum()
    if total <= 0:
        raise AllZeroError("evidence has zero probability under the model")
    post_map = post_map / total
    out = (p_s_given_map * post_map[:, None, :]).sum(axis=(0, 2))
    return normalize(out)


def joint_posterior(inst: JointInstance) -> np.ndarray:
    """p(s_c | readings, z, constraint = 1) by summing the full joint."""
    prior_part, evidence = _joint_terms(inst, use_olfaction=True)
    weights = (prior_part * evidence[None, :, :]).sum(axis=(0, 2))
    return normalize(weights)
