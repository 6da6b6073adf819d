import pytest

from semgsl.ontology import Ontology, kitchen_ontology


@pytest.fixture
def kitchen():
    return kitchen_ontology()


@pytest.fixture
def oven_counter():
    """Two classes, uniform priors, emission (0.8, 0.2) for a single gas."""
    return Ontology(["oven", "countertop"], ["smoke"], [0.5, 0.5], [[0.8, 0.2]])
