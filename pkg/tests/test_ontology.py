import json

import numpy as np
import pytest

from semgsl.errors import OntologyError, OutOfBoundsError, UnknownRoomError
from semgsl.ontology import (
    Ontology,
    emission_prob,
    load_ontology,
    prior_for_cell,
    save_ontology,
    validate,
)

SMOKE_LISTING = {"oven": 0.4, "microwave": 0.25, "refrigerator": 0.3, "countertop": 0.05}


def listing_ontology():
    return Ontology.from_dict(
        {"classes": list(SMOKE_LISTING), "gases": ["smoke"], "emission": {"smoke": SMOKE_LISTING}}
    )


def test_kitchen_emission_values(kitchen):
    smoke = kitchen.gas_id("smoke")
    assert emission_prob(kitchen, kitchen.class_id("oven"), smoke) == 0.4
    assert emission_prob(kitchen, kitchen.class_id("countertop"), smoke) == 0.05
    assert emission_prob(kitchen, kitchen.class_id("microwave"), smoke) == 0.25
    assert emission_prob(kitchen, kitchen.class_id("refrigerator"), smoke) == 0.3


def test_single_class_emission_is_one():
    ont = Ontology.from_dict({"classes": ["box"], "gases": ["a", "b"], "emission": {"a": {"box": 1}, "b": {"box": 1}}})
    assert emission_prob(ont, 0, 0) == 1.0 and emission_prob(ont, 0, 1) == 1.0


def test_emission_prob_bounds(kitchen):
    with pytest.raises(OutOfBoundsError):
        emission_prob(kitchen, kitchen.n_classes, 0)
    with pytest.raises(OutOfBoundsError):
        emission_prob(kitchen, 0, kitchen.n_gases)


def test_smoke_listing_is_valid():
    ont = listing_ontology()
    assert validate(ont) == []
    # no priors given: equiprobable classes
    np.testing.assert_allclose(ont.class_priors, 0.25)


def test_emission_rows_sum_to_one(kitchen):
    for g in range(kitchen.n_gases):
        total = sum(emission_prob(kitchen, i, g) for i in range(kitchen.n_classes))
        assert abs(total - 1.0) <= 1e-9


def test_validate_short_row():
    ont = Ontology(["a", "b"], ["g"], [0.5, 0.5], [[0.6, 0.3]])
    v = validate(ont)
    assert len(v) == 1 and "emission[g]" in v[0]


def test_validate_negative_prior():
    ont = Ontology(["a", "b"], ["g"], [-0.5, 1.5], [[0.6, 0.4]])
    v = validate(ont)
    assert len(v) == 1 and "class_priors" in v[0]


def test_validate_bad_room_row():
    ont = Ontology(["a", "b"], ["g"], [0.5, 0.5], [[0.6, 0.4]], ["hall"], [[0.2, 0.2]])
    assert validate(ont) == ["room_priors[hall]: sums to 0.4, expected 1"]


def test_loader_rejects_invalid(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"classes": ["a", "b"], "gases": ["g"], "emission": {"g": {"a": 0.9}}}))
    with pytest.raises(OntologyError) as err:
        load_ontology(path)
    assert "emission[g]" in str(err.value)


def test_loader_rejects_unknown_names():
    with pytest.raises(OntologyError):
        Ontology.from_dict({"classes": ["a"], "gases": ["g"], "emission": {"g": {"zzz": 1.0}}})
    with pytest.raises(OntologyError):
        Ontology.from_dict({"classes": ["a"], "gases": ["g"], "emission": {"h": {"a": 1.0}}})


def test_roundtrip(tmp_path, kitchen):
    path = tmp_path / "k.json"
    save_ontology(kitchen, path)
    again = load_ontology(path)
    assert again.classes == kitchen.classes and again.rooms == kitchen.rooms
    np.testing.assert_array_equal(again.emission, kitchen.emission)
    np.testing.assert_array_equal(again.room_priors, kitchen.room_priors)


def test_prior_for_cell(kitchen):
    np.testing.assert_array_equal(prior_for_cell(kitchen), kitchen.class_priors)
    kid = kitchen.room_id("kitchen")
    np.testing.assert_array_equal(prior_for_cell(kitchen, kid), kitchen.room_priors[kid])
    with pytest.raises(UnknownRoomError):
        prior_for_cell(kitchen, len(kitchen.rooms))
    # without a room table every cell falls back to the class priors
    ont = listing_ontology()
    np.testing.assert_array_equal(prior_for_cell(ont, 3), ont.class_priors)


def test_prior_for_cell_is_categorical(kitchen):
    for r in [None, *range(len(kitchen.rooms))]:
        p = prior_for_cell(kitchen, r)
        assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-9
