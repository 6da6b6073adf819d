import math

import numpy as np
import pytest

from semgsl import belief as belief_mod
from semgsl.errors import AllZeroError, ScenarioError
from semgsl.estimation import semantic_source
from semgsl.infogain import Pose
from semgsl.scenarios import reference_kitchen
from semgsl.simulator import (
    _scripted_cells,
    _Search,
    candidate_poses,
    expand_path,
    observe,
    read_metrics_csv,
    read_trace_csv,
    run,
    sample_hit,
    scenario_from_dict,
    write_metrics_csv,
    write_trace_csv,
)


def small_doc(**over):
    """6 x 6 open room, oven in the bottom row, a countertop next to it."""
    truth = [["floor"] * 6 for _ in range(6)]
    truth[0][1] = "oven"
    truth[0][2] = "countertop"
    doc = {
        "name": "small",
        "grid": {"width": 6, "height": 6, "cell_size": 0.5},
        "ground_truth": truth,
        "source": [1, 0],
        "gas": "smoke",
        "wind": {"direction": 0.0, "speed": 0.5},
        "detector": {"accuracy": 0.8},
        "camera": {"fov_angle": math.pi / 2, "fov_range": 1.5},
        "steps": 12,
        "path": [[0, 5], [5, 5], [5, 2], [0, 2]],
    }
    doc.update(over)
    return doc


@pytest.fixture
def small(kitchen):
    scn = scenario_from_dict(small_doc(), kitchen)
    scn.check(kitchen)
    return scn


@pytest.fixture(scope="module")
def ref():
    return reference_kitchen()


def test_expand_path_moves_between_neighbors(small):
    cells = small.path
    for a, b in zip(cells, cells[1:]):
        (ca, ra), (cb, rb) = small.grid.col_row(a), small.grid.col_row(b)
        assert max(abs(ca - cb), abs(ra - rb)) == 1
    assert cells[0] == small.grid.cell_index(0, 5)
    assert cells[-1] == small.grid.cell_index(0, 2)


def test_expand_path_single_waypoint(small):
    assert expand_path(small.grid, [[3, 3]]) == (small.grid.cell_index(3, 3),)


def test_scripted_path_bounces_when_short(small):
    cells = _scripted_cells(small, 40)
    n = len(small.path)
    assert len(cells) == 41
    assert cells[:n] == list(small.path)
    assert cells[n] == small.path[-2]


def test_candidate_poses_interior_and_corner(small):
    assert len(candidate_poses(small, small.grid.cell_index(2, 2))) == 9 * 8
    assert len(candidate_poses(small, small.grid.cell_index(0, 0))) == 4 * 8


def test_sample_hit_extreme_rates(kitchen):
    rng = np.random.default_rng(0)
    always = scenario_from_dict(small_doc(plume={"p_d": 1.0, "p_fa": 1.0}), kitchen)
    never = scenario_from_dict(small_doc(plume={"p_d": 0.0, "p_fa": 0.0}), kitchen)
    assert all(sample_hit(always, (2.0, 2.0), rng).hit for _ in range(20))
    assert not any(sample_hit(never, (2.0, 2.0), rng).hit for _ in range(20))


def test_sample_hit_rate_matches_model(small):
    rng = np.random.default_rng(1)
    x = small.source_xy
    hits = np.mean([sample_hit(small, x, rng).hit for _ in range(4000)])
    assert hits == pytest.approx(0.9, abs=0.02)


def test_observe_identity_is_one_hot_truth(kitchen):
    k = kitchen.n_classes
    scn = scenario_from_dict(small_doc(detector={"matrix": np.eye(k).tolist()}), kitchen)
    pose = Pose(*scn.grid.center(scn.grid.cell_index(1, 2)), -math.pi / 2, math.pi, 2.0)
    obs = observe(scn, pose, np.random.default_rng(0))
    assert obs
    for o in obs:
        np.testing.assert_array_equal(o.likelihood, np.eye(k)[scn.truth[o.cell]])


def test_observe_nothing_visible(small):
    # pose off the cell center with a range shorter than the distance to any center
    pose = Pose(0.01, 0.01, 0.0, 2 * math.pi, 0.05)
    assert observe(small, pose, np.random.default_rng(0)) == []


def test_observe_is_deterministic(small):
    pose = Pose(1.25, 1.25, 0.0, math.pi, 2.0)
    a = observe(small, pose, np.random.default_rng(7))
    b = observe(small, pose, np.random.default_rng(7))
    assert [o.cell for o in a] == [o.cell for o in b]
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.likelihood, y.likelihood)


def test_zero_step_budget_gives_initial_row(small, kitchen):
    m = run(small, kitchen, "semantic", steps=0)
    assert len(m.rows) == 1 and m.rows[0].step == 0


@pytest.mark.parametrize("strategy", ["scripted", "infogain"])
def test_run_is_bit_identical(small, kitchen, strategy):
    a = run(small, kitchen, "semantic", strategy, seed=3)
    b = run(small, kitchen, "semantic", strategy, seed=3)
    assert a.rows == b.rows
    assert a.trace == b.trace
    if strategy == "infogain":
        assert a.trace and sum(r.chosen for r in a.trace) == small.steps


def test_metric_sanity(small, kitchen):
    for mode in ("olfaction", "semantic"):
        m = run(small, kitchen, mode, seed=5)
        assert len(m.rows) == small.steps + 1
        for r in m.rows:
            assert r.error_m >= 0 and r.std_m >= 0 and r.entropy_bits >= 0


def test_identity_detector_recovers_ground_truth(kitchen):
    k = kitchen.n_classes
    scn = scenario_from_dict(small_doc(detector={"matrix": np.eye(k).tolist()}), kitchen)
    b = belief_mod.init(scn.grid, kitchen)
    rng = np.random.default_rng(0)
    for c in range(scn.grid.n_cells):
        pose = Pose(*scn.grid.center(c), 0.0, 2 * math.pi, 0.1)
        b = belief_mod.update_many(b, observe(scn, pose, rng))
    np.testing.assert_array_equal(b.probs(), np.eye(k)[scn.truth])
    sem = semantic_source(b, kitchen, scn.gas)
    # the oven has the highest smoke emission of the classes present
    assert sem[scn.source] > 0.75
    assert np.argmax(sem) == scn.source


def test_voxel_scenario_runs(kitchen):
    layer = small_doc()["ground_truth"]
    upper = [["floor"] * 6 for _ in range(6)]
    upper[0][1] = "microwave"
    scn = scenario_from_dict(small_doc(grid={"width": 6, "height": 6, "cell_size": 0.5, "layers": 2}, ground_truth=[layer, upper]), kitchen)
    scn.check(kitchen)
    m = run(scn, kitchen, "semantic", seed=0)
    assert len(m.rows) == scn.steps + 1
    assert all(np.isfinite(r.error_m) for r in m.rows)


def test_fusion_fallback_keeps_olfaction(small, kitchen, monkeypatch):
    s = _Search(small, kitchen, "semantic", "global")
    monkeypatch.setattr(s, "semantic", lambda: (_ for _ in ()).throw(AllZeroError("forced")))
    out = s.fused()
    np.testing.assert_array_equal(out, s.olf.current())
    assert s.fallbacks == 1


@pytest.mark.parametrize(
    "over, match",
    [
        ({"source": [9, 0]}, "invalid scenario"),
        ({"ground_truth": [["floor"] * 6]}, "ground_truth"),
        ({"gas": "chlorine"}, "invalid scenario"),
        ({"grid": {"width": 6}}, "malformed"),
        ({"steps": -1}, "step budget"),
    ],
)
def test_malformed_scenarios(kitchen, over, match):
    with pytest.raises(ScenarioError, match=match):
        scenario_from_dict(small_doc(**over), kitchen)


def test_source_in_wall_rejected(kitchen):
    occ = ["." * 6] * 6
    occ[0] = ".#...."
    with pytest.raises(ScenarioError, match="not free"):
        scenario_from_dict(small_doc(occupancy=occ), kitchen)


def test_source_that_cannot_emit_rejected(kitchen):
    scn = scenario_from_dict(small_doc(source=[4, 4]), kitchen)
    with pytest.raises(ScenarioError, match="emit"):
        scn.check(kitchen)


def test_rooms_mode_needs_room_map(small, kitchen):
    with pytest.raises(ScenarioError, match="room map"):
        run(small, kitchen, "semantic+rooms")


def test_room_map_lowers_initial_error(ref, kitchen):
    without = run(ref, kitchen, "semantic", steps=0)
    with_rooms = run(ref, kitchen, "semantic+rooms", steps=0)
    assert with_rooms.rows[0].error_m < without.rows[0].error_m


def test_semantics_do_not_hurt_on_reference_seed(ref, kitchen):
    off = run(ref, kitchen, "olfaction", seed=ref.seed)
    on = run(ref, kitchen, "semantic", seed=ref.seed)
    assert on.final_error <= off.final_error


def test_metrics_and_trace_csv_round_trip(small, kitchen, tmp_path):
    m = run(small, kitchen, "semantic", "infogain", seed=1, steps=3)
    write_metrics_csv(m.rows, tmp_path / "m.csv")
    write_trace_csv(m.trace, tmp_path / "t.csv")
    assert read_metrics_csv(tmp_path / "m.csv") == m.rows
    assert read_trace_csv(tmp_path / "t.csv") == m.trace


def test_declaration_is_recorded(ref, kitchen):
    m = run(ref, kitchen, "semantic+rooms", seed=0)
    assert m.declared_step is not None
    assert m.declared_cell == ref.source
    assert m.rows[-1].step == ref.steps  # the run continues after declaring
