"""End-to-end replay: filtering, budget accrual, and scripted queries."""

import pytest

from beliefstate.config import EngineConfig
from beliefstate.core import Box3
from beliefstate.errors import ValidationError
from beliefstate.filters import FilterConfig
from beliefstate.replay import replay, run_queries
from beliefstate.scenelog import write_descriptor_table
from beliefstate.simkit import generate, make_episode_spec

from conftest import BLURRED, axis, make_hyp, make_scene


def _config(**overrides):
    return EngineConfig().apply_overrides(overrides)


def _blur_episode():
    spec = make_episode_spec(n_objects=4, n_observations=10, n_pick_place=1,
                             blur_fraction=0.3, seed=5)
    return generate(spec)[0]


def test_blur_skip_accounting_is_exact():
    scenes = _blur_episode()
    result = replay(scenes, _config(**{"filters.static_skip_sim": None}))
    report = result.report()
    assert report["scenes"] == 13
    assert report["processed"] == 10
    assert report["skip_reasons"] == {"blur": 3}
    assert report["objects"] == 4
    assert report["hypotheses"] == 52
    assert sum(d.new_objects for d in result.decisions) == 4
    # each skipped second converts to budget at the default rate
    assert report["budget"]["accrued_total"] == pytest.approx(3.0)


def test_disabling_filters_admits_spurious_objects():
    scenes = _blur_episode()
    result = replay(scenes, _config(**{"filters.enabled": False}))
    report = result.report()
    assert report["processed"] == 13
    assert report["skip_reasons"] == {}
    assert report["objects"] > 4


def test_static_filter_skips_unchanged_scenes():
    scenes = [make_scene(float(t), [make_hyp("h0")]) for t in range(1, 5)]
    result = replay(scenes)
    assert result.report()["skip_reasons"] == {"static": 3}
    assert result.report()["objects"] == 1


def test_budget_accrues_on_skips_gaps_and_idle_activity():
    hyp = [make_hyp("h0")]
    scenes = [
        make_scene(1.0, hyp),                     # first scene: no gap
        make_scene(2.0, hyp),                     # busy + processed: nothing
        make_scene(12.0, hyp),                    # 10 s gap > idle_gap
        make_scene(13.0, hyp, activity="idle"),   # idle activity
        make_scene(14.0, hyp, blur=BLURRED),      # skipped scene
    ]
    result = replay(scenes, _config(**{"filters.static_skip_sim": None}))
    snapshot = result.report()["budget"]
    assert snapshot["accrued_total"] == pytest.approx(12.0)
    assert snapshot["spent_total"] == 0.0
    assert result.report()["skip_reasons"] == {"blur": 1}


def test_region_filter_drops_out_of_bounds_hypotheses():
    scenes = [make_scene(1.0, [
        make_hyp("h0"),
        make_hyp("h1", pose=(1.5, 0, 0.5, 0, 0, 0), color="blue",
                 class_axis=1),
    ])]
    config = EngineConfig(filters=FilterConfig(
        regions=(Box3((-0.5, -0.5, 0.0), (0.5, 0.5, 1.0)),),
        static_skip_sim=None))
    result = replay(scenes, config)
    assert result.decisions[0].dropped_hypotheses == 1
    assert result.report()["objects"] == 1


def _two_object_scene(ts, target_axis=0):
    # only the classifier descriptor degrades; the geometry descriptor stays
    # clean so the sighting still merges into the same object
    return make_scene(ts, [
        make_hyp("h0", color="red", class_axis=target_axis, vfh_axis=0),
        make_hyp("h1", pose=(1.5, 0, 0.5, 0, 0, 0), color="blue",
                 class_axis=1),
    ])


def test_integration_gains_objects_after_descriptor_dropout(tmp_path):
    """After a long gap the target's descriptor comes back unusable; only the
    aggregated history still answers the class query."""
    table = tmp_path / "knn.jsonl"
    write_descriptor_table([(axis(0), "mug"), (axis(1), "plate")], table)
    config = _config(**{"annotators.knn_table": str(table),
                        "filters.static_skip_sim": None})
    scenes = [_two_object_scene(float(t)) for t in range(1, 5)]
    scenes.append(_two_object_scene(65.0, target_axis=7))
    script = [(4.5, "(detect (an object (class mug)))"),
              (66.0, "(detect (an object (class mug)))")]
    result = replay(scenes, config, script=script)

    target = result.episode.owner_of(1.0, "h0")
    assert result.episode.owner_of(65.0, "h0") == target  # merged over gap
    early, late = result.transcript
    assert early.error is None and late.error is None
    assert early.answers == [(target, "h0")]
    assert early.one_shot == [(target, "h0")]
    assert early.gained_objects == []
    assert late.answers == [(target, "h0")]
    assert late.one_shot == []
    assert late.gained_objects == [target]

    report = result.report()
    assert report["budget"]["accrued_total"] == pytest.approx(61.0)
    assert report["budget"]["spent_total"] == pytest.approx(3.0)
    assert report["pending_queries"] == []


def test_queries_stall_honestly_without_budget():
    scenes = [make_scene(float(t), [make_hyp("h0")]) for t in range(1, 4)]
    script = [(3.5, "(detect (an object (class mug)))")]
    result = replay(scenes, _config(**{"filters.static_skip_sim": None}),
                    script=script)
    assert result.transcript[0].answers == []
    assert result.report()["pending_queries"] == [{
        "query": "(detect (an object (class mug)))",
        "enqueued_at": 3.0,
        "low_water": 3.0,
    }]


def test_query_before_first_scene_reports_error():
    scenes = [make_scene(1.0, [make_hyp("h0")])]
    outcomes = run_queries(scenes, [(0.5, "(detect (an object (class mug)))")],
                           _config(**{"filters.static_skip_sim": None}))
    assert outcomes[0].error == "no scene logged yet"
    assert outcomes[0].answers == []


def test_malformed_query_is_recorded_not_raised():
    scenes = [make_scene(1.0, [make_hyp("h0")])]
    outcomes = run_queries(scenes, [(1.0, "(grab (an object (class mug)))")],
                           _config(**{"filters.static_skip_sim": None}))
    assert outcomes[0].error is not None
    assert "col 2" in outcomes[0].error


def test_script_must_be_time_ordered():
    scenes = [make_scene(1.0, [make_hyp("h0")])]
    with pytest.raises(ValidationError):
        replay(scenes, script=[(2.0, "(detect (an object (class mug)))"),
                               (1.0, "(detect (an object (class mug)))")])


def test_replay_is_deterministic():
    scenes = _blur_episode()
    script = [(5.5, "(detect (an object (color red)))"),
              (11.0, "(detect (an object (color blue)))")]
    config = _config(**{"filters.static_skip_sim": None})
    first = replay(scenes, config, script=script).report()
    second = replay(scenes, _config(**{"filters.static_skip_sim": None}),
                    script=script).report()
    assert first == second
