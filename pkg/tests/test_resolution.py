"""Entity resolution: greedy assignment, fast-match gates, scene resolution.

``naive_greedy`` below is an independent reference implementation of the
one-to-one descending-score assignment; the library version is checked
against it on random inputs.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beliefstate.core import BeliefObject
from beliefstate.errors import ValidationError
from beliefstate.metrics import WeightTable
from beliefstate.resolution import (
    ResolutionConfig,
    fast_match,
    greedy_assignment,
    pair_score,
    resolve_scene,
)

from conftest import make_episode, make_hyp, make_scene


def naive_greedy(scored, threshold):
    """Reference: repeatedly take the best remaining admissible pair."""
    remaining = list(scored)
    used_h, used_o = set(), set()
    out = []
    while True:
        candidates = [s for s in remaining
                      if s[0] >= threshold
                      and s[2] not in used_h and s[1] not in used_o]
        if not candidates:
            return out
        best = min(candidates, key=lambda s: (-s[0], s[1], s[2]))
        used_h.add(best[2])
        used_o.add(best[1])
        out.append((best[2], best[1], best[0]))


def test_greedy_assignment_frozen_trace():
    """Hand-worked example: the strongest pair locks out both weaker uses."""
    scored = [
        (0.9, 1, "h1"),
        (0.85, 1, "h2"),
        (0.8, 2, "h1"),
        (0.4, 2, "h2"),
    ]
    assert greedy_assignment(scored, threshold=0.7) == [("h1", 1, 0.9)]
    # with a permissive threshold h2 falls through to object 2
    assert greedy_assignment(scored, threshold=0.3) == [
        ("h1", 1, 0.9), ("h2", 2, 0.4)]


def test_greedy_assignment_tie_breaks():
    scored = [(0.8, 2, "h1"), (0.8, 1, "h1"), (0.8, 1, "h0")]
    # equal scores: lower oid first, then lower hyp_id
    assert greedy_assignment(scored, threshold=0.5) == [
        ("h0", 1, 0.8), ("h1", 2, 0.8)]


def test_greedy_assignment_threshold_boundary():
    assert greedy_assignment([(0.7, 0, "h0")], threshold=0.7) == [
        ("h0", 0, 0.7)]
    assert greedy_assignment([(0.699, 0, "h0")], threshold=0.7) == []


scored_strategy = st.lists(
    st.tuples(st.floats(min_value=0, max_value=1).map(lambda x: round(x, 3)),
              st.integers(min_value=0, max_value=5),
              st.sampled_from(["h0", "h1", "h2", "h3", "h4"])),
    max_size=30)


@settings(max_examples=300)
@given(scored_strategy, st.floats(min_value=0, max_value=1))
def test_greedy_assignment_matches_reference(scored, threshold):
    got = greedy_assignment(scored, threshold)
    assert got == naive_greedy(scored, threshold)


@given(scored_strategy, st.floats(min_value=0, max_value=1))
def test_greedy_assignment_one_to_one(scored, threshold):
    got = greedy_assignment(scored, threshold)
    hyps = [h for h, _, _ in got]
    oids = [o for _, o, _ in got]
    assert len(hyps) == len(set(hyps))
    assert len(oids) == len(set(oids))
    assert all(s >= threshold for _, _, s in got)


@given(scored_strategy,
       st.floats(min_value=0, max_value=1),
       st.floats(min_value=0, max_value=1))
def test_greedy_assignment_threshold_monotone(scored, t1, t2):
    lo, hi = min(t1, t2), max(t1, t2)
    accepted_hi = set(greedy_assignment(scored, hi))
    accepted_lo = set(greedy_assignment(scored, lo))
    assert accepted_hi <= accepted_lo


def _cfg(**kwargs):
    return ResolutionConfig(weights=WeightTable(), **kwargs)


def _obj(oid, hyp, last_seen):
    return BeliefObject(oid=oid, last_hypothesis=hyp, last_pose=hyp.pose(),
                        last_seen=last_seen)


def test_fast_match_requires_both_gates():
    hyp = make_hyp("h0")
    scene = make_scene(10.0, [hyp])
    near_recent = _obj(0, make_hyp("x"), last_seen=9.0)
    near_stale = _obj(1, make_hyp("x"), last_seen=1.0)  # 9 s > 5 s gate
    far_recent = _obj(2, make_hyp("x", pose=(0.5, 0, 0.5, 0, 0, 0)),
                      last_seen=9.0)  # 0.5 m > 0.2 m gate
    accepted, residual_hyps, residual_oids = fast_match(
        scene, [near_recent, near_stale, far_recent], _cfg())
    assert accepted == [("h0", 0, 1.0)]
    assert residual_hyps == []
    assert sorted(residual_oids) == [1, 2]


def test_fast_match_respects_similarity_threshold():
    # inside both gates but visually different enough to stay below 0.7:
    # same pose, different color + both descriptors differ
    hyp = make_hyp("h0", color="blue", class_axis=1)
    scene = make_scene(10.0, [hyp])
    obj = _obj(0, make_hyp("x", color="red", class_axis=0), last_seen=9.5)
    score = pair_score(hyp, obj, _cfg())
    assert score < 0.7
    accepted, residual_hyps, _ = fast_match(scene, [obj], _cfg())
    assert accepted == []
    assert residual_hyps == ["h0"]


def test_resolve_scene_requires_appended_scene():
    episode = make_episode([])
    scene = make_scene(1.0, [make_hyp("h0")])
    with pytest.raises(ValidationError):
        resolve_scene(episode, scene, _cfg())


def test_resolve_scene_new_then_fast_then_greedy():
    s1 = make_scene(1.0, [make_hyp("h0")])
    s2 = make_scene(2.0, [make_hyp("h0")])
    s3 = make_scene(20.0, [make_hyp("h0")])  # 18 s later: time gate fails
    episode = make_episode([s1])
    (a1,) = resolve_scene(episode, s1, _cfg())
    assert a1.via == "new" and a1.oid == 0

    episode.append_scene(s2)
    (a2,) = resolve_scene(episode, s2, _cfg())
    assert a2.via == "fast" and a2.oid == 0 and a2.score == 1.0

    episode.append_scene(s3)
    (a3,) = resolve_scene(episode, s3, _cfg())
    assert a3.via == "greedy" and a3.oid == 0 and a3.score == 1.0


def test_resolve_scene_merges_relocated_object():
    """A moved identical object re-merges: similarity 0.75 >= 0.7."""
    s1 = make_scene(1.0, [make_hyp("h0")])
    s2 = make_scene(2.0, [make_hyp("h0", pose=(0.5, 0.0, 0.5, 0.0, 0.0, 0.0))])
    episode = make_episode([s1])
    resolve_scene(episode, s1, _cfg())
    episode.append_scene(s2)
    (assoc,) = resolve_scene(episode, s2, _cfg())
    assert assoc.via == "greedy"
    assert assoc.oid == 0
    assert assoc.score == pytest.approx(0.75, abs=1e-12)


def test_relocation_merge_needs_all_four_keys():
    """With one descriptor missing, a moved object drops below threshold.

    Three shared keys and a saturated pose give 1 - 1/3 < 0.7, so the
    relocated object would wrongly open a new identity.
    """
    def three_key_hyp(hyp_id, pose):
        hyp = make_hyp(hyp_id, pose=pose)
        kept = tuple(p for p in hyp.percepts if p.key != "vfh")
        return hyp.__class__(hyp_id=hyp_id, roi=hyp.roi, percepts=kept)

    s1 = make_scene(1.0, [three_key_hyp("h0", (0.0, 0.0, 0.5, 0.0, 0.0, 0.0))])
    s2 = make_scene(2.0, [three_key_hyp("h0", (0.5, 0.0, 0.5, 0.0, 0.0, 0.0))])
    episode = make_episode([s1])
    resolve_scene(episode, s1, _cfg())
    episode.append_scene(s2)
    (assoc,) = resolve_scene(episode, s2, _cfg())
    assert assoc.via == "new"
    assert assoc.oid == 1


def test_resolve_scene_one_owner_per_hypothesis():
    hyps = [make_hyp(f"h{i}", pose=(0.3 * i, 0.0, 0.5, 0.0, 0.0, 0.0),
                     color=["red", "blue", "green"][i], class_axis=i)
            for i in range(3)]
    s1 = make_scene(1.0, hyps)
    episode = make_episode([s1])
    first = resolve_scene(episode, s1, _cfg())
    assert sorted(a.oid for a in first) == [0, 1, 2]
    s2 = make_scene(2.0, hyps)
    episode.append_scene(s2)
    second = resolve_scene(episode, s2, _cfg())
    assert {a.hyp_id: a.oid for a in second} == {a.hyp_id: a.oid
                                                 for a in first}
    assert all(a.via == "fast" for a in second)


def test_resolve_scene_respects_hyp_ids_subset():
    s1 = make_scene(1.0, [make_hyp("h0"),
                          make_hyp("h1", pose=(0.9, 0, 0.5, 0, 0, 0))])
    episode = make_episode([s1])
    out = resolve_scene(episode, s1, _cfg(), hyp_ids=["h1"])
    assert [a.hyp_id for a in out] == ["h1"]
    assert episode.owner_of(1.0, "h0") is None


def test_incomparable_pair_scores_zero():
    obj = BeliefObject(oid=0)  # no recorded hypothesis at all
    assert pair_score(make_hyp("h0"), obj, _cfg()) == 0.0


def test_resolution_config_validation():
    with pytest.raises(ValidationError):
        ResolutionConfig(sim_threshold=1.5)
    with pytest.raises(ValidationError):
        ResolutionConfig(fastmatch_pose_gate=-0.1)
