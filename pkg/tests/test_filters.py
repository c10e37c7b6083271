"""Scene filters: sharpness scoring, skip ordering, region gating.

``naive_blur_score`` is an independent double-loop reimplementation of the
Laplacian-variance sharpness measure, used as the oracle for the vectorized
version.
"""

import random

import numpy as np
import pytest

from beliefstate.core import Box3
from beliefstate.errors import DomainError
from beliefstate.filters import (
    FilterConfig,
    blur_score,
    frame_similarity,
    region_filter,
    scene_blur,
    should_process,
)
from beliefstate.metrics import MetricRegistry, WeightTable

from conftest import BLURRED, SHARP, make_hyp, make_scene


def naive_blur_score(grid):
    """Oracle: explicit loops over the interior, population variance."""
    rows, cols = len(grid), len(grid[0])
    responses = []
    for i in range(1, rows - 1):
        for j in range(1, cols - 1):
            responses.append(
                -4.0 * grid[i][j] + grid[i - 1][j] + grid[i + 1][j]
                + grid[i][j - 1] + grid[i][j + 1])
    mean = sum(responses) / len(responses)
    return sum((r - mean) ** 2 for r in responses) / len(responses)


def test_blur_score_center_spike_has_zero_variance():
    # a single interior response value: population variance is exactly 0
    grid = [[0, 0, 0], [0, 1, 0], [0, 0, 0]]
    assert blur_score(grid) == 0.0


def test_blur_score_checkerboard_frozen_value():
    grid = [[(i + j) % 2 for j in range(4)] for i in range(4)]
    # interior responses are +-4 with zero mean: variance 16
    assert blur_score(grid) == 16.0


def test_blur_score_constant_and_ramp_are_exactly_zero():
    assert blur_score([[7] * 5 for _ in range(4)]) == 0.0
    ramp = [[3 + 2 * i - 5 * j for j in range(6)] for i in range(5)]
    assert blur_score(ramp) == 0.0


def test_blur_score_matches_naive_oracle():
    rng = random.Random(1234)
    for _ in range(40):
        rows = rng.randint(3, 12)
        cols = rng.randint(3, 12)
        grid = [[rng.uniform(-50, 50) for _ in range(cols)]
                for _ in range(rows)]
        assert blur_score(grid) == pytest.approx(
            naive_blur_score(grid), abs=1e-9)


def test_blur_score_domain_errors():
    with pytest.raises(DomainError):
        blur_score([[1, 2], [3, 4]])
    with pytest.raises(DomainError):
        blur_score([[np.nan] * 3] * 3)


def test_scene_blur_prefers_precomputed_and_takes_min():
    scene = make_scene(1.0, [], blur=SHARP)
    assert scene_blur(scene) == SHARP
    frames = (scene.frames[0].__class__(camera_pose=(0,) * 6, blur_score=50.0),
              scene.frames[0].__class__(camera_pose=(0,) * 6, blur_score=200.0))
    multi = scene.__class__(timestamp=2.0, frames=frames, hypotheses=())
    assert scene_blur(multi) == 50.0
    unknown = scene.__class__(timestamp=3.0, frames=(), hypotheses=())
    assert scene_blur(unknown) is None


W = WeightTable()
R = MetricRegistry.default()


def test_frame_similarity_frozen_cases():
    a = make_scene(1.0, [make_hyp("h0")])
    b = make_scene(2.0, [make_hyp("h0")])
    assert frame_similarity(b, a, W, R) == 1.0
    # count mismatch: the scenes evidently changed
    c = make_scene(3.0, [make_hyp("h0"), make_hyp("h1")])
    assert frame_similarity(c, a, W, R) == 0.0
    empty1 = make_scene(4.0, [])
    empty2 = make_scene(5.0, [])
    assert frame_similarity(empty2, empty1, W, R) == 1.0


def test_frame_similarity_registers_a_moved_object():
    before = make_scene(1.0, [make_hyp(f"h{i}", pose=(0.3 * i, 0, 0.5, 0, 0, 0))
                              for i in range(9)])
    moved = [make_hyp(f"h{i}", pose=(0.3 * i, 0, 0.5, 0, 0, 0))
             for i in range(8)]
    moved.append(make_hyp("h8", pose=(0.3 * 8, 0.4, 0.5, 0, 0, 0)))
    after = make_scene(2.0, moved)
    sim = frame_similarity(after, before, W, R)
    # eight perfect pairs and one pose-saturated pair: (8 + 0.75) / 9
    assert sim == pytest.approx(8.75 / 9, abs=1e-12)
    assert sim < 0.995  # below the default static-skip threshold


def _prev_and_same(ts=2.0, camera=(0.0, 0.0, 1.5, 0.0, 0.0, 0.0)):
    prev = make_scene(1.0, [make_hyp("h0")])
    scene = make_scene(ts, [make_hyp("h0")], camera=camera)
    return scene, prev


def test_skip_order_blur_beats_motion_and_static():
    scene, prev = _prev_and_same(camera=(5.0, 0.0, 1.5, 0.0, 0.0, 0.0))
    scene = make_scene(2.0, [make_hyp("h0")], blur=BLURRED,
                       camera=(5.0, 0.0, 1.5, 0.0, 0.0, 0.0))
    decision = should_process(scene, prev, FilterConfig(), weights=W,
                              registry=R)
    assert not decision.process and decision.reason == "blur"


def test_skip_order_motion_beats_static():
    scene, prev = _prev_and_same(camera=(5.0, 0.0, 1.5, 0.0, 0.0, 0.0))
    decision = should_process(scene, prev, FilterConfig(), weights=W,
                              registry=R)
    assert not decision.process and decision.reason == "motion"


def test_skip_static_on_identical_scenes():
    scene, prev = _prev_and_same()
    decision = should_process(scene, prev, FilterConfig(), weights=W,
                              registry=R)
    assert not decision.process and decision.reason == "static"


def test_skip_task_phase():
    scene, prev = _prev_and_same()
    scene = make_scene(2.0, [make_hyp("h1", color="blue", class_axis=1)])
    decision = should_process(scene, prev, FilterConfig(),
                              task_hint="transit", weights=W, registry=R)
    assert not decision.process and decision.reason == "task"
    decision = should_process(scene, prev, FilterConfig(), task_hint=True,
                              weights=W, registry=R)
    assert not decision.process and decision.reason == "task"


def test_first_scene_processes_without_predecessor():
    scene = make_scene(1.0, [make_hyp("h0")])
    assert should_process(scene, None, FilterConfig(), weights=W,
                          registry=R).process


def test_disabled_filters_always_process():
    scene, prev = _prev_and_same()
    scene = make_scene(2.0, [make_hyp("h0")], blur=BLURRED)
    assert should_process(scene, prev, FilterConfig.off(),
                          task_hint="transit", weights=W, registry=R).process


def test_single_filter_disabled_with_none():
    scene, prev = _prev_and_same()
    cfg = FilterConfig(static_skip_sim=None)
    assert should_process(scene, prev, cfg, weights=W, registry=R).process


def test_static_threshold_is_strictly_exceeded():
    scene, prev = _prev_and_same()
    cfg = FilterConfig(static_skip_sim=1.0)
    # similarity is exactly 1.0, not above it: still processed
    assert should_process(scene, prev, cfg, weights=W, registry=R).process


def test_region_filter():
    inside = make_hyp("h_in", pose=(0.5, 0.5, 0.5, 0.0, 0.0, 0.0))
    outside = make_hyp("h_out", pose=(5.0, 5.0, 5.0, 0.0, 0.0, 0.0))
    no_pose = make_hyp("h_np")
    no_pose = no_pose.__class__(
        hyp_id="h_np", roi=no_pose.roi,
        percepts=tuple(p for p in no_pose.percepts if p.key != "pose"))
    scene = make_scene(1.0, [inside, outside, no_pose])
    box = Box3((0, 0, 0), (1, 1, 1))
    assert region_filter(scene, [box]) == ["h_in"]
    assert region_filter(scene, []) == ["h_in", "h_out", "h_np"]
