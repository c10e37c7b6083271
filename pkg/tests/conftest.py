"""Shared builders for the test suite.

Hypotheses built here carry the four canonical numeric percepts (pose, HSV
histogram, and the two descriptors), so similarity arithmetic in tests is
easy to do by hand: with equal weights each key contributes a quarter.
"""

from __future__ import annotations

import pytest

from beliefstate.annotators import ColorBinLayout, color_histogram
from beliefstate.core import (
    Episode,
    FrameMeta,
    Hypothesis,
    RegionOfInterest,
    Scene,
    sym,
    vec,
)

LAYOUT = ColorBinLayout()

SHARP = 400.0
BLURRED = 4.0


def axis(index: int, dim: int = 8) -> tuple[float, ...]:
    """Standard basis vector; orthogonal axes are sqrt(2)/2 descriptor-far."""
    v = [0.0] * dim
    v[index] = 1.0
    return tuple(v)


def make_roi(seed_px: int = 0) -> RegionOfInterest:
    return RegionOfInterest(pixel_indices=frozenset({(seed_px, seed_px)}))


def make_hyp(hyp_id: str, pose=(0.0, 0.0, 0.5, 0.0, 0.0, 0.0),
             color: str = "red", class_axis: int = 0, dim: int = 8,
             shape: str | None = None, shape_conf: float = 0.97,
             vfh_axis: int | None = None, extra=()) -> Hypothesis:
    percepts = [
        vec("pose", pose),
        vec("hsv_histogram", color_histogram(color, LAYOUT)),
        vec("vfh", axis(class_axis if vfh_axis is None else vfh_axis, dim)),
        vec("decaf", axis(class_axis, dim)),
    ]
    if shape is not None:
        percepts.append(sym("shape", shape, shape_conf))
    percepts.extend(extra)
    return Hypothesis(hyp_id=hyp_id, roi=make_roi(), percepts=tuple(percepts))


def make_scene(ts: float, hyps, blur: float = SHARP,
               camera=(0.0, 0.0, 1.5, 0.0, 0.0, 0.0),
               activity: str = "observing", annotations=None) -> Scene:
    frame = FrameMeta(camera_pose=camera, blur_score=blur)
    return Scene(timestamp=ts, frames=(frame,), hypotheses=tuple(hyps),
                 annotations=dict(annotations or {}), activity=activity)


def make_episode(scenes) -> Episode:
    episode = Episode()
    for scene in scenes:
        episode.append_scene(scene)
    return episode


@pytest.fixture
def episode_one_object():
    """Three sightings of one object, all associated to oid 0."""
    scenes = [make_scene(t, [make_hyp("h0")]) for t in (1.0, 2.0, 3.0)]
    episode = make_episode(scenes)
    oid = episode.associate(None, 1.0, "h0")
    episode.associate(oid, 2.0, "h0")
    episode.associate(oid, 3.0, "h0")
    return episode, oid
