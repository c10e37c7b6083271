"""Entity resolution: attach each scene hypothesis to a belief object.

Resolution runs in two stages.  A cheap fast-match first merges hypotheses
with objects that were seen moments ago at practically the same place.  The
remaining candidates are scored with the weighted similarity and assigned
greedily in descending score order, one-to-one, while the score clears the
similarity threshold.  Hypotheses left over after both stages open new belief
objects, so every hypothesis of a processed scene ends up with exactly one
owner.

Pair scoring is pure and side-effect free; mutation happens only through
``Episode.associate`` inside :func:`resolve_scene`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import BeliefObject, Episode, Hypothesis, Scene
from .errors import IncomparableError, ValidationError
from .metrics import MetricRegistry, WeightTable, similarity

VIA_FAST = "fast"
VIA_GREEDY = "greedy"
VIA_NEW = "new"


@dataclass
class ResolutionConfig:
    """Thresholds and scoring context for scene resolution.

    ``sim_threshold`` is the minimum similarity for any merge.  The two gate
    values bound how far (metres) and how long ago (seconds) an object may
    have been seen for the fast-match shortcut to consider it.
    """

    sim_threshold: float = 0.7
    fastmatch_pose_gate: float = 0.2
    fastmatch_time_gate: float = 5.0
    weights: WeightTable = field(default_factory=WeightTable)
    registry: MetricRegistry = field(default_factory=MetricRegistry.default)

    def __post_init__(self) -> None:
        if not 0.0 <= self.sim_threshold <= 1.0:
            raise ValidationError(
                f"sim_threshold {self.sim_threshold} not in [0,1]")
        if self.fastmatch_pose_gate < 0 or self.fastmatch_time_gate < 0:
            raise ValidationError("fast-match gates must be >= 0")


@dataclass(frozen=True)
class Association:
    """Outcome for one hypothesis of a resolved scene."""

    hyp_id: str
    oid: int
    score: float
    via: str  # "fast" | "greedy" | "new"


def pair_score(hyp: Hypothesis, obj: BeliefObject,
               cfg: ResolutionConfig) -> float:
    """Similarity for assignment purposes; incomparable pairs score 0."""
    try:
        return similarity(hyp, obj, cfg.weights, cfg.registry)
    except IncomparableError:
        return 0.0


def greedy_assignment(
        scored: Iterable[tuple[float, int, str]],
        threshold: float) -> list[tuple[str, int, float]]:
    """One-to-one assignment by descending score.

    ``scored`` holds (score, oid, hyp_id) triples.  Ties break toward the
    lower oid, then the lower hyp_id, so the result is deterministic.
    Pairs below ``threshold`` are never assigned.
    """
    order = sorted(scored, key=lambda s: (-s[0], s[1], s[2]))
    used_hyps: set[str] = set()
    used_objs: set[int] = set()
    accepted: list[tuple[str, int, float]] = []
    for score, oid, hyp_id in order:
        if score < threshold:
            break
        if hyp_id in used_hyps or oid in used_objs:
            continue
        used_hyps.add(hyp_id)
        used_objs.add(oid)
        accepted.append((hyp_id, oid, score))
    return accepted


def _within_gates(hyp: Hypothesis, obj: BeliefObject, scene_ts: float,
                  cfg: ResolutionConfig) -> bool:
    if obj.last_pose is None:
        return False
    pose = hyp.pose()
    if pose is None:
        return False
    if scene_ts - obj.last_seen > cfg.fastmatch_time_gate:
        return False
    offset = np.linalg.norm(
        np.asarray(pose[:3], float) - np.asarray(obj.last_pose[:3], float))
    return bool(offset <= cfg.fastmatch_pose_gate)


def fast_match(scene: Scene, belief: Sequence[BeliefObject],
               cfg: ResolutionConfig,
               hyp_ids: Sequence[str] | None = None,
               ) -> tuple[list[tuple[str, int, float]], list[str], list[int]]:
    """Shortcut stage: pair hypotheses with recently seen, barely moved objects.

    Candidate pairs must pass both the pose gate and the time gate; pairs at
    or above ``sim_threshold`` are then committed one-to-one in descending
    similarity order.  Returns the accepted (hyp_id, oid, score) triples plus
    the residual hypothesis ids and object oids for the full stage.
    """
    wanted = list(hyp_ids) if hyp_ids is not None else [
        h.hyp_id for h in scene.hypotheses]
    scored: list[tuple[float, int, str]] = []
    for hyp_id in wanted:
        hyp = scene.hypothesis(hyp_id)
        for obj in belief:
            if _within_gates(hyp, obj, scene.timestamp, cfg):
                scored.append((pair_score(hyp, obj, cfg), obj.oid, hyp_id))
    accepted = greedy_assignment(scored, cfg.sim_threshold)
    matched_hyps = {hyp_id for hyp_id, _, _ in accepted}
    matched_objs = {oid for _, oid, _ in accepted}
    residual_hyps = [h for h in wanted if h not in matched_hyps]
    residual_objs = [o.oid for o in belief if o.oid not in matched_objs]
    return accepted, residual_hyps, residual_objs


def resolve_scene(episode: Episode, scene: Scene, cfg: ResolutionConfig,
                  hyp_ids: Sequence[str] | None = None) -> list[Association]:
    """Resolve one scene against the episode's belief state.

    The scene must already be appended to the episode.  Every hypothesis in
    ``hyp_ids`` (default: all of them) is either merged into an existing
    object or opens a new one; the returned record lists the outcome per
    hypothesis in scene order.
    """
    if not episode.has_scene(scene.timestamp):
        raise ValidationError(
            f"scene at t={scene.timestamp} is not part of the episode")
    wanted = list(hyp_ids) if hyp_ids is not None else [
        h.hyp_id for h in scene.hypotheses]

    fast, residual_hyps, residual_oids = fast_match(
        scene, episode.belief, cfg, wanted)
    outcome: dict[str, tuple[int | None, float, str]] = {}
    for hyp_id, oid, score in fast:
        episode.associate(oid, scene.timestamp, hyp_id)
        outcome[hyp_id] = (oid, score, VIA_FAST)

    scored: list[tuple[float, int, str]] = []
    for hyp_id in residual_hyps:
        hyp = scene.hypothesis(hyp_id)
        for oid in residual_oids:
            scored.append(
                (pair_score(hyp, episode.object(oid), cfg), oid, hyp_id))
    for hyp_id, oid, score in greedy_assignment(scored, cfg.sim_threshold):
        episode.associate(oid, scene.timestamp, hyp_id)
        outcome[hyp_id] = (oid, score, VIA_GREEDY)

    for hyp_id in wanted:
        if hyp_id not in outcome:
            oid = episode.associate(None, scene.timestamp, hyp_id)
            outcome[hyp_id] = (oid, 0.0, VIA_NEW)

    return [Association(hyp_id, *outcome[hyp_id]) for hyp_id in wanted]
