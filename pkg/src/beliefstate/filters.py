"""Frame filters deciding which logged scenes are worth resolving.

A scene is skipped when its sharpest frame is still too blurred, when the
camera moved too far since the previous scene, when the scene is practically
identical to the previous one, or when a task hint declares a no-perception
phase.  Checks run in exactly that order and the first hit wins, so skip
reasons are unambiguous in run reports.  Skipped scenes stay in the episode
log (the amortizer may still walk them) but trigger no resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Box3, Scene
from .errors import DomainError, IncomparableError, ValidationError
from .metrics import (
    MetricRegistry,
    WeightTable,
    percept_similarity,
)
from .resolution import greedy_assignment

DEFAULT_BLUR_THRESHOLD = 100.0

SKIP_BLUR = "blur"
SKIP_MOTION = "motion"
SKIP_STATIC = "static"
SKIP_TASK = "task"
SKIP_REASONS = (SKIP_BLUR, SKIP_MOTION, SKIP_STATIC, SKIP_TASK)


@dataclass
class FilterConfig:
    """Thresholds for the scene filters; ``None`` disables a single filter.

    ``enabled=False`` switches every filter off at once (baseline mode).
    ``regions`` lists world-frame boxes; when non-empty, hypotheses posed
    outside all of them are dropped before resolution.
    """

    enabled: bool = True
    regions: tuple[Box3, ...] = ()
    motion_gate: float | None = 0.1
    static_skip_sim: float | None = 0.995
    blur_threshold: float | None = DEFAULT_BLUR_THRESHOLD
    no_perception_phases: tuple[str, ...] = ("transit",)

    def __post_init__(self) -> None:
        self.regions = tuple(self.regions)
        if self.motion_gate is not None and self.motion_gate < 0:
            raise ValidationError("motion_gate must be >= 0")
        if self.static_skip_sim is not None and not 0.0 <= self.static_skip_sim <= 1.0:
            raise ValidationError("static_skip_sim must lie in [0,1]")
        if self.blur_threshold is not None and self.blur_threshold < 0:
            raise ValidationError("blur_threshold must be >= 0")

    @classmethod
    def off(cls) -> "FilterConfig":
        return cls(enabled=False)


@dataclass(frozen=True)
class Decision:
    """Outcome of :func:`should_process` for one scene."""

    process: bool
    reason: str | None = None  # set iff not process; one of SKIP_REASONS

    @classmethod
    def ok(cls) -> "Decision":
        return cls(process=True)

    @classmethod
    def skip(cls, reason: str) -> "Decision":
        return cls(process=False, reason=reason)


def blur_score(pixels: Sequence[Sequence[float]]) -> float:
    """Sharpness of a grayscale grid: variance of its 4-neighbour Laplacian.

    The Laplacian weights the centre -4 and each of north/south/east/west +1
    and is evaluated only where all four neighbours exist (no padding), so
    the grid must be at least 3x3.  Returns the population variance of the
    response map; higher means sharper, exactly 0 for constant and affine
    ramp grids.
    """
    g = np.asarray(pixels, dtype=float)
    if g.ndim != 2 or g.shape[0] < 3 or g.shape[1] < 3:
        raise DomainError(
            f"pixel grid must be 2-d and at least 3x3, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise DomainError("pixel grid contains non-finite entries")
    response = (-4.0 * g[1:-1, 1:-1] + g[:-2, 1:-1] + g[2:, 1:-1]
                + g[1:-1, :-2] + g[1:-1, 2:])
    return float(np.var(response))


def scene_blur(scene: Scene) -> float | None:
    """Worst (lowest) sharpness over the scene's frames, None if unknown.

    Frames carrying a precomputed blur_score use it directly; frames with a
    pixel grid are scored on the fly; frames with neither contribute nothing.
    """
    scores = []
    for frame in scene.frames:
        if frame.blur_score is not None:
            scores.append(frame.blur_score)
        elif frame.pixels is not None:
            scores.append(blur_score(frame.pixels))
    return min(scores) if scores else None


def frame_similarity(scene: Scene, prev: Scene, weights: WeightTable,
                     registry: MetricRegistry) -> float:
    """How alike two consecutive scenes look on the hypothesis level.

    Hypotheses are paired one-to-one by greedy best similarity; the result is
    the mean pair similarity.  Differing hypothesis counts score 0 (the
    scenes evidently changed).
    """
    a, b = scene.hypotheses, prev.hypotheses
    if len(a) != len(b):
        return 0.0
    if not a:
        return 1.0
    scored = []
    for hyp in a:
        numeric = hyp.numeric()
        for j, other in enumerate(b):
            try:
                s = percept_similarity(numeric, other.numeric(),
                                       weights, registry)
            except IncomparableError:
                s = 0.0
            scored.append((s, j, hyp.hyp_id))
    pairs = greedy_assignment(scored, threshold=0.0)
    return sum(score for _, _, score in pairs) / len(a)


def _camera_translation(scene: Scene, prev: Scene) -> float | None:
    a, b = scene.camera_pose, prev.camera_pose
    if a is None or b is None:
        return None
    return float(np.linalg.norm(
        np.asarray(a[:3], float) - np.asarray(b[:3], float)))


def should_process(scene: Scene, prev: Scene | None, cfg: FilterConfig,
                   task_hint: str | bool | None = None, *,
                   weights: WeightTable | None = None,
                   registry: MetricRegistry | None = None) -> Decision:
    """Filter decision for one scene given its predecessor.

    ``task_hint`` may be a phase name (checked against the configured
    no-perception phases) or a ready-made boolean.  With ``cfg.enabled``
    false the answer is always process.
    """
    if not cfg.enabled:
        return Decision.ok()
    if cfg.blur_threshold is not None:
        blur = scene_blur(scene)
        if blur is not None and blur < cfg.blur_threshold:
            return Decision.skip(SKIP_BLUR)
    if cfg.motion_gate is not None and prev is not None:
        moved = _camera_translation(scene, prev)
        if moved is not None and moved > cfg.motion_gate:
            return Decision.skip(SKIP_MOTION)
    if cfg.static_skip_sim is not None and prev is not None:
        w = weights if weights is not None else WeightTable()
        reg = registry if registry is not None else MetricRegistry.default()
        if frame_similarity(scene, prev, w, reg) > cfg.static_skip_sim:
            return Decision.skip(SKIP_STATIC)
    if isinstance(task_hint, str):
        no_perception = task_hint in cfg.no_perception_phases
    else:
        no_perception = bool(task_hint)
    if no_perception:
        return Decision.skip(SKIP_TASK)
    return Decision.ok()


def region_filter(scene: Scene, regions: Sequence[Box3]) -> list[str]:
    """Ids of hypotheses whose pose lies inside at least one region box.

    With no regions configured every hypothesis passes.  Hypotheses without
    a pose percept cannot be placed and are dropped when regions are active.
    """
    if not regions:
        return [h.hyp_id for h in scene.hypotheses]
    kept = []
    for hyp in scene.hypotheses:
        pose = hyp.pose()
        if pose is not None and any(box.contains(pose) for box in regions):
            kept.append(hyp.hyp_id)
    return kept
