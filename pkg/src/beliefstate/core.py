"""Scene, hypothesis, and belief-state data model with its update primitives.

An :class:`Episode` is a chronological sequence of :class:`Scene` records plus
the belief state built from them.  Scenes hold object hypotheses (regions of
interest carrying key-value percepts); :class:`BeliefObject` instances
accumulate the hypotheses resolved to them over time together with a per-key
history of symbolic annotations.

All belief mutation goes through ``Episode`` methods (``append_scene``,
``associate``, ``record_symbol``) so writes form a single serialized stream.
Readers may hold references to returned structures between mutations; nothing
is rewritten in place once recorded, only appended.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import (
    IntegrityError,
    OrderingError,
    UnknownReferenceError,
    ValidationError,
)

ACTIVITIES = ("idle", "moving", "manipulating", "observing")
POSE_LEN = 6


def _check_finite(values: Iterable[float], what: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v):
            raise ValidationError(f"{what} contains non-finite entry {v!r}")
    return out


@dataclass(frozen=True)
class Percept:
    """One named measurement on a hypothesis.

    Exactly one of ``vector`` (numeric) or ``symbol`` (string token) is set.
    ``confidence`` is only meaningful for symbolic percepts and lies in [0, 1].
    """

    key: str
    vector: tuple[float, ...] | None = None
    symbol: str | None = None
    confidence: float | None = None

    def __post_init__(self) -> None:
        if not self.key:
            raise ValidationError("percept key must be non-empty")
        if (self.vector is None) == (self.symbol is None):
            raise ValidationError(
                f"percept {self.key!r} must carry exactly one of vector/symbol")
        if self.vector is not None:
            if len(self.vector) == 0:
                raise ValidationError(f"percept {self.key!r} vector is empty")
            object.__setattr__(
                self, "vector",
                _check_finite(self.vector, f"percept {self.key!r}"))
            if self.confidence is not None:
                raise ValidationError(
                    f"percept {self.key!r}: confidence applies to symbols only")
        if self.symbol is not None and not self.symbol:
            raise ValidationError(f"percept {self.key!r} symbol is empty")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(
                f"percept {self.key!r} confidence {self.confidence} not in [0,1]")

    @property
    def is_numeric(self) -> bool:
        return self.vector is not None


def vec(key: str, values: Sequence[float]) -> Percept:
    """Build a numeric percept."""
    return Percept(key=key, vector=tuple(values))


def sym(key: str, symbol: str, confidence: float | None = None) -> Percept:
    """Build a symbolic percept."""
    return Percept(key=key, symbol=symbol, confidence=confidence)


@dataclass(frozen=True)
class Box3:
    """Axis-aligned box in the world frame, given by min/max corners."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self) -> None:
        lo = _check_finite(self.lo, "box lo")
        hi = _check_finite(self.hi, "box hi")
        if len(lo) != 3 or len(hi) != 3:
            raise ValidationError("box corners must have 3 entries")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValidationError(f"box has empty extent: {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, point: Sequence[float]) -> bool:
        return all(l <= p <= h
                   for l, p, h in zip(self.lo, point[:3], self.hi))

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple((l + h) / 2.0 for l, h in zip(self.lo, self.hi))


@dataclass(frozen=True)
class OrientedBounds:
    """Optional oriented 3D bounds of a region: center, extents, quaternion.

    The quaternion is stored in (w, x, y, z) order.
    """

    center: tuple[float, float, float]
    extents: tuple[float, float, float]
    quaternion: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        center = _check_finite(self.center, "bounds center")
        extents = _check_finite(self.extents, "bounds extents")
        quat = _check_finite(self.quaternion, "bounds quaternion")
        if len(center) != 3 or len(extents) != 3 or len(quat) != 4:
            raise ValidationError("bounds need 3/3/4 entries")
        if any(e <= 0 for e in extents):
            raise ValidationError(f"bounds extents must be positive: {extents}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "quaternion", quat)


@dataclass(frozen=True)
class RegionOfInterest:
    """Image-space support of a hypothesis plus optional 3D footprint."""

    pixel_indices: frozenset[tuple[int, int]]
    point_indices: frozenset[int] | None = None
    bounds_3d: OrientedBounds | None = None

    def __post_init__(self) -> None:
        px = frozenset((int(u), int(v)) for u, v in self.pixel_indices)
        if not px:
            raise ValidationError("region of interest needs at least one pixel")
        object.__setattr__(self, "pixel_indices", px)
        if self.point_indices is not None:
            object.__setattr__(
                self, "point_indices",
                frozenset(int(i) for i in self.point_indices))


@dataclass
class Hypothesis:
    """One segmented object candidate within a single scene."""

    hyp_id: str
    roi: RegionOfInterest
    percepts: tuple[Percept, ...]
    gt_object: str | None = None

    def __post_init__(self) -> None:
        if not self.hyp_id:
            raise ValidationError("hypothesis id must be non-empty")
        self.percepts = tuple(self.percepts)
        keys = [p.key for p in self.percepts]
        if len(keys) != len(set(keys)):
            raise ValidationError(
                f"hypothesis {self.hyp_id!r} has duplicate percept keys")
        pose = self.percept("pose")
        if pose is not None and len(pose.vector or ()) != POSE_LEN:
            raise ValidationError(
                f"hypothesis {self.hyp_id!r} pose must have {POSE_LEN} entries")

    def percept(self, key: str) -> Percept | None:
        for p in self.percepts:
            if p.key == key:
                return p
        return None

    def numeric(self) -> dict[str, tuple[float, ...]]:
        """Map of numeric percept key to vector."""
        return {p.key: p.vector for p in self.percepts if p.is_numeric}

    def symbolic(self) -> dict[str, tuple[str, float | None]]:
        """Map of symbolic percept key to (symbol, confidence)."""
        return {p.key: (p.symbol, p.confidence)
                for p in self.percepts if not p.is_numeric}

    def pose(self) -> tuple[float, ...] | None:
        p = self.percept("pose")
        return p.vector if p is not None else None


@dataclass
class FrameMeta:
    """Per-image metadata: camera pose, optional sharpness, optional pixels."""

    camera_pose: tuple[float, ...]
    blur_score: float | None = None
    pixels: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        self.camera_pose = _check_finite(self.camera_pose, "camera pose")
        if len(self.camera_pose) != POSE_LEN:
            raise ValidationError(f"camera pose must have {POSE_LEN} entries")
        if self.blur_score is not None:
            if not math.isfinite(self.blur_score) or self.blur_score < 0:
                raise ValidationError(
                    f"blur score must be a finite value >= 0, got {self.blur_score}")
        if self.pixels is not None:
            rows = tuple(_check_finite(r, "pixel row") for r in self.pixels)
            if not rows or any(len(r) != len(rows[0]) for r in rows):
                raise ValidationError("pixel grid must be rectangular")
            self.pixels = rows


@dataclass
class Scene:
    """Everything perceived at one timestamp."""

    timestamp: float
    frames: tuple[FrameMeta, ...]
    hypotheses: tuple[Hypothesis, ...]
    annotations: dict[str, str] = field(default_factory=dict)
    activity: str = "observing"

    def __post_init__(self) -> None:
        if not math.isfinite(self.timestamp):
            raise ValidationError(f"scene timestamp {self.timestamp!r} not finite")
        self.frames = tuple(self.frames)
        self.hypotheses = tuple(self.hypotheses)
        ids = [h.hyp_id for h in self.hypotheses]
        if len(ids) != len(set(ids)):
            raise ValidationError(
                f"scene at t={self.timestamp} has duplicate hypothesis ids")
        if self.activity not in ACTIVITIES:
            raise ValidationError(
                f"unknown activity {self.activity!r}; expected one of {ACTIVITIES}")

    def hypothesis(self, hyp_id: str) -> Hypothesis:
        for h in self.hypotheses:
            if h.hyp_id == hyp_id:
                return h
        raise UnknownReferenceError(
            f"no hypothesis {hyp_id!r} in scene at t={self.timestamp}")

    @property
    def camera_pose(self) -> tuple[float, ...] | None:
        return self.frames[0].camera_pose if self.frames else None


class Occurrence(NamedTuple):
    """One associated sighting: the owning scene's timestamp and hypothesis."""

    timestamp: float
    hyp_id: str


class SymbolRecord(NamedTuple):
    """A symbolic annotation recorded at a past sighting."""

    timestamp: float
    symbol: str
    confidence: float


@dataclass
class BeliefObject:
    """A persistent object identity aggregated from resolved hypotheses."""

    oid: int
    history: list[Occurrence] = field(default_factory=list)
    symbol_history: dict[str, list[SymbolRecord]] = field(default_factory=dict)
    last_pose: tuple[float, ...] | None = None
    last_seen: float = float("-inf")
    last_hypothesis: Hypothesis | None = None

    def occurrences_at_or_before(self, at: float) -> list[Occurrence]:
        idx = bisect.bisect_right([o.timestamp for o in self.history], at)
        return self.history[:idx]

    def symbols_at(self, key: str, timestamp: float) -> list[SymbolRecord]:
        return [r for r in self.symbol_history.get(key, [])
                if r.timestamp == timestamp]


class Episode:
    """Ordered scene log plus the belief state derived from it."""

    def __init__(self) -> None:
        self.scenes: list[Scene] = []
        self.belief: list[BeliefObject] = []
        self._scene_by_ts: dict[float, Scene] = {}
        self._objects: dict[int, BeliefObject] = {}
        self._owner: dict[tuple[float, str], int] = {}
        self._next_oid = 0

    # -- read side ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.scenes)

    @property
    def latest_scene(self) -> Scene | None:
        return self.scenes[-1] if self.scenes else None

    def scene_at(self, timestamp: float) -> Scene:
        try:
            return self._scene_by_ts[timestamp]
        except KeyError:
            raise UnknownReferenceError(f"no scene at t={timestamp}") from None

    def has_scene(self, timestamp: float) -> bool:
        return timestamp in self._scene_by_ts

    def object(self, oid: int) -> BeliefObject:
        try:
            return self._objects[oid]
        except KeyError:
            raise UnknownReferenceError(f"no belief object {oid}") from None

    def owner_of(self, scene_ts: float, hyp_id: str) -> int | None:
        """Oid of the object a hypothesis was associated to, if any."""
        return self._owner.get((scene_ts, hyp_id))

    def iter_objects(self) -> Iterator[BeliefObject]:
        return iter(self.belief)

    # -- write side (single serialized mutation stream) ---------------------

    def append_scene(self, scene: Scene) -> Scene:
        """Append a scene; timestamps must be strictly increasing."""
        if self.scenes and scene.timestamp <= self.scenes[-1].timestamp:
            raise OrderingError(
                f"scene at t={scene.timestamp} not after t={self.scenes[-1].timestamp}")
        self.scenes.append(scene)
        self._scene_by_ts[scene.timestamp] = scene
        return scene

    def associate(self, oid: int | None, scene_ts: float, hyp_id: str) -> int:
        """Attach a scene hypothesis to an object (``oid=None`` opens a new one).

        Appends to the object's history, refreshes ``last_seen``/``last_pose``,
        and records any symbolic percepts carried by the hypothesis into
        ``symbol_history``.  A hypothesis can be associated at most once.
        """
        scene = self.scene_at(scene_ts)
        hyp = scene.hypothesis(hyp_id)
        ref = (scene_ts, hyp_id)
        if ref in self._owner:
            raise IntegrityError(
                f"hypothesis {hyp_id!r} at t={scene_ts} is already associated "
                f"to object {self._owner[ref]}")
        if oid is None:
            obj = BeliefObject(oid=self._next_oid)
            self._next_oid += 1
            self.belief.append(obj)
            self._objects[obj.oid] = obj
        else:
            obj = self.object(oid)
            if scene_ts <= obj.last_seen:
                raise OrderingError(
                    f"association at t={scene_ts} not after object {oid} "
                    f"last seen at t={obj.last_seen}")
        obj.history.append(Occurrence(scene_ts, hyp_id))
        obj.last_seen = scene_ts
        obj.last_hypothesis = hyp
        pose = hyp.pose()
        if pose is not None:
            obj.last_pose = pose
        self._owner[ref] = obj.oid
        for key, (symbol, confidence) in hyp.symbolic().items():
            self._record(obj, scene_ts, key, symbol,
                         1.0 if confidence is None else confidence)
        return obj.oid

    def record_symbol(self, oid: int, scene_ts: float, key: str,
                      symbol: str, confidence: float) -> bool:
        """Append a symbolic annotation at a past sighting of the object.

        The timestamp must correspond to an existing occurrence of the object,
        so symbols never float free of the evidence that produced them.
        Duplicate (key, timestamp) entries are dropped; returns False then.
        """
        obj = self.object(oid)
        if not any(o.timestamp == scene_ts for o in obj.history):
            raise IntegrityError(
                f"object {oid} has no occurrence at t={scene_ts}")
        return self._record(obj, scene_ts, key, symbol, confidence)

    def _record(self, obj: BeliefObject, ts: float, key: str,
                symbol: str, confidence: float) -> bool:
        if not 0.0 <= confidence <= 1.0:
            raise ValidationError(
                f"symbol confidence {confidence} not in [0,1]")
        records = obj.symbol_history.setdefault(key, [])
        if any(r.timestamp == ts for r in records):
            return False
        bisect.insort(records, SymbolRecord(ts, symbol, confidence))
        return True

    # -- summaries -----------------------------------------------------------

    def belief_summary(self) -> list[dict]:
        """JSON-shaped snapshot of the belief state, used by reports/tests."""
        out = []
        for obj in self.belief:
            out.append({
                "oid": obj.oid,
                "n_observations": len(obj.history),
                "first_seen": obj.history[0].timestamp if obj.history else None,
                "last_seen": obj.last_seen,
                "last_pose": list(obj.last_pose) if obj.last_pose else None,
                "occurrences": [[o.timestamp, o.hyp_id] for o in obj.history],
                "symbols": {
                    key: [[r.timestamp, r.symbol, r.confidence] for r in recs]
                    for key, recs in sorted(obj.symbol_history.items())
                },
            })
        return out
