"""Synthetic episode generator with exact ground truth.

A :class:`SimSpec` declares tabletop objects, world regions, and a timeline
of events; :func:`generate` turns it into a scene list plus a ground-truth
table covering every emitted hypothesis.  Generation is driven by a single
seeded random stream, so equal specs produce bit-equal output.

Class descriptor signatures are pairwise-orthogonal unit vectors, which
makes classifier behaviour analytic: a clean descriptor sits at distance 0
from its own class and sqrt(2)/2 from every other.  Extra spare axes host
the controlled corruptions (classifier dropout pushes a descriptor fully
onto a spare axis; confusion rotates it near another class's signature at a
chosen confidence).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .annotators import ColorBinLayout, color_histogram
from .core import (
    Box3,
    FrameMeta,
    Hypothesis,
    OrientedBounds,
    Percept,
    RegionOfInterest,
    Scene,
    sym,
    vec,
)
from .errors import ValidationError
from .evalkit import GroundTruth

EVENT_OPS = ("observe", "idle", "pick_place", "move_camera", "blur_frame")

DEFAULT_SHARP_BLUR = 400.0
DEFAULT_BLURRED_BLUR = 4.0


@dataclass(frozen=True)
class NoiseSpec:
    """Per-feature Gaussian noise levels applied to emitted percepts."""

    pose: float = 0.0        # metres, per translation axis
    histogram: float = 0.0   # mass per bin, clamped at zero
    descriptor: float = 0.0  # per dimension, before re-normalization

    def __post_init__(self) -> None:
        for name in ("pose", "histogram", "descriptor"):
            if getattr(self, name) < 0:
                raise ValidationError(f"noise sigma {name} must be >= 0")


@dataclass
class SimObject:
    """One declared tabletop object."""

    name: str
    class_label: str
    color: str
    shape: str
    table: str
    pose: tuple[float, ...] | None = None  # filled by placement when None
    size: float = 0.1

    def __post_init__(self) -> None:
        if not self.name or not self.class_label:
            raise ValidationError("objects need a name and a class label")
        if self.pose is not None:
            self.pose = tuple(float(v) for v in self.pose)
            if len(self.pose) != 6:
                raise ValidationError(
                    f"object {self.name!r} pose must have 6 entries")
        if self.size <= 0:
            raise ValidationError(f"object {self.name!r} size must be > 0")


@dataclass
class SimSpec:
    """Full description of a synthetic episode."""

    objects: list[SimObject]
    tables: dict[str, Box3]
    events: list[dict]
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    classifier_dropout: float = 0.0
    confusion_rate: float = 0.0
    confusion_confidence: tuple[float, float] = (0.65, 0.9)
    blur_corrupt_rate: float = 0.75
    seed: int = 0
    period: float = 1.0
    start_time: float = 1.0
    camera_pose: tuple[float, ...] = (0.0, 0.0, 1.5, 0.0, 0.0, 0.0)
    hue_bins: int = 12
    sharp_blur: float = DEFAULT_SHARP_BLUR
    blurred_blur: float = DEFAULT_BLURRED_BLUR
    shape_confidence: float = 0.97

    def __post_init__(self) -> None:
        for prob_name in ("classifier_dropout", "confusion_rate",
                          "blur_corrupt_rate"):
            prob = getattr(self, prob_name)
            if not 0.0 <= prob <= 1.0:
                raise ValidationError(f"{prob_name} must lie in [0,1]")
        lo, hi = self.confusion_confidence
        if not 0.6 <= lo <= hi < 1.0:
            raise ValidationError(
                "confusion_confidence must satisfy 0.6 <= lo <= hi < 1")
        if self.period <= 0:
            raise ValidationError("period must be > 0")
        if not 0.0 <= self.shape_confidence <= 1.0:
            raise ValidationError("shape_confidence must lie in [0,1]")
        self.camera_pose = tuple(float(v) for v in self.camera_pose)
        names = [o.name for o in self.objects]
        if len(names) != len(set(names)):
            raise ValidationError("object names must be unique")
        for obj in self.objects:
            if obj.table not in self.tables:
                raise ValidationError(
                    f"object {obj.name!r} references undeclared table "
                    f"{obj.table!r}")
        for event in self.events:
            self._check_event(event)

    def _check_event(self, event: dict) -> None:
        op = event.get("op")
        if op not in EVENT_OPS:
            raise ValidationError(
                f"unknown event op {op!r}; expected one of {EVENT_OPS}")
        if op == "idle":
            if not (isinstance(event.get("duration"), (int, float))
                    and event["duration"] > 0):
                raise ValidationError("idle events need a duration > 0")
        if op == "pick_place":
            if event.get("object") not in {o.name for o in self.objects}:
                raise ValidationError(
                    f"pick_place references undeclared object "
                    f"{event.get('object')!r}")
            if event.get("to") not in self.tables:
                raise ValidationError(
                    f"pick_place references undeclared table "
                    f"{event.get('to')!r}")
        if op == "move_camera":
            to = event.get("to")
            if not (isinstance(to, (list, tuple)) and len(to) == 6):
                raise ValidationError("move_camera needs a 6-entry 'to' pose")

    # -- (de)serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "objects": [{
                "name": o.name, "class": o.class_label, "color": o.color,
                "shape": o.shape, "table": o.table,
                "pose": list(o.pose) if o.pose else None, "size": o.size,
            } for o in self.objects],
            "tables": {name: {"lo": list(box.lo), "hi": list(box.hi)}
                       for name, box in self.tables.items()},
            "events": self.events,
            "noise": {"pose": self.noise.pose,
                      "histogram": self.noise.histogram,
                      "descriptor": self.noise.descriptor},
            "classifier_dropout": self.classifier_dropout,
            "confusion_rate": self.confusion_rate,
            "confusion_confidence": list(self.confusion_confidence),
            "blur_corrupt_rate": self.blur_corrupt_rate,
            "seed": self.seed,
            "period": self.period,
            "start_time": self.start_time,
            "camera_pose": list(self.camera_pose),
            "hue_bins": self.hue_bins,
            "sharp_blur": self.sharp_blur,
            "blurred_blur": self.blurred_blur,
            "shape_confidence": self.shape_confidence,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimSpec":
        try:
            objects = [SimObject(
                name=o["name"], class_label=o["class"], color=o["color"],
                shape=o["shape"], table=o["table"],
                pose=o.get("pose"), size=o.get("size", 0.1),
            ) for o in data.get("objects", [])]
            tables = {name: Box3(tuple(b["lo"]), tuple(b["hi"]))
                      for name, b in data.get("tables", {}).items()}
            noise = NoiseSpec(**data.get("noise", {}))
            return cls(
                objects=objects, tables=tables,
                events=list(data.get("events", [])), noise=noise,
                classifier_dropout=data.get("classifier_dropout", 0.0),
                confusion_rate=data.get("confusion_rate", 0.0),
                confusion_confidence=tuple(
                    data.get("confusion_confidence", (0.65, 0.9))),
                blur_corrupt_rate=data.get("blur_corrupt_rate", 0.75),
                seed=data.get("seed", 0),
                period=data.get("period", 1.0),
                start_time=data.get("start_time", 1.0),
                camera_pose=tuple(
                    data.get("camera_pose", (0.0, 0.0, 1.5, 0.0, 0.0, 0.0))),
                hue_bins=data.get("hue_bins", 12),
                sharp_blur=data.get("sharp_blur", DEFAULT_SHARP_BLUR),
                blurred_blur=data.get("blurred_blur", DEFAULT_BLURRED_BLUR),
                shape_confidence=data.get("shape_confidence", 0.97),
            )
        except (KeyError, TypeError) as err:
            raise ValidationError(f"malformed simulation spec: {err}") from None


def class_signatures(labels: Sequence[str], dim: int | None = None,
                     min_angle_deg: float = 90.0,
                     spare_axes: int = 4) -> dict[str, tuple[float, ...]]:
    """Pairwise-orthogonal unit signatures for a set of class labels.

    Signatures are standard-basis vectors, giving exactly 90 degrees of
    separation between any two classes; ``min_angle_deg`` above 90 is
    therefore unsatisfiable and rejected.  At least ``spare_axes`` extra
    dimensions are reserved for controlled corruptions.
    """
    unique = sorted(set(labels))
    if not unique:
        raise ValidationError("need at least one class label")
    if min_angle_deg > 90.0:
        raise ValidationError(
            f"orthogonal signatures cannot exceed 90 degrees of separation "
            f"(requested {min_angle_deg})")
    n = len(unique)
    d = dim if dim is not None else max(8, n + spare_axes)
    if d < n + 2:
        raise ValidationError(
            f"descriptor dim {d} too small for {n} classes plus spare axes")
    out = {}
    for i, label in enumerate(unique):
        v = [0.0] * d
        v[i] = 1.0
        out[label] = tuple(v)
    return out


def knn_examples(spec: SimSpec) -> list[tuple[tuple[float, ...], str]]:
    """Clean training table for the classifier: one signature per class."""
    signatures = class_signatures([o.class_label for o in spec.objects])
    return [(vector, label) for label, vector in sorted(signatures.items())]


def _place_objects(spec: SimSpec) -> dict[str, tuple[float, ...]]:
    """Deterministic initial poses for objects without an explicit pose."""
    per_table: dict[str, list[SimObject]] = {}
    for obj in spec.objects:
        per_table.setdefault(obj.table, []).append(obj)
    poses: dict[str, tuple[float, ...]] = {}
    for table, members in per_table.items():
        box = spec.tables[table]
        for i, obj in enumerate(members):
            if obj.pose is not None:
                pose = obj.pose
            else:
                frac = (i + 1) / (len(members) + 1)
                x = box.lo[0] + frac * (box.hi[0] - box.lo[0])
                y = box.lo[1] + (0.35 if i % 2 else 0.65) * (box.hi[1] - box.lo[1])
                z = (box.lo[2] + box.hi[2]) / 2.0
                pose = (x, y, z, 0.0, 0.0, 0.0)
            if not box.contains(pose):
                raise ValidationError(
                    f"object {obj.name!r} pose {pose[:3]} lies outside its "
                    f"table {table!r}")
            poses[obj.name] = pose
    return poses


def _unit(values: Sequence[float]) -> tuple[float, ...]:
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0:
        raise ValidationError("cannot normalize a zero vector")
    return tuple(v / norm for v in values)


class _Corruptor:
    """Draws the controlled descriptor corruptions from the spec's stream."""

    def __init__(self, spec: SimSpec, rng: random.Random,
                 signatures: dict[str, tuple[float, ...]]) -> None:
        self.spec = spec
        self.rng = rng
        self.signatures = signatures
        self.labels = sorted(signatures)
        self.dim = len(next(iter(signatures.values())))
        self.spare = len(self.labels)       # first spare axis: dropout target
        self.spare2 = len(self.labels) + 1  # second spare axis: confusion blend

    def descriptor(self, label: str) -> tuple[float, ...]:
        sig = self.signatures[label]
        if self.rng.random() < self.spec.classifier_dropout:
            v = [0.0] * self.dim
            v[self.spare] = 1.0
            return tuple(v)
        if self.confusable and self.rng.random() < self.spec.confusion_rate:
            target = self.rng.choice(
                [l for l in self.labels if l != label])
            lo, hi = self.spec.confusion_confidence
            confidence = self.rng.uniform(lo, hi)
            # descriptor_distance to the target equals sin(theta/2), so the
            # stored classifier confidence lands exactly on the drawn value.
            theta = 2.0 * math.asin(1.0 - confidence)
            tv = self.signatures[target]
            v = [math.cos(theta) * tv[i] for i in range(self.dim)]
            v[self.spare2] += math.sin(theta)
            return _unit(v)
        return sig

    @property
    def confusable(self) -> bool:
        return self.spec.confusion_rate > 0 and len(self.labels) > 1


def generate(spec: SimSpec) -> tuple[list[Scene], GroundTruth]:
    """Run the event timeline and emit scenes plus complete ground truth."""
    rng = random.Random(spec.seed)
    layout = ColorBinLayout(hue_bins=spec.hue_bins)
    signatures = class_signatures([o.class_label for o in spec.objects]) \
        if spec.objects else {}
    vfh_signatures = signatures  # same geometry serves both descriptor keys
    corruptor = _Corruptor(spec, rng, signatures) if signatures else None
    poses = _place_objects(spec)
    base_histograms = {o.name: color_histogram(o.color, layout)
                       for o in spec.objects}

    camera = spec.camera_pose
    t = spec.start_time
    scenes: list[Scene] = []
    gt: dict[tuple[float, str], dict[str, str]] = {}

    def gauss_vector(base: Sequence[float], sigma: float,
                     count: int | None = None) -> list[float]:
        n = count if count is not None else len(base)
        if sigma <= 0:
            return list(base[:n])
        return [base[i] + rng.gauss(0.0, sigma) for i in range(n)]

    def emit(blurred: bool) -> None:
        nonlocal t
        hyps = []
        for i, obj in enumerate(spec.objects):
            pose = list(poses[obj.name])
            pose[:3] = gauss_vector(pose[:3], spec.noise.pose, 3)
            hist = gauss_vector(base_histograms[obj.name],
                                spec.noise.histogram)
            hist = [max(0.0, v) for v in hist]
            vfh = list(vfh_signatures[obj.class_label])
            decaf = list(corruptor.descriptor(obj.class_label))
            corrupted = blurred and rng.random() < spec.blur_corrupt_rate
            if corrupted:
                pose[:3] = [p + rng.uniform(-0.8, 0.8) for p in pose[:3]]
                hist = [rng.random() for _ in hist]
                vfh = [rng.gauss(0.0, 1.0) for _ in vfh]
                decaf = [rng.gauss(0.0, 1.0) for _ in decaf]
            if spec.noise.descriptor > 0:
                vfh = gauss_vector(vfh, spec.noise.descriptor)
                decaf = gauss_vector(decaf, spec.noise.descriptor)
            u = int(round(320 + 140 * pose[0]))
            v = int(round(240 + 140 * pose[1]))
            roi = RegionOfInterest(
                pixel_indices=frozenset(
                    {(u, v), (u + 1, v), (u, v + 1), (u + 1, v + 1)}),
                bounds_3d=OrientedBounds(
                    center=tuple(pose[:3]),
                    extents=(obj.size,) * 3,
                    quaternion=(1.0, 0.0, 0.0, 0.0)))
            percepts: list[Percept] = [
                vec("pose", pose),
                vec("hsv_histogram", hist),
                vec("vfh", _unit(vfh)),
                vec("decaf", _unit(decaf)),
                sym("shape", obj.shape, spec.shape_confidence),
            ]
            hyp_id = f"h{i}"
            hyps.append(Hypothesis(hyp_id=hyp_id, roi=roi,
                                   percepts=tuple(percepts),
                                   gt_object=obj.name))
            gt[(t, hyp_id)] = {"shape": obj.shape, "color": obj.color,
                               "class": obj.class_label}
        frame = FrameMeta(
            camera_pose=camera,
            blur_score=spec.blurred_blur if blurred else spec.sharp_blur)
        scenes.append(Scene(timestamp=t, frames=(frame,),
                            hypotheses=tuple(hyps), activity="observing"))
        t += spec.period

    for event in spec.events:
        op = event["op"]
        if op == "observe":
            emit(blurred=False)
        elif op == "blur_frame":
            emit(blurred=True)
        elif op == "idle":
            t += float(event["duration"])
        elif op == "move_camera":
            camera = tuple(float(v) for v in event["to"])
        elif op == "pick_place":
            obj_name = event["object"]
            box = spec.tables[event["to"]]
            margin = 0.1
            lo = [l + margin * (h - l) for l, h in zip(box.lo, box.hi)]
            hi = [h - margin * (h - l) for l, h in zip(box.lo, box.hi)]
            poses[obj_name] = (
                rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]),
                (box.lo[2] + box.hi[2]) / 2.0, 0.0, 0.0, 0.0)
    return scenes, GroundTruth(gt)


# Palette used by the convenience builder.
_CLASSES = ("mug", "plate", "bottle", "knife", "cereal_box", "cup", "bowl",
            "can", "jug", "pan", "carton", "brick", "ball", "book", "torch",
            "glass")
_COLORS = ("red", "blue", "green", "yellow", "magenta", "cyan", "black",
           "white", "grey")
_SHAPES = ("box", "round", "flat", "cylinder")


def make_episode_spec(n_objects: int = 9, n_observations: int = 30,
                      n_pick_place: int = 3, blur_fraction: float = 0.0,
                      idle_every: int = 0, idle_duration: float = 30.0,
                      noise: NoiseSpec | None = None,
                      classifier_dropout: float = 0.0,
                      confusion_rate: float = 0.0,
                      seed: int = 0) -> SimSpec:
    """Tabletop episode: objects on two tables, observations, swaps, idles.

    Pick-and-place events move a rotating object to the opposite table at
    evenly spaced points of the timeline.  ``blur_fraction`` inserts that
    share of additional blurred frames; ``idle_every`` inserts an idle block
    after every that many observations.
    """
    if n_objects < 1 or n_objects > len(_CLASSES):
        raise ValidationError(
            f"n_objects must lie in [1, {len(_CLASSES)}]")
    if not 0.0 <= blur_fraction <= 1.0:
        raise ValidationError("blur_fraction must lie in [0,1]")
    tables = {
        "table_1": Box3((-1.1, -0.5, 0.4), (-0.1, 0.5, 0.9)),
        "table_2": Box3((0.1, -0.5, 0.4), (1.1, 0.5, 0.9)),
    }
    objects = [
        SimObject(
            name=f"o{i}",
            class_label=_CLASSES[i],
            color=_COLORS[i % len(_COLORS)],
            shape=_SHAPES[i % len(_SHAPES)],
            table="table_1" if i % 2 == 0 else "table_2",
        )
        for i in range(n_objects)
    ]
    pnp_slots: dict[int, list[int]] = {}
    for k in range(n_pick_place):
        slot = max(1, (n_observations * (k + 1)) // (n_pick_place + 1))
        pnp_slots.setdefault(slot, []).append(k)
    n_blur = round(blur_fraction * n_observations)
    blur_slots = {max(1, (n_observations * (k + 1)) // (n_blur + 1))
                  for k in range(n_blur)} if n_blur else set()
    current_table = {obj.name: obj.table for obj in objects}
    events: list[dict] = []
    for i in range(n_observations):
        events.append({"op": "observe"})
        if i + 1 in blur_slots:
            events.append({"op": "blur_frame"})
        for k in pnp_slots.get(i + 1, ()):
            mover = objects[k % n_objects]
            target = ("table_2" if current_table[mover.name] == "table_1"
                      else "table_1")
            current_table[mover.name] = target
            events.append({"op": "pick_place", "object": mover.name,
                           "to": target})
        if idle_every and (i + 1) % idle_every == 0 and i + 1 < n_observations:
            events.append({"op": "idle", "duration": idle_duration})
    return SimSpec(
        objects=objects, tables=tables, events=events,
        noise=noise if noise is not None else NoiseSpec(),
        classifier_dropout=classifier_dropout,
        confusion_rate=confusion_rate, seed=seed)
