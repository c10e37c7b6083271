"""Bounded per-key distances and the weighted similarity between percept sets.

Every distance maps a pair of vectors into [0, 1].  The similarity of a
hypothesis to a belief object combines the distances of all shared numeric
keys K as

    sim = 1 - (sum_k w_k * dist_k) / (sum_k w_k)

so similarity is also bounded in [0, 1] and invariant under rescaling the
whole weight table.  Symbolic percepts never enter the similarity.

Which distance applies to which percept key is declared in a
:class:`MetricRegistry`; keys without a registered metric are ignored, so new
percept kinds can ride along in scene logs without breaking resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import BeliefObject, Hypothesis
from .errors import DomainError, IncomparableError, ValidationError

DistanceFn = Callable[[Sequence[float], Sequence[float]], float]

# Saturation gain of the pose distance: translation offsets of 1/gain metres
# or more count as maximally far apart.
DEFAULT_POSE_GAIN = 4.0


def _as_array(v: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{what} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} contains non-finite entries")
    return arr


def pose_distance(a: Sequence[float], b: Sequence[float],
                  gain: float = DEFAULT_POSE_GAIN) -> float:
    """Saturated translation distance between two 6-DoF poses.

    Only the translation part enters: orientation differences are ignored.
    Returns ``min(1, gain * ||t_a - t_b||)``.
    """
    pa = _as_array(a, "pose")
    pb = _as_array(b, "pose")
    if pa.size < 3 or pb.size < 3:
        raise DomainError("poses need at least 3 translation entries")
    return float(min(1.0, gain * np.linalg.norm(pa[:3] - pb[:3])))


def histogram_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Half L1 distance between sum-normalized histograms.

    Bins must align (equal length); entries must be >= 0 with positive mass.
    0 means identical distributions, 1 means disjoint support.
    """
    ha = _as_array(a, "histogram")
    hb = _as_array(b, "histogram")
    if ha.size != hb.size:
        raise DomainError(
            f"histogram length mismatch: {ha.size} vs {hb.size}")
    if np.any(ha < 0) or np.any(hb < 0):
        raise DomainError("histogram entries must be >= 0")
    sa, sb = ha.sum(), hb.sum()
    if sa <= 0 or sb <= 0:
        raise DomainError("histogram has no mass")
    return float(0.5 * np.abs(ha / sa - hb / sb).sum())


def descriptor_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Half Euclidean distance between unit-normalized descriptors.

    For unit vectors ``||a - b|| <= 2``, so the result lies in [0, 1].
    """
    da = _as_array(a, "descriptor")
    db = _as_array(b, "descriptor")
    if da.size != db.size:
        raise DomainError(
            f"descriptor length mismatch: {da.size} vs {db.size}")
    na, nb = np.linalg.norm(da), np.linalg.norm(db)
    if na == 0 or nb == 0:
        raise DomainError("descriptor with zero norm cannot be normalized")
    return float(np.linalg.norm(da / na - db / nb) / 2.0)


_KINDS: dict[str, Callable[..., DistanceFn]] = {
    "pose": lambda gain=DEFAULT_POSE_GAIN: (
        lambda a, b: pose_distance(a, b, gain=gain)),
    "histogram": lambda: histogram_distance,
    "descriptor": lambda: descriptor_distance,
}

# Canonical percept keys of the engine and their distance kinds.
DEFAULT_KEY_KINDS: dict[str, str] = {
    "pose": "pose",
    "hsv_histogram": "histogram",
    "vfh": "descriptor",
    "decaf": "descriptor",
}


class MetricRegistry:
    """Maps percept keys to their distance functions."""

    def __init__(self, functions: Mapping[str, DistanceFn] | None = None) -> None:
        self._fns: dict[str, DistanceFn] = dict(functions or {})

    @classmethod
    def default(cls, pose_gain: float = DEFAULT_POSE_GAIN) -> "MetricRegistry":
        reg = cls()
        for key, kind in DEFAULT_KEY_KINDS.items():
            reg.register_kind(key, kind, pose_gain=pose_gain)
        return reg

    @classmethod
    def from_kinds(cls, kinds: Mapping[str, str],
                   pose_gain: float = DEFAULT_POSE_GAIN) -> "MetricRegistry":
        reg = cls()
        for key, kind in kinds.items():
            reg.register_kind(key, kind, pose_gain=pose_gain)
        return reg

    def register(self, key: str, fn: DistanceFn) -> None:
        self._fns[key] = fn

    def register_kind(self, key: str, kind: str,
                      pose_gain: float = DEFAULT_POSE_GAIN) -> None:
        try:
            builder = _KINDS[kind]
        except KeyError:
            raise ValidationError(
                f"unknown metric kind {kind!r}; expected one of {sorted(_KINDS)}"
            ) from None
        self._fns[key] = builder(pose_gain) if kind == "pose" else builder()

    def get(self, key: str) -> DistanceFn | None:
        return self._fns.get(key)

    def keys(self) -> list[str]:
        return sorted(self._fns)


@dataclass
class WeightTable:
    """Per-key similarity weights; unknown keys default to 1.0."""

    weights: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, w in self.weights.items():
            if not (isinstance(w, (int, float)) and math.isfinite(w) and w > 0):
                raise ValidationError(
                    f"weight for {key!r} must be a finite value > 0, got {w!r}")
        self.weights = {k: float(v) for k, v in self.weights.items()}

    def weight(self, key: str) -> float:
        return self.weights.get(key, 1.0)

    def scaled(self, factor: float) -> "WeightTable":
        return WeightTable({k: v * factor for k, v in self.weights.items()})


def percept_distances(a: Mapping[str, Sequence[float]],
                      b: Mapping[str, Sequence[float]],
                      registry: MetricRegistry) -> dict[str, float]:
    """Per-key distances over the shared numeric keys with a registered metric."""
    out: dict[str, float] = {}
    for key in a:
        if key in b:
            fn = registry.get(key)
            if fn is not None:
                out[key] = fn(a[key], b[key])
    return out


def combine(distances: Mapping[str, float], weights: WeightTable) -> float:
    """Weighted-mean complement: ``1 - sum(w*d)/sum(w)`` over the given keys."""
    if not distances:
        raise IncomparableError("no shared numeric keys to compare")
    total_w = 0.0
    total = 0.0
    for key, d in distances.items():
        w = weights.weight(key)
        total_w += w
        total += w * d
    return 1.0 - total / total_w


def percept_similarity(a: Mapping[str, Sequence[float]],
                       b: Mapping[str, Sequence[float]],
                       weights: WeightTable,
                       registry: MetricRegistry) -> float:
    """Similarity of two numeric percept maps; raises when incomparable."""
    return combine(percept_distances(a, b, registry), weights)


def similarity(hyp: Hypothesis, obj: BeliefObject, weights: WeightTable,
               registry: MetricRegistry | None = None) -> float:
    """Similarity of a scene hypothesis to a belief object.

    The object side is represented by its most recently associated
    hypothesis.  Raises :class:`IncomparableError` when the two share no
    registered numeric key (callers in resolution score such pairs as 0).
    """
    if obj.last_hypothesis is None:
        raise IncomparableError(f"object {obj.oid} has no recorded hypothesis")
    reg = registry if registry is not None else MetricRegistry.default()
    return percept_similarity(hyp.numeric(), obj.last_hypothesis.numeric(),
                              weights, reg)
