"""Demand-driven symbol annotators: color naming and descriptor classification.

Annotators turn numeric percepts into (symbol, confidence) pairs at query
time; they are pure functions of their inputs.  The :class:`AnnotatorBank`
routes a requested symbol key to the right annotator for a hypothesis, which
for keys already present as symbolic percepts is a plain pass-through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .core import Hypothesis
from .errors import DomainError, ValidationError
from .metrics import descriptor_distance

# Chromatic names in hue order starting at red, then the achromatic names in
# the order their bins trail the histogram (dark to bright).
HUE_NAMES = ("red", "yellow", "green", "cyan", "blue", "magenta")
ACHROMATIC_NAMES = ("black", "grey", "white")
COLOR_NAMES = HUE_NAMES + ACHROMATIC_NAMES


@dataclass(frozen=True)
class ColorBinLayout:
    """Declares how an HSV color histogram is laid out.

    The first ``hue_bins`` entries cover the hue circle [0, 360) with equal
    width and hold the mass of saturated pixels.  Three trailing bins hold
    the mass of unsaturated pixels (saturation below ``saturation_gate``),
    split by brightness thirds into black, grey, and white.  Aggregating the
    hue bins into the six canonical hue regions (red at the wrap-around)
    yields nine color regions in total.
    """

    hue_bins: int = 12
    saturation_gate: float = 0.2

    def __post_init__(self) -> None:
        if self.hue_bins < 6 or self.hue_bins % 6 != 0:
            raise ValidationError(
                f"hue_bins must be a positive multiple of 6, got {self.hue_bins}")
        if not 0.0 < self.saturation_gate < 1.0:
            raise ValidationError(
                f"saturation_gate {self.saturation_gate} not in (0,1)")

    @property
    def size(self) -> int:
        return self.hue_bins + len(ACHROMATIC_NAMES)

    def hue_region(self, bin_index: int) -> str:
        """Canonical color region of a hue bin (red spans the wrap-around)."""
        center = (bin_index + 0.5) * (360.0 / self.hue_bins)
        return HUE_NAMES[int(((center + 30.0) % 360.0) // 60.0)]

    def region_bins(self, name: str) -> list[int]:
        """Histogram indices belonging to a color region."""
        if name in ACHROMATIC_NAMES:
            return [self.hue_bins + ACHROMATIC_NAMES.index(name)]
        if name not in HUE_NAMES:
            raise ValidationError(f"unknown color name {name!r}")
        return [i for i in range(self.hue_bins) if self.hue_region(i) == name]


DEFAULT_LAYOUT = ColorBinLayout()


def color_symbol(histogram: Sequence[float],
                 layout: ColorBinLayout = DEFAULT_LAYOUT) -> tuple[str, float]:
    """Dominant color name of an HSV histogram with its mass fraction.

    The winning region is the one holding the most mass; its confidence is
    that mass divided by the total, so the confidences of all nine regions
    sum to one.  Region order breaks exact ties deterministically.
    """
    values = [float(v) for v in histogram]
    if len(values) != layout.size:
        raise DomainError(
            f"histogram length {len(values)} does not match layout "
            f"size {layout.size}")
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise DomainError("histogram entries must be finite and >= 0")
    total = sum(values)
    if total <= 0:
        raise DomainError("histogram has no mass")
    masses = {name: sum(values[i] for i in layout.region_bins(name))
              for name in COLOR_NAMES}
    winner = max(COLOR_NAMES, key=lambda name: masses[name])
    return winner, masses[winner] / total


def color_histogram(name: str, layout: ColorBinLayout = DEFAULT_LAYOUT,
                    mass: float = 1.0) -> list[float]:
    """Canonical histogram with all mass in one color region.

    Inverse of :func:`color_symbol` for clean inputs; used by the simulator
    and by round-trip tests.
    """
    if mass <= 0:
        raise DomainError("histogram mass must be > 0")
    out = [0.0] * layout.size
    bins = layout.region_bins(name)
    for i in bins:
        out[i] = mass / len(bins)
    return out


@dataclass
class KnnModel:
    """Labelled descriptor table for confidence-gated nearest-neighbour naming."""

    examples: list[tuple[tuple[float, ...], str]]
    k: int = 1
    base_confidence_threshold: float = 0.6

    def __post_init__(self) -> None:
        if not self.examples:
            raise ValidationError("classifier needs at least one example")
        cleaned: list[tuple[tuple[float, ...], str]] = []
        width = None
        for vector, label in self.examples:
            v = tuple(float(x) for x in vector)
            if width is None:
                width = len(v)
            elif len(v) != width:
                raise ValidationError(
                    f"descriptor width mismatch: {len(v)} vs {width}")
            if not label:
                raise ValidationError("classifier labels must be non-empty")
            cleaned.append((v, str(label)))
        self.examples = cleaned
        if not 1 <= self.k <= len(self.examples):
            raise ValidationError(
                f"k={self.k} out of range for {len(self.examples)} examples")
        if not 0.0 <= self.base_confidence_threshold <= 1.0:
            raise ValidationError(
                f"confidence threshold {self.base_confidence_threshold} "
                f"not in [0,1]")

    @classmethod
    def from_table(cls, rows: Sequence[tuple[Sequence[float], str]],
                   k: int = 1,
                   base_confidence_threshold: float = 0.6) -> "KnnModel":
        return cls(examples=[(tuple(v), label) for v, label in rows], k=k,
                   base_confidence_threshold=base_confidence_threshold)

    def labels(self) -> list[str]:
        return sorted({label for _, label in self.examples})


def classify(model: KnnModel,
             descriptor: Sequence[float]) -> tuple[str, float] | None:
    """Confidence-gated k-NN label for a descriptor.

    Confidence is one minus the distance to the nearest example (nearest
    only, independent of k).  The label is the majority among the k nearest
    examples; label ties resolve to the label of the nearest tied example.
    Returns None when the confidence falls below the model's base threshold.
    """
    ranked = sorted(
        (descriptor_distance(descriptor, vector), idx)
        for idx, (vector, _) in enumerate(model.examples))
    confidence = 1.0 - ranked[0][0]
    if confidence < model.base_confidence_threshold:
        return None
    votes: dict[str, int] = {}
    best_rank: dict[str, int] = {}
    for rank, (_, idx) in enumerate(ranked[:model.k]):
        label = model.examples[idx][1]
        votes[label] = votes.get(label, 0) + 1
        best_rank.setdefault(label, rank)
    winner = max(votes, key=lambda label: (votes[label], -best_rank[label]))
    return winner, confidence


@dataclass
class AnnotatorBank:
    """Routes symbol keys to annotators for a given hypothesis.

    ``color`` is answered from the hypothesis's HSV histogram percept,
    ``class`` from its descriptor percept through the k-NN model, and any
    other key from a symbolic percept of the same name, if present.
    """

    knn: KnnModel | None = None
    layout: ColorBinLayout = field(default_factory=ColorBinLayout)
    color_key: str = "hsv_histogram"
    descriptor_key: str = "decaf"

    def annotate(self, key: str, hyp: Hypothesis) -> tuple[str, float] | None:
        if key == "color":
            percept = hyp.percept(self.color_key)
            if percept is None or not percept.is_numeric:
                return None
            return color_symbol(percept.vector, self.layout)
        if key == "class":
            if self.knn is None:
                return None
            percept = hyp.percept(self.descriptor_key)
            if percept is None or not percept.is_numeric:
                return None
            return classify(self.knn, percept.vector)
        percept = hyp.percept(key)
        if percept is None or percept.is_numeric:
            return None
        confidence = 1.0 if percept.confidence is None else percept.confidence
        return percept.symbol, confidence
