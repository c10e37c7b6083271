"""Engine configuration: one JSON file with a section per subsystem.

Sections: ``weights`` (similarity weight table), ``metrics`` (percept key to
distance kind), ``resolution``, ``filters``, ``amortization``, ``budget``,
and ``annotators``.  Every field has a default, so an empty object is a
valid configuration.  Dotted overrides (``section.key=value``) support
command-line tweaking without editing the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .annotators import AnnotatorBank, ColorBinLayout, KnnModel
from .core import Box3
from .errors import ParseError, ValidationError
from .filters import DEFAULT_BLUR_THRESHOLD, FilterConfig
from .metrics import (
    DEFAULT_KEY_KINDS,
    DEFAULT_POSE_GAIN,
    MetricRegistry,
    WeightTable,
)
from .amortizer import AmortizationParams
from .resolution import ResolutionConfig


@dataclass
class BudgetConfig:
    """How spare annotation budget accrues during replay.

    ``rate`` converts idle or skipped wall-clock seconds into work units
    (one unit pays one scene-and-key annotator pass).  Inter-scene gaps
    longer than ``idle_gap`` seconds count as idle time even when the
    arriving scene itself is processed.
    """

    rate: float = 1.0
    idle_gap: float = 5.0
    cost_per_scene: float = 1.0

    def __post_init__(self) -> None:
        if self.rate < 0 or self.idle_gap < 0 or self.cost_per_scene <= 0:
            raise ValidationError(
                "budget needs rate >= 0, idle_gap >= 0, cost_per_scene > 0")


@dataclass
class AnnotatorConfig:
    """Where annotators get their inputs and models."""

    knn_table: str | None = None
    knn_k: int = 1
    knn_confidence: float = 0.6
    descriptor_key: str = "decaf"
    color_key: str = "hsv_histogram"
    hue_bins: int = 12


@dataclass
class EngineConfig:
    """Everything the replay pipeline needs, assembled from one file."""

    weights: dict[str, float] = field(default_factory=dict)
    metrics: dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_KEY_KINDS))
    pose_gain: float = DEFAULT_POSE_GAIN
    sim_threshold: float = 0.7
    fastmatch_pose_gate: float = 0.2
    fastmatch_time_gate: float = 5.0
    filters: FilterConfig = field(default_factory=FilterConfig)
    amortization: AmortizationParams = field(
        default_factory=AmortizationParams)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    annotators: AnnotatorConfig = field(default_factory=AnnotatorConfig)

    # -- assembly ------------------------------------------------------------

    def weight_table(self) -> WeightTable:
        return WeightTable(dict(self.weights))

    def registry(self) -> MetricRegistry:
        return MetricRegistry.from_kinds(self.metrics,
                                         pose_gain=self.pose_gain)

    def resolution(self) -> ResolutionConfig:
        return ResolutionConfig(
            sim_threshold=self.sim_threshold,
            fastmatch_pose_gate=self.fastmatch_pose_gate,
            fastmatch_time_gate=self.fastmatch_time_gate,
            weights=self.weight_table(),
            registry=self.registry(),
        )

    def bank(self, base_dir: str | Path | None = None) -> AnnotatorBank:
        knn = None
        if self.annotators.knn_table is not None:
            from .scenelog import read_descriptor_table
            table_path = Path(self.annotators.knn_table)
            if base_dir is not None and not table_path.is_absolute():
                table_path = Path(base_dir) / table_path
            rows = read_descriptor_table(table_path)
            knn = KnnModel.from_table(
                rows, k=self.annotators.knn_k,
                base_confidence_threshold=self.annotators.knn_confidence)
        return AnnotatorBank(
            knn=knn,
            layout=ColorBinLayout(hue_bins=self.annotators.hue_bins),
            color_key=self.annotators.color_key,
            descriptor_key=self.annotators.descriptor_key,
        )

    # -- (de)serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        f = self.filters
        return {
            "weights": dict(self.weights),
            "metrics": dict(self.metrics),
            "pose_gain": self.pose_gain,
            "resolution": {
                "sim_threshold": self.sim_threshold,
                "fastmatch_pose_gate": self.fastmatch_pose_gate,
                "fastmatch_time_gate": self.fastmatch_time_gate,
            },
            "filters": {
                "enabled": f.enabled,
                "regions": [{"lo": list(b.lo), "hi": list(b.hi)}
                            for b in f.regions],
                "motion_gate": f.motion_gate,
                "static_skip_sim": f.static_skip_sim,
                "blur_threshold": f.blur_threshold,
                "no_perception_phases": list(f.no_perception_phases),
            },
            "amortization": {"ac": self.amortization.ac,
                             "cf": self.amortization.cf},
            "budget": {"rate": self.budget.rate,
                       "idle_gap": self.budget.idle_gap,
                       "cost_per_scene": self.budget.cost_per_scene},
            "annotators": {
                "knn_table": self.annotators.knn_table,
                "knn_k": self.annotators.knn_k,
                "knn_confidence": self.annotators.knn_confidence,
                "descriptor_key": self.annotators.descriptor_key,
                "color_key": self.annotators.color_key,
                "hue_bins": self.annotators.hue_bins,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        if not isinstance(data, dict):
            raise ValidationError("configuration must be a JSON object")
        known = {"weights", "metrics", "pose_gain", "resolution", "filters",
                 "amortization", "budget", "annotators"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(
                f"unknown configuration sections: {sorted(unknown)}")
        try:
            resolution = data.get("resolution", {})
            filters_data = data.get("filters", {})
            regions = tuple(
                Box3(tuple(b["lo"]), tuple(b["hi"]))
                for b in filters_data.get("regions", ()))
            filters = FilterConfig(
                enabled=filters_data.get("enabled", True),
                regions=regions,
                motion_gate=filters_data.get("motion_gate", 0.1),
                static_skip_sim=filters_data.get("static_skip_sim", 0.995),
                blur_threshold=filters_data.get(
                    "blur_threshold", DEFAULT_BLUR_THRESHOLD),
                no_perception_phases=tuple(
                    filters_data.get("no_perception_phases", ("transit",))),
            )
            amort = data.get("amortization", {})
            return cls(
                weights=dict(data.get("weights", {})),
                metrics=dict(data.get("metrics", DEFAULT_KEY_KINDS)),
                pose_gain=data.get("pose_gain", DEFAULT_POSE_GAIN),
                sim_threshold=resolution.get("sim_threshold", 0.7),
                fastmatch_pose_gate=resolution.get("fastmatch_pose_gate", 0.2),
                fastmatch_time_gate=resolution.get("fastmatch_time_gate", 5.0),
                filters=filters,
                amortization=AmortizationParams(
                    ac=amort.get("ac", 12), cf=amort.get("cf", 0.62)),
                budget=BudgetConfig(**data.get("budget", {})),
                annotators=AnnotatorConfig(**data.get("annotators", {})),
            )
        except (KeyError, TypeError) as err:
            raise ValidationError(f"malformed configuration: {err}") from None

    @classmethod
    def load(cls, path: str | Path) -> "EngineConfig":
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ParseError(f"invalid JSON: {err.msg}", source=str(path),
                             line=err.lineno) from None
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    def apply_overrides(self, overrides: dict[str, Any]) -> "EngineConfig":
        """New config with dotted ``section.key`` entries replaced."""
        data = self.to_dict()
        open_sections = ("weights", "metrics")  # accept new keys here
        for dotted, value in overrides.items():
            parts = dotted.split(".")
            node = data
            for part in parts[:-1]:
                if part not in node or not isinstance(node[part], dict):
                    raise ValidationError(
                        f"unknown configuration path {dotted!r}")
                node = node[part]
            if parts[-1] not in node and parts[0] not in open_sections:
                raise ValidationError(f"unknown configuration key {dotted!r}")
            node[parts[-1]] = value
        return EngineConfig.from_dict(data)
