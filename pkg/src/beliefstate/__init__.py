"""Amortized belief-state engine over perception scene logs.

The package turns a chronological stream of segmented object hypotheses into
a persistent set of belief objects, answers symbol queries against them by
aggregating annotation history, and spreads annotation work over idle time
under an explicit budget.
"""

from .amortizer import (
    ONE_SHOT_PARAMS,
    AmortizationParams,
    AnnotationLedger,
    QueryQueue,
    WorkBudget,
    aggregate_symbol,
    answer_now,
    backfill,
)
from .annotators import AnnotatorBank, ColorBinLayout, KnnModel, color_symbol
from .config import AnnotatorConfig, BudgetConfig, EngineConfig
from .core import (
    BeliefObject,
    Box3,
    Episode,
    FrameMeta,
    Hypothesis,
    OrientedBounds,
    Percept,
    RegionOfInterest,
    Scene,
    sym,
    vec,
)
from .errors import (
    DomainError,
    EngineError,
    IncomparableError,
    IntegrityError,
    LogParseError,
    OrderingError,
    ParseError,
    QueryParseError,
    UnknownReferenceError,
    ValidationError,
)
from .evalkit import EvalReport, GroundTruth, grid_search, score, select_params
from .filters import FilterConfig, blur_score, frame_similarity, should_process
from .metrics import (
    MetricRegistry,
    WeightTable,
    percept_similarity,
    similarity,
)
from .qlang import Query, format_query, parse_query
from .replay import RunResult, replay, run_queries
from .resolution import Association, ResolutionConfig, resolve_scene
from .simkit import SimSpec, generate, make_episode_spec

__version__ = "0.1.0"

__all__ = [
    "AmortizationParams",
    "AnnotationLedger",
    "AnnotatorBank",
    "AnnotatorConfig",
    "Association",
    "BeliefObject",
    "Box3",
    "BudgetConfig",
    "ColorBinLayout",
    "DomainError",
    "EngineConfig",
    "EngineError",
    "Episode",
    "EvalReport",
    "FilterConfig",
    "FrameMeta",
    "GroundTruth",
    "Hypothesis",
    "IncomparableError",
    "IntegrityError",
    "KnnModel",
    "LogParseError",
    "MetricRegistry",
    "ONE_SHOT_PARAMS",
    "OrderingError",
    "OrientedBounds",
    "ParseError",
    "Percept",
    "Query",
    "QueryParseError",
    "QueryQueue",
    "RegionOfInterest",
    "ResolutionConfig",
    "RunResult",
    "Scene",
    "SimSpec",
    "UnknownReferenceError",
    "ValidationError",
    "WeightTable",
    "WorkBudget",
    "aggregate_symbol",
    "answer_now",
    "backfill",
    "blur_score",
    "color_symbol",
    "format_query",
    "frame_similarity",
    "generate",
    "grid_search",
    "make_episode_spec",
    "parse_query",
    "percept_similarity",
    "replay",
    "resolve_scene",
    "run_queries",
    "score",
    "select_params",
    "should_process",
    "sym",
    "similarity",
    "vec",
    "__version__",
]
