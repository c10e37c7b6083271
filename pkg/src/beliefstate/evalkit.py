"""Scoring symbolic answers against ground truth, and the (ac, cf) grid search.

Scoring walks every ground-truthed hypothesis that was associated during
replay and asks for its predicted symbol per symbol type, either from the
scene in isolation (``one_shot``) or by aggregating the object's recent
history (``amortized``).  Hypotheses without a prediction count against
coverage but stay out of accuracy/precision/recall.  Precision and recall
are macro-averaged over symbol values.

The grid search evaluates one annotation pass once and then re-runs only the
aggregation per (ac, cf) point, which is equivalent to a full re-run because
annotators are deterministic and deduplicated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .amortizer import (
    AmortizationParams,
    AnnotationLedger,
    aggregate_symbol,
    annotate_scene,
)
from .annotators import AnnotatorBank
from .core import Episode
from .errors import IntegrityError, UnknownReferenceError, ValidationError

SYMBOL_TYPES = ("shape", "color", "class")
MODE_ONE_SHOT = "one_shot"
MODE_AMORTIZED = "amortized"


class GroundTruth:
    """True symbols per (scene timestamp, hypothesis id)."""

    def __init__(self, records: Mapping[tuple[float, str], Mapping[str, str]]) -> None:
        self.records: dict[tuple[float, str], dict[str, str]] = {
            key: dict(labels) for key, labels in records.items()}
        for key, labels in self.records.items():
            for symbol_type in labels:
                if symbol_type not in SYMBOL_TYPES:
                    raise ValidationError(
                        f"unknown symbol type {symbol_type!r} in ground truth "
                        f"for {key}")

    def __len__(self) -> int:
        return len(self.records)

    def items(self):
        return self.records.items()

    def check_against(self, episode: Episode) -> None:
        """Every record must reference an existing scene hypothesis."""
        for (ts, hyp_id) in self.records:
            if not episode.has_scene(ts):
                raise IntegrityError(
                    f"ground truth references missing scene t={ts}")
            try:
                episode.scene_at(ts).hypothesis(hyp_id)
            except UnknownReferenceError as err:
                raise IntegrityError(str(err)) from None


@dataclass(frozen=True)
class TypeScores:
    """Accuracy / macro precision / macro recall for one symbol type."""

    accuracy: float
    precision: float
    recall: float
    support: int
    empty_support: bool


@dataclass(frozen=True)
class EvalReport:
    """Outcome of scoring one mode at one parameter point."""

    mode: str
    params: AmortizationParams
    per_type: dict[str, TypeScores]
    coverage: float
    n_scored: int

    def row(self) -> dict:
        """Flat class-metric row for delimited output."""
        scores = self.per_type.get("class")
        return {
            "ac": self.params.ac,
            "cf": self.params.cf,
            "accuracy": scores.accuracy if scores else 0.0,
            "precision": scores.precision if scores else 0.0,
            "recall": scores.recall if scores else 0.0,
            "coverage": self.coverage,
            "mode": self.mode,
        }


def annotate_episode(episode: Episode, keys: Iterable[str],
                     bank: AnnotatorBank,
                     ledger: AnnotationLedger | None = None) -> AnnotationLedger:
    """Run the annotators for the given keys over every logged scene.

    Equivalent to a budget-unconstrained backfill; the shared ledger keeps
    the pass idempotent.
    """
    ledger = ledger if ledger is not None else AnnotationLedger()
    for scene in episode.scenes:
        annotate_scene(episode, scene, keys, bank, ledger)
    return ledger


def macro_precision_recall(
        pairs: Sequence[tuple[str, str]]) -> tuple[float, float]:
    """Macro-averaged precision and recall over (truth, predicted) pairs.

    Averages run over the union of true and predicted labels; a label with
    no predicted (or no true) instances contributes 0 to its mean.
    """
    labels = sorted({t for t, _ in pairs} | {p for _, p in pairs})
    if not labels:
        return 0.0, 0.0
    precisions = []
    recalls = []
    for label in labels:
        tp = sum(1 for t, p in pairs if t == label and p == label)
        fp = sum(1 for t, p in pairs if t != label and p == label)
        fn = sum(1 for t, p in pairs if t == label and p != label)
        precisions.append(tp / (tp + fp) if tp + fp else 0.0)
        recalls.append(tp / (tp + fn) if tp + fn else 0.0)
    return (sum(precisions) / len(labels), sum(recalls) / len(labels))


def score(episode: Episode, gt: GroundTruth, params: AmortizationParams,
          mode: str, bank: AnnotatorBank) -> EvalReport:
    """Score predicted symbols against ground truth.

    ``mode`` selects how a hypothesis's prediction is produced: from its own
    scene alone, or by temporal aggregation under ``params``.  Only
    hypotheses that were associated during replay are scored; the episode
    must already be replayed, and for the amortized mode annotated (see
    :func:`annotate_episode`).
    """
    if mode not in (MODE_ONE_SHOT, MODE_AMORTIZED):
        raise ValidationError(f"unknown eval mode {mode!r}")
    gt.check_against(episode)

    universe: list[tuple[float, str, int, dict[str, str]]] = []
    for (ts, hyp_id), labels in sorted(gt.items()):
        oid = episode.owner_of(ts, hyp_id)
        if oid is None:
            continue  # scene was skipped; the hypothesis joined no object
        universe.append((ts, hyp_id, oid, labels))

    pairs: dict[str, list[tuple[str, str]]] = {t: [] for t in SYMBOL_TYPES}
    covered = 0
    for ts, hyp_id, oid, labels in universe:
        for symbol_type, truth in labels.items():
            if mode == MODE_ONE_SHOT:
                hyp = episode.scene_at(ts).hypothesis(hyp_id)
                answer = bank.annotate(symbol_type, hyp)
            else:
                answer = aggregate_symbol(
                    episode.object(oid), symbol_type, ts, params)
            if symbol_type == "class" and answer is not None:
                covered += 1
            if answer is not None:
                pairs[symbol_type].append((truth, answer[0]))

    per_type: dict[str, TypeScores] = {}
    for symbol_type in SYMBOL_TYPES:
        scored_pairs = pairs[symbol_type]
        if not scored_pairs:
            per_type[symbol_type] = TypeScores(0.0, 0.0, 0.0, 0, True)
            continue
        correct = sum(1 for t, p in scored_pairs if t == p)
        precision, recall = macro_precision_recall(scored_pairs)
        per_type[symbol_type] = TypeScores(
            accuracy=correct / len(scored_pairs),
            precision=precision,
            recall=recall,
            support=len(scored_pairs),
            empty_support=False,
        )
    coverage = covered / len(universe) if universe else 0.0
    return EvalReport(mode=mode, params=params, per_type=per_type,
                      coverage=coverage, n_scored=len(universe))


@dataclass
class GridResult:
    """All grid-point reports plus the selected operating point."""

    reports: list[EvalReport]
    selected: AmortizationParams
    baseline: EvalReport | None = None

    def rows(self) -> list[dict]:
        out = [r.row() for r in self.reports]
        if self.baseline is not None:
            out.append(self.baseline.row())
        return out


def select_params(reports: Sequence[EvalReport],
                  normalized: bool = False) -> AmortizationParams:
    """Operating-point rule: cross coverage with accuracy, then go greedy.

    Among the grid points whose |coverage - class accuracy| gap is minimal,
    pick the one maximizing ac + cf (the raw sum; with ``normalized`` both
    coordinates are first rescaled to [0,1] over the swept ranges, an
    alternative with no accuracy claim attached).  Remaining ties fall to
    the larger ac, then the larger cf.
    """
    if not reports:
        raise ValidationError("cannot select from an empty grid")
    gaps = []
    for report in reports:
        scores = report.per_type.get("class")
        accuracy = scores.accuracy if scores else 0.0
        gaps.append(abs(report.coverage - accuracy))
    best_gap = min(gaps)
    candidates = [r for r, gap in zip(reports, gaps) if gap == best_gap]
    if normalized:
        ac_values = [r.params.ac for r in reports]
        cf_values = [r.params.cf for r in reports]
        ac_span = (max(ac_values) - min(ac_values)) or 1
        cf_span = (max(cf_values) - min(cf_values)) or 1.0

        def objective(r: EvalReport) -> float:
            return ((r.params.ac - min(ac_values)) / ac_span
                    + (r.params.cf - min(cf_values)) / cf_span)
    else:
        def objective(r: EvalReport) -> float:
            return r.params.ac + r.params.cf
    chosen = max(candidates,
                 key=lambda r: (objective(r), r.params.ac, r.params.cf))
    return chosen.params


def grid_search(episode: Episode, gt: GroundTruth,
                ac_values: Sequence[int], cf_values: Sequence[float],
                bank: AnnotatorBank, *, normalized_rule: bool = False,
                include_baseline: bool = True) -> GridResult:
    """Evaluate the amortized mode over a parameter grid and pick a point.

    The annotation pass runs once; every grid point only re-aggregates.
    """
    if not ac_values or not cf_values:
        raise ValidationError("grid needs at least one ac and one cf value")
    keys = sorted({t for _, labels in gt.items() for t in labels})
    annotate_episode(episode, keys, bank)
    reports = []
    for ac in ac_values:
        for cf in cf_values:
            params = AmortizationParams(ac=ac, cf=cf)
            reports.append(score(episode, gt, params, MODE_AMORTIZED, bank))
    baseline = None
    if include_baseline:
        baseline = score(episode, gt, AmortizationParams(ac=1, cf=0.0),
                         MODE_ONE_SHOT, bank)
    selected = select_params(reports, normalized=normalized_rule)
    return GridResult(reports=reports, selected=selected, baseline=baseline)
