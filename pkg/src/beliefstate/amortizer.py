"""Amortized query answering: answer now, enrich from the past when idle.

A query is answered immediately against the current scene, then parked in a
FIFO queue.  Whenever spare work budget exists (accrued while the system
skips or idles), :func:`backfill` walks older logged scenes newest-first for
the queue head, runs the annotators the query demands, and appends the
resulting symbols to the owning objects' histories at the historical
timestamps.  A per-(scene, key) ledger makes every annotator pass happen at
most once, so overlapping queries share work instead of repeating it.

Aggregation over an object's past is controlled by two parameters: ``ac``,
how many of the object's most recent occurrences to integrate, and ``cf``,
the minimum stored confidence an annotation needs to take part.
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .annotators import AnnotatorBank
from .core import BeliefObject, Episode, Scene
from .errors import ValidationError
from .qlang import Query, format_query, match

# Tolerance when comparing float budget balances against costs.
_BUDGET_EPS = 1e-9


@dataclass(frozen=True)
class AmortizationParams:
    """Temporal integration parameters.

    ``ac`` is the occurrence window: how many of an object's most recent
    sightings (at or before the query time) contribute.  ``cf`` is the
    confidence floor a stored annotation must reach to be integrated.
    """

    ac: int = 12
    cf: float = 0.62

    def __post_init__(self) -> None:
        if self.ac < 1:
            raise ValidationError(f"ac must be >= 1, got {self.ac}")
        if not 0.0 <= self.cf <= 1.0:
            raise ValidationError(f"cf must lie in [0,1], got {self.cf}")


@dataclass
class WorkBudget:
    """Spare annotation capacity, measured in scene-times-annotator passes."""

    available: float = 0.0
    cost_per_scene: float = 1.0
    accrued_total: float = 0.0
    spent_total: float = 0.0

    def __post_init__(self) -> None:
        if self.available < 0 or self.cost_per_scene <= 0:
            raise ValidationError("budget needs available >= 0 and cost > 0")

    def accrue(self, units: float) -> None:
        if units < 0:
            raise ValidationError("cannot accrue negative budget")
        self.available += units
        self.accrued_total += units

    def affords(self, passes: int) -> bool:
        return self.available + _BUDGET_EPS >= passes * self.cost_per_scene

    def spend(self, passes: int) -> None:
        cost = passes * self.cost_per_scene
        if not self.affords(passes):
            raise ValidationError(
                f"budget underflow: cost {cost} > available {self.available}")
        self.available = max(0.0, self.available - cost)
        self.spent_total += cost

    def snapshot(self) -> dict:
        return {"available": self.available,
                "accrued_total": self.accrued_total,
                "spent_total": self.spent_total,
                "cost_per_scene": self.cost_per_scene}


@dataclass
class PendingQuery:
    """Queue entry: the query plus its walk cursor over the past.

    ``low_water`` is the timestamp of the oldest scene this query has
    visited; backfill continues strictly below it, newest first.
    """

    query: Query
    enqueued_at: float
    low_water: float | None = None


class QueryQueue:
    """First-come-first-served queue of queries awaiting backfill."""

    def __init__(self) -> None:
        self.pending: deque[PendingQuery] = deque()

    def __len__(self) -> int:
        return len(self.pending)

    def enqueue(self, query: Query, at: float) -> PendingQuery:
        entry = PendingQuery(query=query, enqueued_at=at)
        query.received_at = at
        self.pending.append(entry)
        return entry

    def head(self) -> PendingQuery | None:
        return self.pending[0] if self.pending else None

    def to_dict(self) -> list[dict]:
        return [{"query": format_query(e.query),
                 "enqueued_at": e.enqueued_at,
                 "low_water": e.low_water}
                for e in self.pending]


class AnnotationLedger:
    """Tracks which (scene, key) annotator passes already ran."""

    def __init__(self) -> None:
        self.done: set[tuple[float, str]] = set()

    def is_done(self, scene_ts: float, key: str) -> bool:
        return (scene_ts, key) in self.done

    def mark(self, scene_ts: float, key: str) -> None:
        self.done.add((scene_ts, key))


def annotatable_keys(query: Query, bank: AnnotatorBank) -> list[str]:
    """Constraint keys an annotator pass can act on (flat keys only)."""
    return [key for key in query.keys() if "." not in key]


def annotate_scene(episode: Episode, scene: Scene, keys: Iterable[str],
                   bank: AnnotatorBank, ledger: AnnotationLedger) -> int:
    """Run annotators for the given keys over one scene's owned hypotheses.

    Results are appended to the owning objects' symbol histories at the
    scene's timestamp; hypotheses that were never associated (the scene was
    skipped) yield nothing.  Already-ledgered keys are skipped.  Returns the
    number of annotator passes actually run, for budget accounting.
    """
    passes = 0
    for key in keys:
        if ledger.is_done(scene.timestamp, key):
            continue
        for hyp in scene.hypotheses:
            oid = episode.owner_of(scene.timestamp, hyp.hyp_id)
            if oid is None:
                continue
            answer = bank.annotate(key, hyp)
            if answer is None:
                continue
            symbol, confidence = answer
            episode.record_symbol(oid, scene.timestamp, key, symbol,
                                  confidence)
        ledger.mark(scene.timestamp, key)
        passes += 1
    return passes


def aggregate_symbol(obj: BeliefObject, key: str, at: float,
                     params: AmortizationParams) -> tuple[str, float] | None:
    """Integrated symbol for one key over an object's recent occurrences.

    Considers the object's last ``ac`` occurrences at or before ``at`` and
    the stored annotations at those timestamps whose confidence reaches
    ``cf``.  Returns the confidence-weighted majority symbol (ties fall to
    the symbol annotated most recently) together with the mean confidence of
    that symbol's qualifying entries; None when nothing qualifies.
    """
    timestamps = [occ.timestamp for occ in obj.history]
    cut = bisect.bisect_right(timestamps, at)
    if cut == 0:
        return None
    window = set(timestamps[max(0, cut - params.ac):cut])
    weight: dict[str, float] = {}
    latest: dict[str, float] = {}
    confs: dict[str, list[float]] = {}
    for record in obj.symbol_history.get(key, []):
        if record.timestamp not in window or record.confidence < params.cf:
            continue
        weight[record.symbol] = weight.get(record.symbol, 0.0) + record.confidence
        latest[record.symbol] = max(latest.get(record.symbol, float("-inf")),
                                    record.timestamp)
        confs.setdefault(record.symbol, []).append(record.confidence)
    if not weight:
        return None
    winner = max(weight, key=lambda s: (weight[s], latest[s]))
    values = confs[winner]
    return winner, sum(values) / len(values)


def make_view(params: AmortizationParams):
    """Symbol view over aggregated histories, for :func:`qlang.match`."""
    def view(obj: BeliefObject, key: str, at: float):
        return aggregate_symbol(obj, key, at, params)
    return view

# View reproducing single-scene answers: only the current occurrence counts
# and any stored annotation qualifies (storage already gated it).
ONE_SHOT_PARAMS = AmortizationParams(ac=1, cf=0.0)


def answer_now(query: Query, episode: Episode, params: AmortizationParams,
               bank: AnnotatorBank,
               ledger: AnnotationLedger) -> list[tuple[int, str | None]]:
    """Answer a query against the current scene, integrating as configured.

    Runs the demanded annotators on the current scene's hypotheses, records
    the results, then matches all belief objects using aggregation under
    ``params``.  Returns (oid, hyp_id-in-current-scene) pairs sorted by oid;
    the hypothesis is None for objects not sighted in the current scene.
    """
    scene = episode.latest_scene
    if scene is None:
        raise ValidationError("cannot answer a query on an empty episode")
    at = scene.timestamp
    if query.t_max is not None:
        at = min(at, query.t_max)
    annotate_scene(episode, scene, annotatable_keys(query, bank), bank, ledger)
    view = make_view(params)
    answers: list[tuple[int, str | None]] = []
    for obj in episode.belief:
        if match(query, obj, at, view):
            hyp_id = None
            for occ in reversed(obj.history):
                if occ.timestamp == scene.timestamp:
                    hyp_id = occ.hyp_id
                    break
            answers.append((obj.oid, hyp_id))
    answers.sort(key=lambda pair: pair[0])
    return answers


def backfill(queue: QueryQueue, episode: Episode, budget: WorkBudget,
             bank: AnnotatorBank, ledger: AnnotationLedger) -> dict:
    """Spend available budget walking the past for the queued queries.

    First come, first served: the queue head walks logged scenes newest
    first from its cursor, paying one budget unit per scene-and-key
    annotator pass.  Scenes already annotated for a key cost nothing.  The
    walk stops when the budget cannot cover the next scene's passes; the
    cursor persists so a later call resumes exactly there.  Queries whose
    walk reached the oldest scene leave the queue.
    """
    report = {"passes": 0, "scenes_visited": 0, "completed": 0}
    timestamps = [s.timestamp for s in episode.scenes]
    while queue.pending:
        entry = queue.pending[0]
        keys = annotatable_keys(entry.query, bank)
        if not keys or not episode.scenes:
            queue.pending.popleft()
            report["completed"] += 1
            continue
        if entry.low_water is None:
            pos = len(timestamps) - 1
        else:
            pos = bisect.bisect_left(timestamps, entry.low_water) - 1
        stalled = False
        while pos >= 0:
            scene = episode.scenes[pos]
            needed = [k for k in keys
                      if not ledger.is_done(scene.timestamp, k)]
            if needed:
                if not budget.affords(len(needed)):
                    stalled = True
                    break
                ran = annotate_scene(episode, scene, needed, bank, ledger)
                budget.spend(ran)
                report["passes"] += ran
                report["scenes_visited"] += 1
            entry.low_water = scene.timestamp
            pos -= 1
        if stalled:
            break
        queue.pending.popleft()
        report["completed"] += 1
    return report
