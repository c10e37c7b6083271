"""Replay: drive the full pipeline over a logged episode.

Each arriving scene is appended to the episode, passed through the filters,
and, when processed, resolved against the belief state.  Skip decisions and
long inter-scene gaps accrue work budget; after every scene the amortizer
spends whatever budget is available backfilling queued queries.  A query
script interleaves detect queries with the scene stream: each query is
answered immediately at its timestamp and then queued for backfill, and the
transcript records whether temporal integration changed its answer compared
to the current scene alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .amortizer import (
    ONE_SHOT_PARAMS,
    AnnotationLedger,
    QueryQueue,
    WorkBudget,
    answer_now,
    backfill,
)
from .config import EngineConfig
from .core import Episode, Scene
from .errors import QueryParseError, ValidationError
from .filters import region_filter, should_process
from .qlang import parse_query
from .resolution import resolve_scene


@dataclass(frozen=True)
class SceneDecision:
    """Filter outcome for one scene, as listed in run reports."""

    timestamp: float
    processed: bool
    reason: str | None
    dropped_hypotheses: int
    new_objects: int


@dataclass
class QueryOutcome:
    """Transcript entry for one script query."""

    timestamp: float
    text: str
    error: str | None = None
    answers: list[tuple[int, str | None]] = field(default_factory=list)
    one_shot: list[tuple[int, str | None]] = field(default_factory=list)
    gained_objects: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "t": self.timestamp,
            "query": self.text,
            "error": self.error,
            "answers": [[oid, hyp_id] for oid, hyp_id in self.answers],
            "one_shot": [[oid, hyp_id] for oid, hyp_id in self.one_shot],
            "gained_objects": list(self.gained_objects),
        }


@dataclass
class RunResult:
    """Everything a replay produced."""

    episode: Episode
    decisions: list[SceneDecision]
    transcript: list[QueryOutcome]
    budget: WorkBudget
    queue: QueryQueue
    ledger: AnnotationLedger

    def skip_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for d in self.decisions:
            if not d.processed:
                counts[d.reason] = counts.get(d.reason, 0) + 1
        return counts

    def report(self) -> dict:
        processed = sum(1 for d in self.decisions if d.processed)
        return {
            "scenes": len(self.decisions),
            "processed": processed,
            "skipped": len(self.decisions) - processed,
            "skip_reasons": dict(sorted(self.skip_counts().items())),
            "objects": len(self.episode.belief),
            "hypotheses": sum(len(s.hypotheses)
                              for s in self.episode.scenes),
            "budget": self.budget.snapshot(),
            "pending_queries": self.queue.to_dict(),
            "decisions": [{
                "t": d.timestamp,
                "processed": d.processed,
                "reason": d.reason,
                "dropped_hypotheses": d.dropped_hypotheses,
                "new_objects": d.new_objects,
            } for d in self.decisions],
            "queries": [q.to_dict() for q in self.transcript],
            "belief": self.episode.belief_summary(),
        }


def replay(scenes: Iterable[Scene], config: EngineConfig | None = None,
           script: Sequence[tuple[float, str]] | None = None,
           base_dir=None) -> RunResult:
    """Run the pipeline over a scene stream with an optional query script.

    ``script`` holds (timestamp, query text) pairs in non-decreasing time
    order.  Queries timestamped before a scene are answered against the
    belief state as of the preceding scene; queries at or after the final
    scene are answered against the final state.
    """
    cfg = config if config is not None else EngineConfig()
    weights = cfg.weight_table()
    registry = cfg.registry()
    resolution_cfg = cfg.resolution()
    bank = cfg.bank(base_dir)
    params = cfg.amortization

    episode = Episode()
    queue = QueryQueue()
    budget = WorkBudget(cost_per_scene=cfg.budget.cost_per_scene)
    ledger = AnnotationLedger()
    decisions: list[SceneDecision] = []
    transcript: list[QueryOutcome] = []

    pending = sorted(script, key=lambda e: e[0]) if script else []
    if script and list(script) != pending:
        raise ValidationError("query script must be time-ordered")
    qi = 0

    def handle_query(ts: float, text: str) -> None:
        outcome = QueryOutcome(timestamp=ts, text=text)
        transcript.append(outcome)
        try:
            query = parse_query(text)
        except QueryParseError as err:
            outcome.error = str(err)
            return
        if episode.latest_scene is None:
            outcome.error = "no scene logged yet"
            return
        outcome.answers = answer_now(query, episode, params, bank, ledger)
        outcome.one_shot = answer_now(query, episode, ONE_SHOT_PARAMS, bank,
                                      ledger)
        answered = {oid for oid, _ in outcome.answers}
        baseline = {oid for oid, _ in outcome.one_shot}
        outcome.gained_objects = sorted(answered - baseline)
        queue.enqueue(query, at=episode.latest_scene.timestamp)

    prev_scene: Scene | None = None
    for scene in scenes:
        while qi < len(pending) and pending[qi][0] < scene.timestamp:
            handle_query(*pending[qi])
            backfill(queue, episode, budget, bank, ledger)
            qi += 1
        episode.append_scene(scene)
        decision = should_process(
            scene, prev_scene, cfg.filters,
            task_hint=scene.annotations.get("task_phase"),
            weights=weights, registry=registry)
        gap = scene.timestamp - prev_scene.timestamp if prev_scene else 0.0
        if cfg.budget.rate > 0 and gap > 0:
            if (not decision.process or gap > cfg.budget.idle_gap
                    or scene.activity in ("idle", "moving")):
                budget.accrue(cfg.budget.rate * gap)
        dropped = 0
        new_objects = 0
        if decision.process:
            hyp_ids = (region_filter(scene, cfg.filters.regions)
                       if cfg.filters.enabled else None)
            if hyp_ids is not None:
                dropped = len(scene.hypotheses) - len(hyp_ids)
            associations = resolve_scene(episode, scene, resolution_cfg,
                                         hyp_ids=hyp_ids)
            new_objects = sum(1 for a in associations if a.via == "new")
        decisions.append(SceneDecision(
            timestamp=scene.timestamp,
            processed=decision.process,
            reason=decision.reason,
            dropped_hypotheses=dropped,
            new_objects=new_objects,
        ))
        while qi < len(pending) and pending[qi][0] <= scene.timestamp:
            handle_query(*pending[qi])
            qi += 1
        backfill(queue, episode, budget, bank, ledger)
        prev_scene = scene

    while qi < len(pending):
        handle_query(*pending[qi])
        backfill(queue, episode, budget, bank, ledger)
        qi += 1

    return RunResult(episode=episode, decisions=decisions,
                     transcript=transcript, budget=budget, queue=queue,
                     ledger=ledger)


def run_queries(scenes: Iterable[Scene],
                script: Sequence[tuple[float, str]],
                config: EngineConfig | None = None,
                base_dir=None) -> list[QueryOutcome]:
    """Replay with a script and return just the answers transcript."""
    return replay(scenes, config, script=script, base_dir=base_dir).transcript
