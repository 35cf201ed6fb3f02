"""Round-based annotation cycle: Model -> Annotate -> Process -> TrainTest
-> Evaluate -> (Done | Revise -> Model), with an agreement-regression gate
that sends a round back to Model when inter-annotator agreement stops
improving.

State is event-sourced: every transition appends one JSONL record, and
replaying the log reconstructs the exact state, so human-paced rounds
survive restarts.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Callable, Iterable, Optional

from . import annotation as ann
from .errors import IllegalTransition
from .evaluation import EvaluationReport
from .store import Project, ProjectStore

MODEL = "model"
ANNOTATE = "annotate"
PROCESS = "process"
TRAIN_TEST = "train_test"
EVALUATE = "evaluate"
REVISE = "revise"
DONE = "done"

PHASES = (MODEL, ANNOTATE, PROCESS, TRAIN_TEST, EVALUATE, REVISE, DONE)

# event -> (from_phase, to_phase)
EDGES = {
    "open_annotation": (MODEL, ANNOTATE),
    "iaa_regressed": (ANNOTATE, MODEL),
    "iaa_passed": (ANNOTATE, PROCESS),
    "processed": (PROCESS, TRAIN_TEST),
    "trained": (TRAIN_TEST, EVALUATE),
    "accept": (EVALUATE, DONE),
    "revise": (EVALUATE, REVISE),
    "new_round": (REVISE, MODEL),
}

PROCEED = "proceed"
RETURN_TO_MODEL = "return_to_model"


def iaa_gate(previous_iaa: Optional[float], new_iaa: float) -> str:
    """Strict improvement gate: the first round always proceeds; later
    rounds proceed only when agreement strictly improved."""
    if previous_iaa is None:
        return PROCEED
    return PROCEED if new_iaa > previous_iaa else RETURN_TO_MODEL


@dataclass(frozen=True)
class CycleState:
    phase: str = MODEL
    round_number: int = 1
    current_iaa: Optional[float] = None
    previous_iaa: Optional[float] = None


def advance(state: CycleState, event: str, iaa: Optional[float] = None) -> CycleState:
    """Apply one event; returns the new immutable state.

    ``iaa`` carries the round's kappa on the two gate edges. On new_round the
    round number increments and the current kappa becomes the previous one.
    """
    edge = EDGES.get(event)
    if edge is None or edge[0] != state.phase:
        raise IllegalTransition(
            "event %r is not legal in phase %r" % (event, state.phase),
            phase=state.phase,
            event=event,
        )
    _, to_phase = edge
    if event in ("iaa_passed", "iaa_regressed") and iaa is not None:
        state = replace(state, current_iaa=iaa)
    if event == "new_round":
        return replace(
            state,
            phase=to_phase,
            round_number=state.round_number + 1,
            previous_iaa=state.current_iaa,
            current_iaa=None,
        )
    return replace(state, phase=to_phase)


@dataclass
class HistoryEntry:
    ts: str
    phase_from: str
    phase_to: str
    event: str
    payload_ref: Optional[str] = None
    iaa: Optional[float] = None

    def to_json(self) -> str:
        doc = {
            "ts": self.ts,
            "phase_from": self.phase_from,
            "phase_to": self.phase_to,
            "event": self.event,
            "payload_ref": self.payload_ref,
        }
        if self.iaa is not None:
            doc["iaa"] = self.iaa
        return json.dumps(doc, ensure_ascii=False)


class CycleEngine:
    """Per-project cycle driver with an append-only transition log.

    ``max_rounds`` is a safety stop: termination is operator-driven (accept
    in Evaluate), but the revise loop refuses to start a round beyond the
    limit so an unattended cycle cannot spin forever.
    """

    def __init__(self, project_id: str, history_path: Optional[str] = None, max_rounds: int = 10):
        self.project_id = project_id
        self.history_path = history_path
        self.max_rounds = max_rounds
        self.state = CycleState()
        self.history: list[HistoryEntry] = []
        if history_path and os.path.exists(history_path):
            with open(history_path, encoding="utf-8") as fh:
                self._replay_lines(fh)

    def _replay_lines(self, lines: Iterable[str]):
        for line in lines:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            self.state = advance(self.state, doc["event"], doc.get("iaa"))
            self.history.append(
                HistoryEntry(
                    ts=doc["ts"],
                    phase_from=doc["phase_from"],
                    phase_to=doc["phase_to"],
                    event=doc["event"],
                    payload_ref=doc.get("payload_ref"),
                    iaa=doc.get("iaa"),
                )
            )

    @classmethod
    def replay(cls, project_id: str, lines: Iterable[str]) -> "CycleEngine":
        engine = cls(project_id)
        engine._replay_lines(lines)
        return engine

    def apply(self, event: str, payload_ref: Optional[str] = None, iaa: Optional[float] = None) -> CycleState:
        before = self.state
        if event == "new_round" and before.round_number >= self.max_rounds:
            raise IllegalTransition(
                "round limit reached (%d); accept or abandon the cycle" % self.max_rounds,
                phase=before.phase,
                event=event,
            )
        self.state = advance(before, event, iaa)
        entry = HistoryEntry(
            ts=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            phase_from=before.phase,
            phase_to=self.state.phase,
            event=event,
            payload_ref=payload_ref,
            iaa=iaa,
        )
        self.history.append(entry)
        if self.history_path:
            with open(self.history_path, "a", encoding="utf-8") as fh:
                fh.write(entry.to_json() + "\n")
        return self.state

    def kappa_history(self) -> list[float]:
        return [e.iaa for e in self.history if e.event == "iaa_passed" and e.iaa is not None]


@dataclass
class RoundConfig:
    """Everything one scripted pass needs.

    ``annotation_source(annotator_id, comment)`` returns a label (or raises
    OperatorAbort to pause). ``adjudication_source(comment_id, label_a,
    label_b)`` returns a label or "no_consensus"; by default every
    disagreement is a no-consensus (neutral).
    """

    guidelines: ann.Guidelines
    annotation_source: Callable
    adjudication_source: Callable = lambda cid, la, lb: ann.NO_CONSENSUS
    annotators: tuple[str, str] = ("A1", "A2")
    comment_ids: Optional[list[str]] = None
    balance_seed: int = 0
    experiment: Optional[object] = None  # experiments.ExperimentConfig


@dataclass
class RoundReport:
    round_id: str
    iaa: ann.IAAResult
    gate: str
    gold: Optional[ann.GoldCorpus] = None
    evaluation: Optional[EvaluationReport] = None


def run_round(
    store: ProjectStore,
    project_id: str,
    engine: CycleEngine,
    config: RoundConfig,
) -> RoundReport:
    """Drive one full cycle pass for a project.

    Opens (or resumes) an annotation round, collects labels from the
    configured source, computes agreement and applies the gate; on proceed
    it adjudicates, builds the balanced gold standard, runs the experiment
    grid when configured, and leaves the cycle in Evaluate for the
    operator's accept/revise decision.
    """
    project = store.get_project(project_id)
    if engine.state.phase == MODEL:
        round_state = ann.open_round(
            project, config.guidelines, config.comment_ids, config.annotators
        )
        store.save(project_id)
        engine.apply("open_annotation", payload_ref=round_state.round_id)
    elif engine.state.phase == ANNOTATE:
        round_state = _latest_open_round(project)
    else:
        raise IllegalTransition(
            "run_round requires the Model or Annotate phase, not %r" % engine.state.phase,
            phase=engine.state.phase,
            event="run_round",
        )

    try:
        for annotator in round_state.annotators:
            for cid in round_state.pending(annotator):
                label = config.annotation_source(annotator, project.comments[cid])
                ann.record_annotation(round_state, annotator, cid, label)
    finally:
        store.save(project_id)

    iaa = ann.compute_kappa(round_state)
    ann.close_round(round_state)
    store.save(project_id)

    verdict = iaa_gate(engine.state.previous_iaa, iaa.kappa)
    if verdict == RETURN_TO_MODEL:
        engine.apply("iaa_regressed", payload_ref=round_state.round_id, iaa=iaa.kappa)
        return RoundReport(round_state.round_id, iaa, verdict)

    engine.apply("iaa_passed", payload_ref=round_state.round_id, iaa=iaa.kappa)
    for cid, la, lb in ann.list_disagreements(round_state):
        ann.adjudicate(round_state, cid, config.adjudication_source(cid, la, lb))
    gold = ann.build_gold_standard(round_state, config.balance_seed)
    store.save(project_id)
    engine.apply("processed", payload_ref=round_state.round_id)

    evaluation = None
    if config.experiment is not None:
        from .experiments import run_grid

        documents = [project.comments[cid].raw_text for cid, _ in gold.items]
        labels = [label for _, label in gold.items]
        evaluation = run_grid(documents, labels, config.experiment)
    engine.apply("trained", payload_ref=round_state.round_id)
    return RoundReport(round_state.round_id, iaa, verdict, gold, evaluation)


def _latest_open_round(project: Project):
    open_rounds = [r for r in project.rounds.values() if not r.closed]
    if not open_rounds:
        raise IllegalTransition(
            "cycle is in Annotate but the project has no open round",
            phase=ANNOTATE,
            event="run_round",
        )
    return open_rounds[-1]
