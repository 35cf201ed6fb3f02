"""Annotation rounds: guidelines, two-annotator labeling, agreement via
Cohen's kappa, adjudication and balanced gold-standard generation.

A round snapshots the comment ids it covers; two annotators label every
snapshot item with positive/negative/neutral. Agreement items adjudicate
automatically, disagreements take an explicit decision (no consensus means
neutral), and the gold standard balances the classes by seeded
down-sampling of the majority.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

from .errors import (
    DegenerateAgreement,
    EmptyClass,
    IncompleteRound,
    NoComments,
    NotADisagreement,
    RoundClosed,
    StaleGuidelinesVersion,
    UnknownAnnotator,
    UnknownComment,
)
from .store import Project

POSITIVE = "positive"
NEGATIVE = "negative"
NEUTRAL = "neutral"
LABELS = (POSITIVE, NEGATIVE, NEUTRAL)

NO_CONSENSUS = "no_consensus"

CONTEXT_WITH_ARTICLE = "with_article"
CONTEXT_COMMENT_ONLY = "comment_only"


@dataclass(frozen=True)
class RoundModel:
    """Annotation model triplet: term set, assignment rule, interpretations."""

    terms: tuple[str, ...]
    relation: str
    interpretation: dict[str, str]


def default_round_model() -> RoundModel:
    return RoundModel(
        terms=("comment_class", POSITIVE, NEGATIVE, NEUTRAL),
        relation="comment_class := positive | negative | neutral",
        interpretation={
            POSITIVE: "expresses a favourable sentiment toward its subject",
            NEGATIVE: "expresses an unfavourable sentiment toward its subject",
            NEUTRAL: "off topic or objective; no sentiment expressed",
        },
    )


@dataclass(frozen=True)
class Guidelines:
    version: int
    text: str
    context_policy: str = CONTEXT_WITH_ARTICLE

    def __post_init__(self):
        if self.version < 1:
            raise ValueError("guidelines version must be >= 1")
        if self.context_policy not in (CONTEXT_WITH_ARTICLE, CONTEXT_COMMENT_ONLY):
            raise ValueError("context_policy must be with_article or comment_only")


@dataclass
class AnnotationRecord:
    round_id: str
    annotator_id: str
    comment_id: str
    label: str
    decided_at: str


@dataclass
class GoldCorpus:
    items: list[tuple[str, str]]  # (comment_id, positive|negative)
    balance_seed: int
    provenance: str  # round_id

    def counts(self) -> dict[str, int]:
        out = {POSITIVE: 0, NEGATIVE: 0}
        for _, label in self.items:
            out[label] += 1
        return out


@dataclass
class RoundState:
    round_id: str
    project_id: str
    guidelines: Guidelines
    comment_ids: tuple[str, ...]  # immutable snapshot, order is the round order
    annotators: tuple[str, str]
    model: RoundModel = field(default_factory=default_round_model)
    records: dict[tuple[str, str], AnnotationRecord] = field(default_factory=dict)
    adjudications: dict[str, str] = field(default_factory=dict)
    closed: bool = False
    gold: Optional[GoldCorpus] = None

    def label_of(self, annotator_id: str, comment_id: str) -> Optional[str]:
        record = self.records.get((annotator_id, comment_id))
        return record.label if record else None

    def pending(self, annotator_id: str) -> list[str]:
        if annotator_id not in self.annotators:
            raise UnknownAnnotator("annotator %r is not part of round %s" % (annotator_id, self.round_id))
        return [c for c in self.comment_ids if (annotator_id, c) not in self.records]

    def progress(self) -> dict[str, dict[str, int]]:
        total = len(self.comment_ids)
        return {
            a: {"done": total - len(self.pending(a)), "pending": len(self.pending(a)), "total": total}
            for a in self.annotators
        }

    def is_complete(self) -> bool:
        return all(not self.pending(a) for a in self.annotators)


def open_round(
    project: Project,
    guidelines: Guidelines,
    comment_ids: Optional[Sequence[str]] = None,
    annotators: tuple[str, str] = ("A1", "A2"),
) -> RoundState:
    """Create a round over a snapshot of comment ids with exactly two
    annotator queues. The guidelines version must advance."""
    if len(set(annotators)) != 2:
        raise ValueError("a round needs exactly two distinct annotators")
    snapshot = tuple(comment_ids) if comment_ids is not None else tuple(project.comments)
    for cid in snapshot:
        if cid not in project.comments:
            raise UnknownComment("comment %r not in project %s" % (cid, project.project_id))
    if not snapshot:
        raise NoComments("selection contains no comments")
    previous = max(
        (r.guidelines.version for r in project.rounds.values()), default=0
    )
    if guidelines.version <= previous:
        raise StaleGuidelinesVersion(
            "guidelines version %d must exceed previous %d" % (guidelines.version, previous)
        )
    # include the project id so round ids are unique service-wide
    round_id = "%s-r%d" % (project.project_id, project.next_round_seq)
    project.next_round_seq += 1
    state = RoundState(
        round_id=round_id,
        project_id=project.project_id,
        guidelines=guidelines,
        comment_ids=snapshot,
        annotators=tuple(annotators),
    )
    project.rounds[round_id] = state
    return state


def record_annotation(
    round_state: RoundState, annotator_id: str, comment_id: str, label: str
) -> AnnotationRecord:
    """Store one label. While the round is open an annotator may revise their
    own label (last write wins); closed rounds are immutable."""
    if round_state.closed:
        raise RoundClosed("round %s is closed" % round_state.round_id)
    if annotator_id not in round_state.annotators:
        raise UnknownAnnotator("annotator %r is not part of this round" % annotator_id)
    if comment_id not in round_state.comment_ids:
        raise UnknownComment("comment %r is not in the round snapshot" % comment_id)
    if label not in LABELS:
        raise ValueError("label must be one of %s" % ", ".join(LABELS))
    record = AnnotationRecord(
        round_id=round_state.round_id,
        annotator_id=annotator_id,
        comment_id=comment_id,
        label=label,
        decided_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    round_state.records[(annotator_id, comment_id)] = record
    return record


def close_round(round_state: RoundState):
    round_state.closed = True


def _require_complete(round_state: RoundState):
    for annotator in round_state.annotators:
        missing = round_state.pending(annotator)
        if missing:
            raise IncompleteRound(
                "annotator %s has %d unlabeled items" % (annotator, len(missing)),
                remaining={a: len(round_state.pending(a)) for a in round_state.annotators},
            )


@dataclass
class IAAResult:
    pr_a: float
    pr_e: float
    kappa: float
    n_items: int
    contingency: list[list[int]]  # rows: first annotator, cols: second; label order LABELS
    labels: tuple[str, ...] = LABELS


def cohen_kappa(
    labels_a: Sequence[str], labels_b: Sequence[str], label_set: Sequence[str] = LABELS
) -> IAAResult:
    """Cohen's kappa for two annotators over the same items.

    Chance agreement uses the product of the two annotators' own marginal
    proportions summed over labels. Undefined when that chance term is 1
    (both annotators put every item in one identical class).
    """
    if len(labels_a) != len(labels_b):
        raise ValueError("annotator label vectors differ in length")
    n = len(labels_a)
    if n == 0:
        raise ValueError("cannot compute agreement over zero items")
    index = {lab: i for i, lab in enumerate(label_set)}
    table = [[0] * len(label_set) for _ in label_set]
    for la, lb in zip(labels_a, labels_b):
        table[index[la]][index[lb]] += 1
    agree = sum(table[i][i] for i in range(len(label_set)))
    pr_a = agree / n
    row_marginals = [sum(row) for row in table]
    col_marginals = [sum(table[r][c] for r in range(len(label_set))) for c in range(len(label_set))]
    pr_e = sum((row_marginals[i] / n) * (col_marginals[i] / n) for i in range(len(label_set)))
    if pr_e >= 1.0:
        raise DegenerateAgreement(
            "both annotators used a single identical label; kappa undefined",
            pr_a=pr_a,
            pr_e=pr_e,
        )
    kappa = (pr_a - pr_e) / (1.0 - pr_e)
    return IAAResult(pr_a=pr_a, pr_e=pr_e, kappa=kappa, n_items=n, contingency=table, labels=tuple(label_set))


def compute_kappa(round_state: RoundState) -> IAAResult:
    """Agreement between the round's two annotators over the full snapshot."""
    _require_complete(round_state)
    a1, a2 = round_state.annotators
    labels_a = [round_state.label_of(a1, c) for c in round_state.comment_ids]
    labels_b = [round_state.label_of(a2, c) for c in round_state.comment_ids]
    return cohen_kappa(labels_a, labels_b)


def list_disagreements(round_state: RoundState) -> list[tuple[str, str, str]]:
    """(comment_id, first annotator's label, second's) in snapshot order."""
    _require_complete(round_state)
    a1, a2 = round_state.annotators
    out = []
    for cid in round_state.comment_ids:
        la, lb = round_state.label_of(a1, cid), round_state.label_of(a2, cid)
        if la != lb:
            out.append((cid, la, lb))
    return out


def adjudicate(round_state: RoundState, comment_id: str, decision: str) -> str:
    """Resolve one disagreement. ``decision`` is a label or "no_consensus"
    (which stores neutral). Agreement items resolve automatically and must
    not be adjudicated."""
    _require_complete(round_state)
    if comment_id not in round_state.comment_ids:
        raise UnknownComment("comment %r is not in the round snapshot" % comment_id)
    a1, a2 = round_state.annotators
    la, lb = round_state.label_of(a1, comment_id), round_state.label_of(a2, comment_id)
    if la == lb:
        raise NotADisagreement("both annotators labeled %r as %s" % (comment_id, la))
    if decision == NO_CONSENSUS:
        gold = NEUTRAL
    elif decision in LABELS:
        gold = decision
    else:
        raise ValueError("decision must be a label or %r" % NO_CONSENSUS)
    round_state.adjudications[comment_id] = gold
    return gold


def adjudicated_label(round_state: RoundState, comment_id: str) -> Optional[str]:
    """Gold label for one item: the agreed label, or the stored adjudication
    decision; None while a disagreement is still pending."""
    a1, a2 = round_state.annotators
    la, lb = round_state.label_of(a1, comment_id), round_state.label_of(a2, comment_id)
    if la is None or lb is None:
        return None
    if la == lb:
        return la
    return round_state.adjudications.get(comment_id)


def adjudicated_items(round_state: RoundState) -> list[tuple[str, str]]:
    """(comment_id, gold label) for every item; raises if any is pending."""
    _require_complete(round_state)
    out = []
    pending = []
    for cid in round_state.comment_ids:
        label = adjudicated_label(round_state, cid)
        if label is None:
            pending.append(cid)
        else:
            out.append((cid, label))
    if pending:
        raise IncompleteRound(
            "%d disagreements still need adjudication" % len(pending), pending=len(pending)
        )
    return out


def balance_gold_items(
    items: Sequence[tuple[str, str]], balance_seed: int
) -> list[tuple[str, str]]:
    """Drop neutral items and down-sample the majority class to the minority
    size by a seeded uniform draw without replacement; input order is
    preserved, so the result is bit-reproducible for a given seed."""
    positives = [cid for cid, lab in items if lab == POSITIVE]
    negatives = [cid for cid, lab in items if lab == NEGATIVE]
    m = min(len(positives), len(negatives))
    if m == 0:
        raise EmptyClass(
            "cannot balance: %d positive / %d negative items" % (len(positives), len(negatives))
        )
    rng = random.Random(balance_seed)
    if len(positives) > m:
        positives = rng.sample(positives, m)
    if len(negatives) > m:
        negatives = rng.sample(negatives, m)
    keep = set(positives) | set(negatives)
    # filtering the input-ordered item list keeps the output order
    # deterministic regardless of the draw order
    return [(cid, lab) for cid, lab in items if cid in keep and lab != NEUTRAL]


def build_gold_standard(round_state: RoundState, balance_seed: int) -> GoldCorpus:
    """Balanced positive/negative corpus from the adjudicated round."""
    items = adjudicated_items(round_state)
    chosen = balance_gold_items(items, balance_seed)
    gold = GoldCorpus(items=chosen, balance_seed=balance_seed, provenance=round_state.round_id)
    round_state.gold = gold
    return gold


# -- CSV / JSONL interchange --

ANNOTATION_CSV_HEADER = ["comment_id", "annotator_id", "label"]


def annotations_to_csv(round_state: RoundState) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ANNOTATION_CSV_HEADER)
    for annotator in round_state.annotators:
        for cid in round_state.comment_ids:
            label = round_state.label_of(annotator, cid)
            if label is not None:
                writer.writerow([cid, annotator, label])
    return buf.getvalue()


def read_annotation_csv(fh) -> list[dict]:
    """Rows of an annotation CSV (header comment_id,annotator_id,label)."""
    reader = csv.DictReader(fh)
    missing = set(ANNOTATION_CSV_HEADER) - set(reader.fieldnames or [])
    if missing:
        from .errors import MalformedRecord

        raise MalformedRecord("annotation CSV missing columns: %s" % ", ".join(sorted(missing)))
    rows = []
    for row in reader:
        if row["label"] not in LABELS:
            from .errors import MalformedRecord

            raise MalformedRecord("bad label %r for comment %r" % (row["label"], row["comment_id"]))
        rows.append(row)
    return rows


# -- round (de)serialization for the store --

def round_to_dict(state: RoundState) -> dict:
    return {
        "round_id": state.round_id,
        "project_id": state.project_id,
        "guidelines": {
            "version": state.guidelines.version,
            "text": state.guidelines.text,
            "context_policy": state.guidelines.context_policy,
        },
        "comment_ids": list(state.comment_ids),
        "annotators": list(state.annotators),
        "model": {
            "terms": list(state.model.terms),
            "relation": state.model.relation,
            "interpretation": dict(state.model.interpretation),
        },
        "records": [
            {
                "annotator_id": r.annotator_id,
                "comment_id": r.comment_id,
                "label": r.label,
                "decided_at": r.decided_at,
            }
            for r in state.records.values()
        ],
        "adjudications": dict(state.adjudications),
        "closed": state.closed,
        "gold": None
        if state.gold is None
        else {
            "items": [list(item) for item in state.gold.items],
            "balance_seed": state.gold.balance_seed,
            "provenance": state.gold.provenance,
        },
    }


def round_from_dict(payload: dict) -> RoundState:
    state = RoundState(
        round_id=payload["round_id"],
        project_id=payload["project_id"],
        guidelines=Guidelines(
            version=payload["guidelines"]["version"],
            text=payload["guidelines"]["text"],
            context_policy=payload["guidelines"]["context_policy"],
        ),
        comment_ids=tuple(payload["comment_ids"]),
        annotators=tuple(payload["annotators"]),
        model=RoundModel(
            terms=tuple(payload["model"]["terms"]),
            relation=payload["model"]["relation"],
            interpretation=dict(payload["model"]["interpretation"]),
        ),
    )
    for r in payload.get("records", []):
        state.records[(r["annotator_id"], r["comment_id"])] = AnnotationRecord(
            round_id=state.round_id,
            annotator_id=r["annotator_id"],
            comment_id=r["comment_id"],
            label=r["label"],
            decided_at=r["decided_at"],
        )
    state.adjudications = dict(payload.get("adjudications", {}))
    state.closed = payload.get("closed", False)
    gold = payload.get("gold")
    if gold:
        state.gold = GoldCorpus(
            items=[tuple(item) for item in gold["items"]],
            balance_seed=gold["balance_seed"],
            provenance=gold["provenance"],
        )
    return state
