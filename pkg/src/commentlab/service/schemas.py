"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

Label = Literal["positive", "negative", "neutral"]
Decision = Literal["positive", "negative", "neutral", "no_consensus"]
ContextPolicy = Literal["with_article", "comment_only"]


class ErrorBody(BaseModel):
    code: str
    message: str
    details: dict = Field(default_factory=dict)


class ProjectCreateRequest(BaseModel):
    name: str
    request_id: Optional[str] = None


class ProjectResponse(BaseModel):
    project_id: str
    name: str
    n_articles: int = 0
    n_comments: int = 0


class CorpusRecord(BaseModel):
    article_id: str
    source: str
    topic: str
    title: str
    text: str
    url: Optional[str] = None


class IngestRequest(BaseModel):
    records: list[CorpusRecord]
    request_id: Optional[str] = None


class IngestResponse(BaseModel):
    added: int
    duplicates_dropped: int
    rejected_empty: int


class GuidelinesBody(BaseModel):
    version: int = Field(ge=1)
    text: str
    context_policy: ContextPolicy = "with_article"


class RoundCreateRequest(BaseModel):
    guidelines: GuidelinesBody
    annotators: list[str] = Field(default=["A1", "A2"], min_length=2, max_length=2)
    comment_ids: Optional[list[str]] = None
    topic: Optional[str] = None
    source: Optional[str] = None
    request_id: Optional[str] = None


class RoundResponse(BaseModel):
    round_id: str
    project_id: str
    n_comments: int
    annotators: list[str]
    context_policy: ContextPolicy
    guidelines_version: int
    guidelines_text: str
    closed: bool
    progress: dict[str, dict[str, int]]
    kappa: Optional[float] = None


class ArticleContext(BaseModel):
    article_id: str
    source: str
    topic: str
    title: str
    url: Optional[str] = None


class NextCommentResponse(BaseModel):
    # article is populated only in with_article rounds; the field is dropped
    # from the wire entirely otherwise (response_model_exclude_none)
    comment_id: Optional[str] = None
    text: Optional[str] = None
    remaining: int = 0
    done: bool = False
    article: Optional[ArticleContext] = None


class AnnotationRequest(BaseModel):
    annotator_id: str
    comment_id: str
    label: Label
    request_id: Optional[str] = None


class AnnotationResponse(BaseModel):
    round_id: str
    annotator_id: str
    comment_id: str
    label: Label
    pending: int


class IaaResponse(BaseModel):
    kappa: float
    pr_a: float
    pr_e: float
    n_items: int
    labels: list[str]
    contingency: list[list[int]]


class DisagreementItem(BaseModel):
    comment_id: str
    text: str
    label_a1: Label
    label_a2: Label


class AdjudicationRequest(BaseModel):
    comment_id: str
    decision: Decision
    request_id: Optional[str] = None


class AdjudicationResponse(BaseModel):
    comment_id: str
    gold_label: Label


class GoldRequest(BaseModel):
    seed: int
    request_id: Optional[str] = None


class GoldItem(BaseModel):
    comment_id: str
    text: str
    label: Literal["positive", "negative"]


class GoldResponse(BaseModel):
    round_id: str
    seed: int
    n_positive: int
    n_negative: int
    items: list[GoldItem]


class ExperimentRequest(BaseModel):
    round_id: str
    seed: int
    stem: Literal["both", "yes", "no"] = "both"
    schemes: list[Literal["TO", "BTO", "TF", "TFIDF"]] = ["TO", "TF", "TFIDF", "BTO"]
    ngrams: list[int] = [1, 2, 3]
    classifiers: list[Literal["nb", "svm", "knn"]] = ["nb", "svm", "knn"]
    k_folds: int = 10
    nb_alpha: float = 1.0
    svm_cost: float = 1.0
    svm_tolerance: float = 1e-4
    svm_max_iters: int = 1_000_000
    knn_k: int = 5
    request_id: Optional[str] = None


class ExperimentStatus(BaseModel):
    experiment_id: str
    status: Literal["running", "done", "failed"]
    error: Optional[str] = None


class MetricCell(BaseModel):
    stem: str
    scheme: str
    ngram: int
    classifier: str
    accuracy: Optional[float]
    precision_pos: Optional[float]
    precision_neg: Optional[float]
    recall_pos: Optional[float]
    recall_neg: Optional[float]
    tp: Optional[int] = None
    fp: Optional[int] = None
    fn: Optional[int] = None
    tn: Optional[int] = None


class ExperimentResult(BaseModel):
    experiment_id: str
    status: Literal["running", "done", "failed"]
    error: Optional[str] = None
    cells: list[MetricCell] = Field(default_factory=list)


class SessionRequest(BaseModel):
    annotator_id: str
    project_id: str
    ttl_seconds: int = 8 * 3600


class CycleEventRequest(BaseModel):
    event: str
    payload_ref: Optional[str] = None
    iaa: Optional[float] = None
    request_id: Optional[str] = None


class CycleStateResponse(BaseModel):
    project_id: str
    phase: str
    round_number: int
    current_iaa: Optional[float] = None
    previous_iaa: Optional[float] = None
    kappa_history: list[float] = Field(default_factory=list)
    gate_verdicts: list[str] = Field(default_factory=list)
