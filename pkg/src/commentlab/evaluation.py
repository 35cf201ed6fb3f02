"""Stratified k-fold cross-validation, confusion-matrix metrics and the
report grid over {stem} x {scheme} x {ngram} x {classifier}.

Fold metrics are pooled: confusion counts are summed across folds and the
metrics computed once on the pooled matrix, which avoids undefined ratios
on tiny per-fold matrices. Per-fold bundles are still retained for
dispersion reporting.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .classifiers import (
    LabeledDataset,
    POSITIVE,
    predict,
    train_knn,
    train_linear_svm,
    train_naive_bayes,
)
from .errors import BadK, EmptyMatrix, FoldTooSmall, MissingCell
from .features import NGramConfig, SCHEME_LABELS, build_feature_space, generate_ngrams, vectorize, validate_scheme
from .textproc import TextPipeline


@dataclass
class ConfusionMatrix:
    """Counts relative to the positive class."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def add(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    def record(self, true_label: str, predicted_label: str):
        if true_label == POSITIVE:
            if predicted_label == POSITIVE:
                self.tp += 1
            else:
                self.fn += 1
        else:
            if predicted_label == POSITIVE:
                self.fp += 1
            else:
                self.tn += 1


@dataclass
class MetricBundle:
    """Eq-style metrics; a 0/0 ratio is None (undefined), distinct from 0."""

    accuracy: float
    precision_pos: Optional[float]
    precision_neg: Optional[float]
    recall_pos: Optional[float]
    recall_neg: Optional[float]

    def as_dict(self) -> dict[str, Optional[float]]:
        return {
            "accuracy": self.accuracy,
            "precision_pos": self.precision_pos,
            "precision_neg": self.precision_neg,
            "recall_pos": self.recall_pos,
            "recall_neg": self.recall_neg,
        }


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def compute_metrics(cm: ConfusionMatrix) -> MetricBundle:
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no observations")
    return MetricBundle(
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision_pos=_ratio(cm.tp, cm.tp + cm.fp),
        precision_neg=_ratio(cm.tn, cm.tn + cm.fn),
        recall_pos=_ratio(cm.tp, cm.tp + cm.fn),
        recall_neg=_ratio(cm.tn, cm.tn + cm.fp),
    )


@dataclass
class FoldPlan:
    k: int
    seed: int
    folds: list[list[int]]


def stratified_folds(labels: Sequence[str], k: int, seed: int) -> FoldPlan:
    """Deal each class's seeded-shuffled indices round-robin into k folds.

    One cursor rotates across classes so overall fold sizes also differ by
    at most one, not just the per-class counts.
    """
    n = len(labels)
    if k < 2 or k > n:
        raise BadK("k=%d invalid for %d items" % (k, n))
    rng = random.Random(seed)
    by_class: dict[str, list[int]] = {}
    for idx, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(idx)
    folds: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for lab in sorted(by_class):
        indices = by_class[lab]
        rng.shuffle(indices)
        for idx in indices:
            folds[cursor % k].append(idx)
            cursor += 1
    return FoldPlan(k=k, seed=seed, folds=folds)


@dataclass(frozen=True)
class PipelineConfig:
    """One experiment cell: processing branch, weighting, n-grams, learner."""

    stem: bool
    scheme: str
    ngram_max: int
    classifier: str  # nb | svm | knn
    nb_alpha: float = 1.0
    svm_cost: float = 1.0
    svm_tolerance: float = 1e-4
    svm_max_iters: int = 1_000_000
    knn_k: int = 5
    min_df: int = 1

    def __post_init__(self):
        validate_scheme(self.scheme)
        if self.classifier not in ("nb", "svm", "knn"):
            raise ValueError("classifier must be nb, svm or knn")


def _train(config: PipelineConfig, data: LabeledDataset, seed: int):
    if config.classifier == "nb":
        return train_naive_bayes(data, alpha=config.nb_alpha)
    if config.classifier == "svm":
        return train_linear_svm(
            data,
            cost=config.svm_cost,
            tolerance=config.svm_tolerance,
            max_iters=config.svm_max_iters,
            seed=seed,
        )
    return train_knn(data, k=config.knn_k)


@dataclass
class CrossValidationResult:
    pooled: ConfusionMatrix
    metrics: MetricBundle
    fold_matrices: list[ConfusionMatrix]
    fold_metrics: list[Optional[MetricBundle]]


def cross_validate(
    documents: Sequence[str],
    labels: Sequence[str],
    config: PipelineConfig,
    k: int = 10,
    seed: int = 0,
    pipeline: Optional[TextPipeline] = None,
    term_lists: Optional[Sequence[Sequence[str]]] = None,
) -> CrossValidationResult:
    """Stratified k-fold evaluation of one pipeline configuration.

    The feature space and model are rebuilt from the k-1 training folds at
    every iteration; held-out documents are vectorized against the training
    space only (out-of-vocabulary terms drop out), so no test information
    leaks into training. Pass ``term_lists`` to reuse already-processed
    documents across cells that share (stem, ngram).
    """
    if len(documents) != len(labels):
        raise ValueError("documents and labels must be parallel")
    if term_lists is None:
        pipe = pipeline if pipeline is not None else TextPipeline.build(stem=config.stem)
        ngram = NGramConfig(config.ngram_max)
        term_lists = [generate_ngrams(pipe(doc), ngram) for doc in documents]
    plan = stratified_folds(labels, k, seed)
    pooled = ConfusionMatrix()
    fold_matrices: list[ConfusionMatrix] = []
    fold_metrics: list[Optional[MetricBundle]] = []
    for fold in plan.folds:
        holdout = set(fold)
        train_idx = [i for i in range(len(labels)) if i not in holdout]
        train_labels = [labels[i] for i in train_idx]
        present = set(train_labels)
        if len(present) < 2:
            raise FoldTooSmall(
                "training split lost a class (fold of %d items, k=%d)" % (len(fold), k)
            )
        space = build_feature_space([term_lists[i] for i in train_idx], min_df=config.min_df)
        train_vectors = [vectorize(term_lists[i], space, config.scheme) for i in train_idx]
        data = LabeledDataset(train_vectors, train_labels, dim=len(space))
        model = _train(config, data, seed)
        cm = ConfusionMatrix()
        for i in fold:
            vec = vectorize(term_lists[i], space, config.scheme)
            cm.record(labels[i], predict(model, vec).label)
        fold_matrices.append(cm)
        fold_metrics.append(compute_metrics(cm) if cm.total else None)
        pooled = pooled.add(cm)
    return CrossValidationResult(
        pooled=pooled,
        metrics=compute_metrics(pooled),
        fold_matrices=fold_matrices,
        fold_metrics=fold_metrics,
    )


# --- report grid ---

STEM_ORDER = (False, True)
SCHEME_ORDER = ("TO", "TF", "TFIDF", "BTO")
NGRAM_ORDER = (1, 2, 3)
CLASSIFIER_ORDER = ("nb", "svm", "knn")
CLASSIFIER_LABELS = {"nb": "NB", "svm": "SVM", "knn": "KNN"}

GridKey = tuple[bool, str, int, str]  # (stem, scheme, ngram, classifier)


@dataclass
class EvaluationReport:
    """Metric bundles keyed by (stem, scheme, ngram, classifier); the pooled
    confusion behind each cell is kept for drill-down display."""

    rows: dict[GridKey, MetricBundle] = field(default_factory=dict)
    confusions: dict[GridKey, ConfusionMatrix] = field(default_factory=dict)

    def add(
        self,
        stem: bool,
        scheme: str,
        ngram: int,
        classifier: str,
        bundle: MetricBundle,
        confusion: Optional[ConfusionMatrix] = None,
    ):
        self.rows[(stem, scheme, ngram, classifier)] = bundle
        if confusion is not None:
            self.confusions[(stem, scheme, ngram, classifier)] = confusion

    def get(self, stem: bool, scheme: str, ngram: int, classifier: str) -> MetricBundle:
        key = (stem, scheme, ngram, classifier)
        if key not in self.rows:
            raise MissingCell(
                "no result for stem=%s scheme=%s ngram=%d classifier=%s"
                % ("yes" if stem else "no", scheme, ngram, classifier)
            )
        return self.rows[key]

    def classifiers(self) -> list[str]:
        seen = {key[3] for key in self.rows}
        return [c for c in CLASSIFIER_ORDER if c in seen]


_METRIC_FIELDS = ("accuracy", "precision_pos", "precision_neg", "recall_pos", "recall_neg")


def report_to_csv(report: EvaluationReport) -> str:
    """One row per grid cell; metrics as full-precision fractions.

    Undefined (0/0) metrics are emitted as empty fields. Output is
    byte-stable for a fixed report.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["classifier", "stem", "scheme", "ngram", *_METRIC_FIELDS])
    for classifier in CLASSIFIER_ORDER:
        for stem in STEM_ORDER:
            for scheme in SCHEME_ORDER:
                for ngram in NGRAM_ORDER:
                    bundle = report.rows.get((stem, scheme, ngram, classifier))
                    if bundle is None:
                        continue
                    values = bundle.as_dict()
                    writer.writerow(
                        [
                            classifier,
                            "yes" if stem else "no",
                            SCHEME_LABELS[scheme],
                            ngram,
                            *(
                                "" if values[f] is None else format(values[f], ".17g")
                                for f in _METRIC_FIELDS
                            ),
                        ]
                    )
    return buf.getvalue()


def _pct(value: Optional[float]) -> str:
    return "—" if value is None else "%.2f" % (100.0 * value)


def render_table(report: EvaluationReport, classifier: str) -> str:
    """Aligned plain-text grid for one classifier.

    Rows are stem no/yes x TO/TF/TF-IDF/BTO; column groups are the n-gram
    levels, each holding Acc and per-class Precision/Recall as percentages.
    Reduced grids render over the axes present; a ragged grid (some cells of
    the cross product missing) raises MissingCell.
    """
    keys = [key for key in report.rows if key[3] == classifier]
    if not keys:
        raise MissingCell("no results at all for classifier %s" % classifier)
    stems = [s for s in STEM_ORDER if any(k[0] == s for k in keys)]
    schemes = [s for s in SCHEME_ORDER if any(k[1] == s for k in keys)]
    ngrams = [n for n in NGRAM_ORDER if any(k[2] == n for k in keys)]
    ngram_titles = {1: "Unigram", 2: "Bigram", 3: "Tri-gram"}
    sub = ["Acc", "P.pos", "P.neg", "R.pos", "R.neg"]
    header1 = ["Stem", "Vector"]
    header2 = ["", ""]
    for ng in ngrams:
        header1 += [ngram_titles[ng]] + [""] * (len(sub) - 1)
        header2 += sub
    body = []
    for stem in stems:
        for scheme in schemes:
            row = ["yes" if stem else "no", SCHEME_LABELS[scheme]]
            for ng in ngrams:
                bundle = report.get(stem, scheme, ng, classifier)
                values = bundle.as_dict()
                row += [_pct(values[f]) for f in _METRIC_FIELDS]
            body.append(row)
    table = [header1, header2] + body
    widths = [max(len(row[c]) for row in table) for c in range(len(header2))]
    lines = ["%s classification (10-fold pooled metrics, %%)" % CLASSIFIER_LABELS[classifier]]
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_tables(report: EvaluationReport) -> str:
    return "\n".join(render_table(report, c) for c in report.classifiers())
