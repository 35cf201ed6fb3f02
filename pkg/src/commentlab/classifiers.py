"""From-scratch supervised learners behind one train/predict contract.

Three model kinds: multinomial naive Bayes with Laplace smoothing, a linear
soft-margin SVM trained by pairwise dual coordinate ascent, and k-nearest
neighbours under cosine similarity. Labels are "positive"/"negative",
mapped to +1/-1 wherever a sign is needed. Training and prediction are
deterministic functions of (data, hyperparameters).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, KTooLarge, SingleClass
from .features import DocumentVector

POSITIVE = "positive"
NEGATIVE = "negative"
BINARY_LABELS = (POSITIVE, NEGATIVE)

MODEL_FORMAT_VERSION = 1


@dataclass
class LabeledDataset:
    vectors: list[DocumentVector]
    labels: list[str]
    dim: int

    def __post_init__(self):
        if len(self.vectors) != len(self.labels):
            raise ValueError("vectors and labels must be parallel")
        if len(self.vectors) < 2:
            raise ValueError("need at least 2 training documents")
        for lab in self.labels:
            if lab not in BINARY_LABELS:
                raise ValueError("labels must be positive/negative, got %r" % lab)

    def require_both_classes(self):
        present = set(self.labels)
        if len(present) < 2:
            raise SingleClass("training data contains only %r" % present.pop())


def _check_dim(vector: DocumentVector, dim: int):
    for idx in vector.entries:
        if idx < 0 or idx >= dim:
            raise DimensionMismatch(
                "vector index %d outside model dimension %d" % (idx, dim)
            )


def _to_dense(vectors: Sequence[DocumentVector], dim: int) -> np.ndarray:
    X = np.zeros((len(vectors), dim))
    for row, vec in enumerate(vectors):
        for idx, w in vec.entries.items():
            X[row, idx] = w
    return X


# --- naive Bayes ---

@dataclass
class NaiveBayesModel:
    kind = "naive_bayes"
    log_priors: dict[str, float]
    log_likelihoods: dict[str, list[float]]
    alpha: float
    dim: int

    def decision(self, vector: DocumentVector) -> dict[str, float]:
        """Unnormalized log-posterior of each class for one document."""
        _check_dim(vector, self.dim)
        scores = {}
        for label in BINARY_LABELS:
            loglik = self.log_likelihoods[label]
            s = self.log_priors[label]
            for idx, w in vector.entries.items():
                s += w * loglik[idx]
            scores[label] = s
        return scores


def train_naive_bayes(data: LabeledDataset, alpha: float = 1.0) -> NaiveBayesModel:
    """Multinomial naive Bayes over document vector weights.

    Class prior = class document count / total. Per-class term probability =
    (sum of the term's weights over class documents + alpha) /
    (sum of all weights in the class + alpha * dim).
    """
    data.require_both_classes()
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    n = len(data.vectors)
    counts = {lab: 0 for lab in BINARY_LABELS}
    term_sums = {lab: np.zeros(data.dim) for lab in BINARY_LABELS}
    for vec, lab in zip(data.vectors, data.labels):
        _check_dim(vec, data.dim)
        counts[lab] += 1
        sums = term_sums[lab]
        for idx, w in vec.entries.items():
            sums[idx] += w
    log_priors = {lab: math.log(counts[lab] / n) for lab in BINARY_LABELS}
    log_likelihoods = {}
    for lab in BINARY_LABELS:
        total = term_sums[lab].sum() + alpha * data.dim
        log_likelihoods[lab] = list(np.log((term_sums[lab] + alpha) / total))
    return NaiveBayesModel(log_priors, log_likelihoods, alpha, data.dim)


# --- linear SVM ---

@dataclass
class LinearSvmModel:
    kind = "linear_svm"
    weights: list[float]
    bias: float
    cost: float
    converged: bool
    iterations: int

    @property
    def dim(self) -> int:
        return len(self.weights)

    def decision(self, vector: DocumentVector) -> float:
        _check_dim(vector, self.dim)
        return sum(self.weights[i] * w for i, w in vector.entries.items()) + self.bias


def svm_objective(weights, bias: float, X: np.ndarray, y: np.ndarray, cost: float) -> float:
    """Primal objective: (1/2)||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))."""
    w = np.asarray(weights, dtype=float)
    margins = y * (X @ w + bias)
    return 0.5 * float(w @ w) + cost * float(np.maximum(0.0, 1.0 - margins).sum())


def train_linear_svm(
    data: LabeledDataset,
    cost: float = 1.0,
    tolerance: float = 1e-4,
    max_iters: int = 1_000_000,
    seed: int = 0,
) -> LinearSvmModel:
    """Soft-margin linear SVM via maximal-violating-pair dual ascent.

    Works on the dual in the beta = y*alpha parametrization: at each step the
    most violating pair is updated analytically, keeping sum(beta) = 0, until
    the duality gap criterion max_up(g) <= min_down(g) + tolerance holds.
    Pair selection breaks ties by lowest index, so training is deterministic;
    the seed parameter is accepted for interface stability but unused.
    On non-convergence the best iterate so far is returned with
    converged=False (dual ascent is monotone, so "best" is "last").
    """
    del seed
    data.require_both_classes()
    if cost <= 0:
        raise ValueError("cost must be > 0")
    n = len(data.vectors)
    X = _to_dense(data.vectors, data.dim)
    y = np.array([1.0 if lab == POSITIVE else -1.0 for lab in data.labels])

    beta = np.zeros(n)
    lower = np.where(y > 0, 0.0, -cost)
    upper = np.where(y > 0, cost, 0.0)
    w = np.zeros(data.dim)
    g = y.copy()  # g_i = y_i - w.x_i, the dual gradient wrt beta
    sq_norms = np.einsum("ij,ij->i", X, X)

    eps = 1e-12
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        can_up = beta < upper - eps
        can_down = beta > lower + eps
        if not can_up.any() or not can_down.any():
            converged = True
            break
        g_up = np.where(can_up, g, -np.inf)
        g_down = np.where(can_down, g, np.inf)
        i = int(np.argmax(g_up))
        j = int(np.argmin(g_down))
        if g[i] <= g[j] + tolerance:
            converged = True
            break
        quad = sq_norms[i] + sq_norms[j] - 2.0 * float(X[i] @ X[j])
        step = min(
            upper[i] - beta[i],
            beta[j] - lower[j],
            (g[i] - g[j]) / max(quad, eps),
        )
        beta[i] += step
        beta[j] -= step
        delta_w = step * (X[i] - X[j])
        w += delta_w
        g -= X @ delta_w

    bias = _svm_bias(beta, lower, upper, g, eps)
    return LinearSvmModel(
        weights=list(w),
        bias=bias,
        cost=cost,
        converged=converged,
        iterations=iterations,
    )


def _svm_bias(beta, lower, upper, g, eps) -> float:
    # At free support vectors g_i = b exactly; otherwise b sits in the
    # interval [max g over raisable, min g over lowerable] left at stopping.
    free = (beta > lower + eps) & (beta < upper - eps)
    if free.any():
        return float(g[free].mean())
    can_up = beta < upper - eps
    can_down = beta > lower + eps
    hi = float(g[can_up].max()) if can_up.any() else None
    lo = float(g[can_down].min()) if can_down.any() else None
    if hi is not None and lo is not None:
        return (hi + lo) / 2.0
    if hi is not None:
        return hi
    if lo is not None:
        return lo
    return 0.0


# --- k-nearest neighbours ---

@dataclass
class KnnModel:
    kind = "knn"
    vectors: list[DocumentVector]
    labels: list[str]
    k: int
    dim: int
    norms: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.norms:
            self.norms = [_norm(v) for v in self.vectors]

    def vote(self, vector: DocumentVector) -> tuple[str, float]:
        """Majority label among the k most cosine-similar stored vectors.

        Neighbour order is (similarity desc, training index asc); a split
        vote is resolved by the nearest neighbour in that order.
        """
        _check_dim(vector, self.dim)
        qn = _norm(vector)
        sims = []
        for idx, (stored, sn) in enumerate(zip(self.vectors, self.norms)):
            if qn == 0.0 or sn == 0.0:
                sims.append(0.0)
            else:
                sims.append(_dot(vector, stored) / (qn * sn))
        order = sorted(range(len(sims)), key=lambda i: (-sims[i], i))
        top = order[: self.k]
        votes = {lab: 0 for lab in BINARY_LABELS}
        for i in top:
            votes[self.labels[i]] += 1
        if votes[POSITIVE] > votes[NEGATIVE]:
            winner = POSITIVE
        elif votes[NEGATIVE] > votes[POSITIVE]:
            winner = NEGATIVE
        else:
            winner = self.labels[top[0]]
        return winner, votes[winner] / self.k


def _dot(a: DocumentVector, b: DocumentVector) -> float:
    if len(a.entries) > len(b.entries):
        a, b = b, a
    return sum(w * b.entries.get(i, 0.0) for i, w in a.entries.items())


def _norm(v: DocumentVector) -> float:
    return math.sqrt(sum(w * w for w in v.entries.values()))


def train_knn(data: LabeledDataset, k: int = 5) -> KnnModel:
    """Lazily store the training set; odd k avoids split votes but any
    k >= 1 is accepted since the tie rule is total."""
    data.require_both_classes()
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(data.vectors):
        raise KTooLarge("k=%d exceeds training size %d" % (k, len(data.vectors)))
    for vec in data.vectors:
        _check_dim(vec, data.dim)
    return KnnModel(list(data.vectors), list(data.labels), k, data.dim)


# --- uniform prediction interface ---

TrainedModel = NaiveBayesModel | LinearSvmModel | KnnModel


@dataclass
class Prediction:
    label: str
    score: float


def predict(model: TrainedModel, vector: DocumentVector) -> Prediction:
    """Predict one document.

    Score semantics by kind: naive Bayes reports the log-posterior margin of
    the winning class, the SVM reports the signed decision value w.x + b,
    and KNN reports the winning vote fraction. Exact ties go to "positive".
    """
    if isinstance(model, NaiveBayesModel):
        scores = model.decision(vector)
        if scores[POSITIVE] >= scores[NEGATIVE]:
            return Prediction(POSITIVE, scores[POSITIVE] - scores[NEGATIVE])
        return Prediction(NEGATIVE, scores[NEGATIVE] - scores[POSITIVE])
    if isinstance(model, LinearSvmModel):
        value = model.decision(vector)
        return Prediction(POSITIVE if value >= 0 else NEGATIVE, value)
    if isinstance(model, KnnModel):
        label, fraction = model.vote(vector)
        return Prediction(label, fraction)
    raise TypeError("unknown model type: %r" % type(model))


# --- serialization ---

def _enc(x: float) -> str:
    # 17 significant digits round-trip every IEEE double exactly
    return format(float(x), ".17g")


def model_to_json(model: TrainedModel) -> str:
    if isinstance(model, NaiveBayesModel):
        params = {
            "log_priors": {k: _enc(v) for k, v in model.log_priors.items()},
            "log_likelihoods": {
                k: [_enc(v) for v in vals] for k, vals in model.log_likelihoods.items()
            },
            "alpha": _enc(model.alpha),
            "dim": model.dim,
        }
    elif isinstance(model, LinearSvmModel):
        params = {
            "weights": [_enc(v) for v in model.weights],
            "bias": _enc(model.bias),
            "cost": _enc(model.cost),
            "converged": model.converged,
            "iterations": model.iterations,
        }
    elif isinstance(model, KnnModel):
        params = {
            "vectors": [
                {"entries": {str(i): _enc(w) for i, w in v.entries.items()}, "scheme": v.scheme}
                for v in model.vectors
            ],
            "labels": model.labels,
            "k": model.k,
            "dim": model.dim,
        }
    else:
        raise TypeError("unknown model type: %r" % type(model))
    return json.dumps(
        {"format_version": MODEL_FORMAT_VERSION, "kind": model.kind, "params": params},
        ensure_ascii=False,
    )


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError("unsupported model format version: %r" % doc.get("format_version"))
    kind, params = doc["kind"], doc["params"]
    if kind == "naive_bayes":
        return NaiveBayesModel(
            log_priors={k: float(v) for k, v in params["log_priors"].items()},
            log_likelihoods={
                k: [float(v) for v in vals] for k, vals in params["log_likelihoods"].items()
            },
            alpha=float(params["alpha"]),
            dim=params["dim"],
        )
    if kind == "linear_svm":
        return LinearSvmModel(
            weights=[float(v) for v in params["weights"]],
            bias=float(params["bias"]),
            cost=float(params["cost"]),
            converged=params["converged"],
            iterations=params["iterations"],
        )
    if kind == "knn":
        return KnnModel(
            vectors=[
                DocumentVector({int(i): float(w) for i, w in v["entries"].items()}, v["scheme"])
                for v in params["vectors"]
            ],
            labels=list(params["labels"]),
            k=params["k"],
            dim=params["dim"],
        )
    raise ValueError("unknown model kind: %r" % kind)
