import math
import random
from fractions import Fraction

import numpy as np
import pytest

from commentlab.classifiers import (
    KnnModel,
    LabeledDataset,
    LinearSvmModel,
    NaiveBayesModel,
    model_from_json,
    model_to_json,
    predict,
    svm_objective,
    train_knn,
    train_linear_svm,
    train_naive_bayes,
)
from commentlab.errors import DimensionMismatch, KTooLarge, SingleClass
from commentlab.features import DocumentVector


def vec(entries, scheme="TO"):
    return DocumentVector(dict(entries), scheme)


def dataset(rows, labels, dim):
    return LabeledDataset([vec(r) for r in rows], list(labels), dim)


# ---------------------------------------------------------------- naive Bayes

def nb_oracle_log_joint(doc_counts, class_docs, priors, alpha, dim):
    """Exact-rational multinomial NB, independent of the implementation."""
    out = {}
    for label, docs in class_docs.items():
        term_sums = {}
        total = Fraction(0)
        for d in docs:
            for t, c in d.items():
                term_sums[t] = term_sums.get(t, Fraction(0)) + c
                total += c
        denom = total + alpha * dim
        log_joint = math.log(priors[label])
        for t, c in doc_counts.items():
            prob = Fraction(term_sums.get(t, Fraction(0)) + alpha, denom)
            log_joint += c * math.log(prob)
        out[label] = log_joint
    return out


class TestNaiveBayes:
    def test_disjoint_vocabulary_recovers_training_labels(self):
        data = dataset([{0: 2.0, 1: 1.0}, {2: 1.0, 3: 2.0}], ["positive", "negative"], 4)
        model = train_naive_bayes(data, alpha=1.0)
        assert predict(model, data.vectors[0]).label == "positive"
        assert predict(model, data.vectors[1]).label == "negative"

    def test_four_document_posterior_matches_rational_oracle(self):
        # vocabulary a=0, b=1, c=2; positive docs {a a b}, {a};
        # negative docs {c}, {c b}; test doc {a b}; alpha = 1
        data = dataset(
            [{0: 2.0, 1: 1.0}, {0: 1.0}, {2: 1.0}, {2: 1.0, 1: 1.0}],
            ["positive", "positive", "negative", "negative"],
            3,
        )
        model = train_naive_bayes(data, alpha=1.0)
        test_doc = vec({0: 1.0, 1: 1.0})
        expected = nb_oracle_log_joint(
            {0: 1, 1: 1},
            {
                "positive": [{0: Fraction(2), 1: Fraction(1)}, {0: Fraction(1)}],
                "negative": [{2: Fraction(1)}, {2: Fraction(1), 1: Fraction(1)}],
            },
            {"positive": Fraction(1, 2), "negative": Fraction(1, 2)},
            Fraction(1),
            3,
        )
        assert expected["positive"] > expected["negative"]
        got = model.decision(test_doc)
        gap = got["positive"] - got["negative"]
        oracle_gap = expected["positive"] - expected["negative"]
        assert abs(gap - oracle_gap) <= 1e-9
        pred = predict(model, test_doc)
        assert pred.label == "positive"
        assert abs(pred.score - oracle_gap) <= 1e-9

    def test_empty_vector_falls_back_to_priors(self):
        data = dataset(
            [{0: 1.0}, {0: 1.0}, {1: 1.0}], ["negative", "negative", "positive"], 2
        )
        model = train_naive_bayes(data)
        assert predict(model, vec({})).label == "negative"

    def test_likelihoods_normalized_on_random_data(self):
        rng = random.Random(42)
        for _ in range(100):
            dim = rng.randrange(2, 12)
            n = rng.randrange(2, 15)
            labels = ["positive", "negative"] + [
                rng.choice(["positive", "negative"]) for _ in range(n - 2)
            ]
            rows = [
                {i: float(rng.randrange(1, 5)) for i in rng.sample(range(dim), rng.randrange(1, dim + 1))}
                for _ in range(n)
            ]
            model = train_naive_bayes(dataset(rows, labels, dim), alpha=rng.choice([0.5, 1.0, 2.0]))
            for label in ("positive", "negative"):
                mass = sum(math.exp(v) for v in model.log_likelihoods[label])
                assert abs(mass - 1.0) <= 1e-9

    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            train_naive_bayes(dataset([{0: 1.0}, {1: 1.0}], ["positive", "positive"], 2))

    def test_no_underflow_on_large_vocabulary(self):
        dim = 100_000
        data = dataset([{0: 5.0, 17: 2.0}, {99_999: 3.0}], ["positive", "negative"], dim)
        model = train_naive_bayes(data)
        heavy = vec({i: 50.0 for i in range(0, 2000, 2)})
        pred = predict(model, heavy)
        assert math.isfinite(pred.score)


# ---------------------------------------------------------------- linear SVM

# Reference optimum for the 10-point set below, obtained once from a generic
# convex solver (see tests/oracle_svm_reference.py; CLARABEL and CVXOPT agree
# to 1e-9). The exact optimum is rational: w = (20/33, 6/33), b = -14/33,
# zero hinge loss, objective 218/1089.
SVM_ORACLE_POINTS = [
    (3.0, 1.0), (2.5, -0.5), (4.0, 0.5), (3.2, 2.0), (2.8, -1.5),
    (-1.0, -0.5), (-2.0, 0.5), (-0.5, -1.5), (-1.5, 1.0), (-2.5, -1.0),
]
SVM_ORACLE_LABELS = ["positive"] * 5 + ["negative"] * 5
SVM_ORACLE_OBJECTIVE = 218.0 / 1089.0


def svm_oracle_dataset():
    rows = [{0: x, 1: y} for x, y in SVM_ORACLE_POINTS]
    return dataset(rows, SVM_ORACLE_LABELS, 2)


class TestLinearSvm:
    def test_symmetric_points_force_axis_separator(self):
        rows = [{0: 2.0, 1: 0.0}] * 5 + [{0: -2.0, 1: 0.0}] * 5
        labels = ["positive"] * 5 + ["negative"] * 5
        model = train_linear_svm(dataset(rows, labels, 2))
        assert model.converged
        assert model.weights[0] > 0
        assert abs(model.weights[1]) <= 1e-9
        assert abs(model.bias) <= 1e-9
        for row, label in zip(rows, labels):
            assert predict(model, vec(row)).label == label

    def test_objective_matches_reference_solver(self):
        data = svm_oracle_dataset()
        model = train_linear_svm(data, cost=1.0, tolerance=1e-6)
        X = np.array(SVM_ORACLE_POINTS)
        y = np.array([1.0] * 5 + [-1.0] * 5)
        objective = svm_objective(model.weights, model.bias, X, y, cost=1.0)
        assert model.converged
        assert objective <= SVM_ORACLE_OBJECTIVE + 1e-3
        assert objective >= SVM_ORACLE_OBJECTIVE - 1e-9  # cannot beat the optimum

    def test_training_accuracy_on_separable_data(self):
        data = svm_oracle_dataset()
        model = train_linear_svm(data)
        correct = sum(
            predict(model, v).label == lab for v, lab in zip(data.vectors, data.labels)
        )
        assert correct == len(data.labels)

    def test_perturbation_never_improves_beyond_tolerance(self):
        data = svm_oracle_dataset()
        tolerance = 1e-6
        model = train_linear_svm(data, tolerance=tolerance)
        X = np.array(SVM_ORACLE_POINTS)
        y = np.array([1.0] * 5 + [-1.0] * 5)
        base = svm_objective(model.weights, model.bias, X, y, 1.0)
        rng = np.random.default_rng(123)
        for _ in range(20):
            direction = rng.standard_normal(3)
            direction /= np.linalg.norm(direction)
            for sign in (1.0, -1.0):
                w = np.array(model.weights) + sign * 1e-2 * direction[:2]
                b = model.bias + sign * 1e-2 * direction[2]
                assert svm_objective(w, b, X, y, 1.0) >= base - 1e-3

    def test_identical_vectors_mixed_labels_deterministic(self):
        rows = [{0: 1.0, 1: 2.0}] * 4
        labels = ["positive", "positive", "negative", "negative"]
        model_a = train_linear_svm(dataset(rows, labels, 2))
        model_b = train_linear_svm(dataset(rows, labels, 2))
        assert model_a.weights == model_b.weights
        assert model_a.bias == model_b.bias
        # the two classes cancel exactly: no informative direction remains
        assert np.allclose(model_a.weights, 0.0)

    def test_majority_bias_on_degenerate_data(self):
        rows = [{0: 1.0}] * 4
        labels = ["positive", "positive", "positive", "negative"]
        model = train_linear_svm(dataset(rows, labels, 1))
        assert np.allclose(model.weights, 0.0)
        assert predict(model, vec({0: 1.0})).label == "positive"

    def test_sign_invariant_under_positive_scaling_when_unbiased(self):
        model = LinearSvmModel(weights=[1.0, -0.5], bias=0.0, cost=1.0, converged=True, iterations=0)
        for c in (0.1, 1.0, 7.5):
            for entries in ({0: 2.0, 1: 1.0}, {0: 0.5, 1: 3.0}):
                base = predict(model, vec(entries)).label
                scaled = predict(model, vec({i: c * w for i, w in entries.items()})).label
                assert base == scaled

    def test_nonconvergence_flag(self):
        data = svm_oracle_dataset()
        model = train_linear_svm(data, tolerance=1e-12, max_iters=3)
        assert not model.converged
        assert model.iterations == 3

    def test_deterministic_across_seeds(self):
        # training uses no randomness; the seed argument cannot change output
        data = svm_oracle_dataset()
        a = train_linear_svm(data, seed=1)
        b = train_linear_svm(data, seed=99)
        assert a.weights == b.weights and a.bias == b.bias


# ----------------------------------------------------------------------- KNN

def knn_oracle_predict(train_rows, train_labels, query, k):
    """Pure-python exhaustive scan with the same neighbour/tie discipline."""
    def norm(d):
        return math.sqrt(sum(w * w for w in d.values()))

    qn = norm(query)
    sims = []
    for row in train_rows:
        rn = norm(row)
        if qn == 0.0 or rn == 0.0:
            sims.append(0.0)
        else:
            dot = sum(w * row.get(i, 0.0) for i, w in query.items())
            sims.append(dot / (qn * rn))
    order = sorted(range(len(train_rows)), key=lambda i: (-sims[i], i))
    top = order[:k]
    pos = sum(1 for i in top if train_labels[i] == "positive")
    neg = k - pos
    if pos > neg:
        return "positive"
    if neg > pos:
        return "negative"
    return train_labels[top[0]]


class TestKnn:
    def test_k1_returns_most_similar_label(self):
        rows = [{0: 1.0}, {1: 1.0}]
        model = train_knn(dataset(rows, ["positive", "negative"], 2), k=1)
        assert predict(model, vec({0: 5.0})).label == "positive"
        assert predict(model, vec({1: 0.2})).label == "negative"

    def test_split_vote_broken_by_nearest(self):
        rows = [{0: 1.0}, {0: 1.0, 1: 1.0}]
        labels = ["positive", "negative"]
        model = train_knn(dataset(rows, labels, 2), k=2)
        # query equals row 0 exactly: similarity 1 beats the mixed row
        assert predict(model, vec({0: 3.0})).label == "positive"

    def test_equal_similarity_tie_broken_by_training_index(self):
        rows = [{0: 1.0}, {0: 2.0}]  # same direction: both similarities are 1
        model = train_knn(dataset(rows, ["negative", "positive"], 1), k=2)
        assert predict(model, vec({0: 1.0})).label == "negative"

    def test_vote_fraction_score(self):
        rows = [{0: 1.0}] * 4 + [{1: 1.0}]
        labels = ["positive"] * 4 + ["negative"]
        model = train_knn(dataset(rows, labels, 2), k=5)
        pred = predict(model, vec({0: 1.0, 1: 0.1}))
        assert pred.label == "positive"
        assert pred.score == pytest.approx(0.8)

    def test_zero_vector_similarity_zero(self):
        rows = [{0: 1.0}, {1: 1.0}, {0: 1.0, 1: 1.0}]
        model = train_knn(dataset(rows, ["positive", "negative", "positive"], 2), k=3)
        pred = predict(model, vec({}))
        # all similarities are zero: the k set is the first k indices
        assert pred.label == "positive"
        assert pred.score == pytest.approx(2 / 3)

    def test_scale_invariance(self):
        rng = random.Random(5)
        rows = [
            {i: rng.uniform(0.1, 3.0) for i in rng.sample(range(8), 3)} for _ in range(12)
        ]
        labels = [rng.choice(["positive", "negative"]) for _ in range(10)] + ["positive", "negative"]
        model = train_knn(dataset(rows, labels, 8), k=3)
        scaled_rows = [{i: 4.5 * w for i, w in r.items()} for r in rows]
        scaled_model = train_knn(dataset(scaled_rows, labels, 8), k=3)
        for _ in range(30):
            q = {i: rng.uniform(0.1, 2.0) for i in rng.sample(range(8), 4)}
            lhs = predict(model, vec(q)).label
            rhs = predict(scaled_model, vec({i: 2.0 * w for i, w in q.items()})).label
            assert lhs == rhs

    def test_matches_exhaustive_oracle_on_random_sparse_vectors(self):
        rng = random.Random(2024)
        dim = 25
        rows, labels = [], []
        for i in range(60):
            nnz = rng.randrange(0, 6)
            rows.append({j: rng.uniform(0.1, 4.0) for j in rng.sample(range(dim), nnz)})
            labels.append("positive" if i % 2 else "negative")
        data = dataset(rows, labels, dim)
        queries = []
        for _ in range(200):
            nnz = rng.randrange(0, 6)
            queries.append({j: rng.uniform(0.1, 4.0) for j in rng.sample(range(dim), nnz)})
        for k in (1, 3, 5):
            model = train_knn(data, k=k)
            for q in queries:
                assert predict(model, vec(q)).label == knn_oracle_predict(rows, labels, q, k)

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            train_knn(dataset([{0: 1.0}, {1: 1.0}], ["positive", "negative"], 2), k=3)


# ------------------------------------------------------ prediction interface

class TestPredictInterface:
    def test_svm_signed_distance(self):
        model = LinearSvmModel(weights=[1.0, 0.0], bias=0.0, cost=1.0, converged=True, iterations=0)
        pred = predict(model, vec({0: 3.0}))
        assert pred.label == "positive"
        assert pred.score == pytest.approx(3.0)

    def test_dimension_mismatch(self):
        model = LinearSvmModel(weights=[1.0], bias=0.0, cost=1.0, converged=True, iterations=0)
        with pytest.raises(DimensionMismatch):
            predict(model, vec({3: 1.0}))

    def test_nb_dimension_mismatch(self):
        data = dataset([{0: 1.0}, {1: 1.0}], ["positive", "negative"], 2)
        model = train_naive_bayes(data)
        with pytest.raises(DimensionMismatch):
            predict(model, vec({9: 1.0}))


class TestSerialization:
    def test_nb_roundtrip_bit_exact(self):
        data = dataset([{0: 2.0, 1: 1.0}, {2: 3.0}], ["positive", "negative"], 3)
        model = train_naive_bayes(data, alpha=0.7)
        restored = model_from_json(model_to_json(model))
        assert isinstance(restored, NaiveBayesModel)
        assert restored.log_priors == model.log_priors
        assert restored.log_likelihoods == model.log_likelihoods
        assert restored.alpha == model.alpha

    def test_svm_roundtrip_bit_exact(self):
        model = train_linear_svm(svm_oracle_dataset())
        restored = model_from_json(model_to_json(model))
        assert isinstance(restored, LinearSvmModel)
        assert restored.weights == model.weights
        assert restored.bias == model.bias

    def test_knn_roundtrip_bit_exact(self):
        data = dataset([{0: 1.23456789012345678, 5: 0.1}, {1: 2.0}], ["positive", "negative"], 6)
        model = train_knn(data, k=1)
        restored = model_from_json(model_to_json(model))
        assert isinstance(restored, KnnModel)
        assert [v.entries for v in restored.vectors] == [v.entries for v in model.vectors]
        assert restored.labels == model.labels

    def test_version_checked(self):
        with pytest.raises(ValueError):
            model_from_json('{"format_version": 99, "kind": "knn", "params": {}}')
