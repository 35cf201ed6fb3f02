import random

import pytest

from commentlab.errors import BadK, EmptyMatrix, FoldTooSmall, MissingCell
from commentlab.evaluation import (
    ConfusionMatrix,
    EvaluationReport,
    MetricBundle,
    PipelineConfig,
    compute_metrics,
    cross_validate,
    render_table,
    report_to_csv,
    stratified_folds,
)


class TestStratifiedFolds:
    def test_balanced_90_items_into_10_folds(self):
        labels = ["positive"] * 45 + ["negative"] * 45
        plan = stratified_folds(labels, k=10, seed=3)
        assert len(plan.folds) == 10
        for fold in plan.folds:
            assert len(fold) == 9
            pos = sum(1 for i in fold if labels[i] == "positive")
            assert pos in (4, 5)

    def test_leave_one_out(self):
        labels = ["positive", "negative"] * 4
        plan = stratified_folds(labels, k=8, seed=1)
        assert sorted(len(f) for f in plan.folds) == [1] * 8

    def test_same_seed_same_plan(self):
        labels = ["positive"] * 13 + ["negative"] * 7
        a = stratified_folds(labels, k=5, seed=77)
        b = stratified_folds(labels, k=5, seed=77)
        assert a.folds == b.folds

    def test_different_seed_usually_differs(self):
        labels = ["positive"] * 20 + ["negative"] * 20
        a = stratified_folds(labels, k=5, seed=1)
        b = stratified_folds(labels, k=5, seed=2)
        assert a.folds != b.folds

    def test_bad_k(self):
        labels = ["positive", "negative"]
        with pytest.raises(BadK):
            stratified_folds(labels, k=1, seed=0)
        with pytest.raises(BadK):
            stratified_folds(labels, k=3, seed=0)

    def test_partition_properties_on_random_label_vectors(self):
        rng = random.Random(123)
        for _ in range(500):
            n = rng.randrange(4, 60)
            labels = [rng.choice(["positive", "negative"]) for _ in range(n)]
            if len(set(labels)) < 2:
                labels[0] = "positive"
                labels[1] = "negative"
            k = rng.randrange(2, n + 1)
            plan = stratified_folds(labels, k=k, seed=rng.randrange(10_000))
            flat = [i for fold in plan.folds for i in fold]
            assert sorted(flat) == list(range(n))  # disjoint and covering
            sizes = [len(f) for f in plan.folds]
            assert max(sizes) - min(sizes) <= 1
            for lab in set(labels):
                per_fold = [sum(1 for i in f if labels[i] == lab) for f in plan.folds]
                assert max(per_fold) - min(per_fold) <= 1


class TestMetrics:
    def test_hand_checked_counts(self):
        bundle = compute_metrics(ConfusionMatrix(tp=9, fp=1, fn=3, tn=7))
        assert bundle.precision_pos == pytest.approx(0.9)
        assert bundle.recall_pos == pytest.approx(0.75)
        assert bundle.accuracy == pytest.approx(0.8)
        assert bundle.precision_neg == pytest.approx(0.7)
        assert bundle.recall_neg == pytest.approx(7 / 8)

    def test_all_correct(self):
        bundle = compute_metrics(ConfusionMatrix(tp=5, fp=0, fn=0, tn=5))
        assert bundle.accuracy == 1.0
        assert bundle.precision_pos == 1.0
        assert bundle.precision_neg == 1.0
        assert bundle.recall_pos == 1.0
        assert bundle.recall_neg == 1.0

    def test_zero_over_zero_is_undefined_not_zero(self):
        bundle = compute_metrics(ConfusionMatrix(tp=0, fp=0, fn=2, tn=8))
        assert bundle.precision_pos is None
        assert bundle.accuracy == pytest.approx(0.8)

    def test_empty_matrix_rejected(self):
        with pytest.raises(EmptyMatrix):
            compute_metrics(ConfusionMatrix())

    def test_accuracy_integer_identity(self):
        rng = random.Random(9)
        for _ in range(200):
            cm = ConfusionMatrix(
                tp=rng.randrange(0, 20),
                fp=rng.randrange(0, 20),
                fn=rng.randrange(0, 20),
                tn=rng.randrange(0, 20),
            )
            if cm.total == 0:
                continue
            bundle = compute_metrics(cm)
            assert bundle.accuracy * cm.total == pytest.approx(cm.tp + cm.tn, abs=1e-9)


def separable_corpus(n_per_class=45):
    """Two disjoint vocabularies with a shared per-class marker term, so any
    training split is linearly separable and every classifier is perfect."""
    docs, labels = [], []
    for i in range(n_per_class):
        docs.append("goodmark nicea%d niceb%d" % (i % 7, (i + 3) % 5))
        labels.append("positive")
    for i in range(n_per_class):
        docs.append("badmark poora%d poorb%d" % (i % 7, (i + 2) % 5))
        labels.append("negative")
    return docs, labels


class TestCrossValidate:
    @pytest.mark.parametrize("classifier", ["nb", "svm", "knn"])
    def test_separable_corpus_is_perfect_under_bto_unigram(self, classifier):
        docs, labels = separable_corpus()
        config = PipelineConfig(stem=False, scheme="BTO", ngram_max=1, classifier=classifier)
        result = cross_validate(docs, labels, config, k=10, seed=5)
        assert result.metrics.accuracy == 1.0

    def test_degenerate_two_items(self):
        config = PipelineConfig(stem=False, scheme="TO", ngram_max=1, classifier="nb")
        with pytest.raises((BadK, FoldTooSmall)):
            cross_validate(["a", "b"], ["positive", "negative"], config, k=10, seed=0)

    def test_fold_too_small_when_class_lost(self):
        # 3 positive + 1 negative with k=4: one training split drops the
        # negative class entirely
        docs = ["aaa", "bbb", "ccc", "ddd"]
        labels = ["positive", "positive", "positive", "negative"]
        config = PipelineConfig(stem=False, scheme="TO", ngram_max=1, classifier="nb")
        with pytest.raises(FoldTooSmall):
            cross_validate(docs, labels, config, k=4, seed=0)

    def test_pooled_equals_sum_of_folds(self):
        docs, labels = separable_corpus(10)
        config = PipelineConfig(stem=False, scheme="TF", ngram_max=2, classifier="knn", knn_k=3)
        result = cross_validate(docs, labels, config, k=5, seed=2)
        total = ConfusionMatrix()
        for cm in result.fold_matrices:
            total = total.add(cm)
        assert (total.tp, total.fp, total.fn, total.tn) == (
            result.pooled.tp,
            result.pooled.fp,
            result.pooled.fn,
            result.pooled.tn,
        )
        assert result.pooled.total == len(docs)

    def test_deterministic_given_seed(self):
        docs, labels = separable_corpus(12)
        config = PipelineConfig(stem=True, scheme="TFIDF", ngram_max=2, classifier="svm")
        a = cross_validate(docs, labels, config, k=4, seed=11)
        b = cross_validate(docs, labels, config, k=4, seed=11)
        assert a.metrics == b.metrics
        assert [c.__dict__ for c in a.fold_matrices] == [c.__dict__ for c in b.fold_matrices]

    def test_balanced_accuracy_is_mean_of_recalls(self):
        rng = random.Random(31)
        vocab = ["w%d" % i for i in range(12)]
        docs = [" ".join(rng.choices(vocab, k=rng.randrange(2, 8))) for _ in range(30)]
        labels = (["positive", "negative"] * 15)[:30]
        config = PipelineConfig(stem=False, scheme="TO", ngram_max=1, classifier="nb")
        result = cross_validate(docs, labels, config, k=5, seed=8)
        m = result.metrics
        assert m.accuracy == pytest.approx((m.recall_pos + m.recall_neg) / 2, abs=1e-12)


class TestReportGrid:
    def full_report(self, value=1.0):
        report = EvaluationReport()
        bundle = MetricBundle(value, value, value, value, value)
        for stem in (False, True):
            for scheme in ("TO", "TF", "TFIDF", "BTO"):
                for ngram in (1, 2, 3):
                    report.add(stem, scheme, ngram, "svm", bundle)
        return report

    def test_grid_shape(self):
        report = self.full_report()
        text = render_table(report, "svm")
        lines = text.strip().splitlines()
        # title + two header lines + 8 data rows
        assert len(lines) == 11
        data_rows = lines[3:]
        assert len(data_rows) == 8
        for row in data_rows:
            cells = row.split()
            # stem flag + scheme label + 15 numeric columns
            assert len(cells) == 17

    def test_perfect_classifier_renders_hundreds(self):
        text = render_table(self.full_report(), "svm")
        assert text.count("100.00") == 8 * 15

    def test_missing_cell_named(self):
        report = self.full_report()
        del report.rows[(False, "TF", 2, "svm")]
        with pytest.raises(MissingCell) as err:
            render_table(report, "svm")
        assert "TF" in str(err.value)
        assert "ngram=2" in str(err.value)

    def test_undefined_metric_rendered_as_dash(self):
        report = self.full_report()
        report.add(False, "TO", 1, "svm", MetricBundle(0.5, None, 0.5, None, 0.5))
        text = render_table(report, "svm")
        assert "—" in text

    def test_csv_round(self):
        report = self.full_report(0.875)
        csv_text = report_to_csv(report)
        lines = csv_text.strip().splitlines()
        assert lines[0] == "classifier,stem,scheme,ngram,accuracy,precision_pos,precision_neg,recall_pos,recall_neg"
        assert len(lines) == 1 + 24
        assert lines[1].startswith("svm,no,TO,1,0.875")

    def test_csv_undefined_metric_empty_field(self):
        report = EvaluationReport()
        report.add(False, "TO", 1, "nb", MetricBundle(0.5, None, 1.0, None, 0.25))
        lines = report_to_csv(report).strip().splitlines()
        assert lines[1] == "nb,no,TO,1,0.5,,1,,0.25"
