import io
import random
from fractions import Fraction

import pytest

from commentlab.annotation import (
    CONTEXT_COMMENT_ONLY,
    Guidelines,
    LABELS,
    NO_CONSENSUS,
    adjudicate,
    adjudicated_items,
    annotations_to_csv,
    build_gold_standard,
    close_round,
    cohen_kappa,
    compute_kappa,
    default_round_model,
    list_disagreements,
    open_round,
    read_annotation_csv,
    record_annotation,
)
from commentlab.errors import (
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
from commentlab.store import Article, ProjectStore


def project_with_comments(n):
    store = ProjectStore()
    project = store.create_project("ann")
    store.add_article(
        project.project_id, Article(article_id="a1", source="echorouk", topic="news", title="t")
    )
    store.ingest_comments(
        project.project_id, [{"article_id": "a1", "raw_text": "تعليق %d" % i} for i in range(n)]
    )
    return store, project


def labeled_round(labels_a, labels_b, version=1):
    store, project = project_with_comments(len(labels_a))
    rnd = open_round(project, Guidelines(version=version, text="g"))
    for cid, la, lb in zip(rnd.comment_ids, labels_a, labels_b):
        record_annotation(rnd, "A1", cid, la)
        record_annotation(rnd, "A2", cid, lb)
    return store, project, rnd


def kappa_oracle(labels_a, labels_b):
    """Independent exact-rational recomputation straight from the pairs."""
    n = len(labels_a)
    agree = sum(1 for a, b in zip(labels_a, labels_b) if a == b)
    pr_a = Fraction(agree, n)
    pr_e = Fraction(0)
    for lab in set(labels_a) | set(labels_b):
        pa = Fraction(sum(1 for x in labels_a if x == lab), n)
        pb = Fraction(sum(1 for x in labels_b if x == lab), n)
        pr_e += pa * pb
    if pr_e == 1:
        return None
    return float((pr_a - pr_e) / (1 - pr_e))


class TestRounds:
    def test_open_round_creates_two_full_queues(self):
        store, project = project_with_comments(178)
        rnd = open_round(project, Guidelines(version=1, text="g"))
        assert len(rnd.comment_ids) == 178
        assert len(rnd.pending("A1")) == 178
        assert len(rnd.pending("A2")) == 178

    def test_empty_selection_rejected(self):
        store, project = project_with_comments(3)
        with pytest.raises(NoComments):
            open_round(project, Guidelines(version=1, text="g"), comment_ids=[])

    def test_version_must_advance(self):
        store, project = project_with_comments(3)
        open_round(project, Guidelines(version=1, text="g"))
        with pytest.raises(StaleGuidelinesVersion):
            open_round(project, Guidelines(version=1, text="g2"))

    def test_last_write_wins_while_open(self):
        store, project = project_with_comments(2)
        rnd = open_round(project, Guidelines(version=1, text="g"))
        cid = rnd.comment_ids[0]
        record_annotation(rnd, "A1", cid, "positive")
        record_annotation(rnd, "A1", cid, "negative")
        assert rnd.label_of("A1", cid) == "negative"
        assert len(rnd.records) == 1

    def test_closed_round_immutable(self):
        store, project = project_with_comments(1)
        rnd = open_round(project, Guidelines(version=1, text="g"))
        close_round(rnd)
        with pytest.raises(RoundClosed):
            record_annotation(rnd, "A1", rnd.comment_ids[0], "neutral")

    def test_unknown_comment_and_annotator(self):
        store, project = project_with_comments(1)
        rnd = open_round(project, Guidelines(version=1, text="g"))
        with pytest.raises(UnknownComment):
            record_annotation(rnd, "A1", "c999", "positive")
        with pytest.raises(UnknownAnnotator):
            record_annotation(rnd, "A9", rnd.comment_ids[0], "positive")

    def test_progress_counters(self):
        store, project = project_with_comments(4)
        rnd = open_round(project, Guidelines(version=1, text="g"))
        record_annotation(rnd, "A1", rnd.comment_ids[0], "positive")
        progress = rnd.progress()
        assert progress["A1"] == {"done": 1, "pending": 3, "total": 4}
        assert progress["A2"] == {"done": 0, "pending": 4, "total": 4}

    def test_default_model_terms(self):
        model = default_round_model()
        assert set(LABELS) <= set(model.terms)
        assert set(model.interpretation) == set(LABELS)

    def test_context_policy_validated(self):
        with pytest.raises(ValueError):
            Guidelines(version=1, text="g", context_policy="everything")
        assert Guidelines(version=1, text="g", context_policy=CONTEXT_COMMENT_ONLY)


class TestKappa:
    def test_identical_mixed_vectors_give_one(self):
        labels = ["positive", "negative", "neutral", "positive"]
        _, _, rnd = labeled_round(labels, list(labels))
        result = compute_kappa(rnd)
        assert result.kappa == pytest.approx(1.0)
        assert result.pr_a == 1.0

    def test_defining_identity_holds(self):
        labels_a = ["positive"] * 8 + ["negative"] * 2
        labels_b = ["positive"] * 6 + ["negative", "negative", "positive", "negative"]
        result = cohen_kappa(labels_a, labels_b)
        assert result.kappa == pytest.approx(kappa_oracle(labels_a, labels_b), abs=1e-12)
        assert result.kappa == pytest.approx(
            (result.pr_a - result.pr_e) / (1 - result.pr_e), abs=1e-12
        )

    def test_formula_at_point_seven_and_half(self):
        # agreement 0.7 with chance 0.5: kappa is (0.7-0.5)/(1-0.5) = 0.4.
        # 2-label setup with n=20: A has 10/10, B has 10/10 -> pr_e = 0.5;
        # 14 agreements -> pr_a = 0.7
        labels_a = ["positive"] * 10 + ["negative"] * 10
        labels_b = (
            ["positive"] * 7
            + ["negative"] * 3
            + ["negative"] * 7
            + ["positive"] * 3
        )
        result = cohen_kappa(labels_a, labels_b)
        assert result.pr_a == pytest.approx(0.7)
        assert result.pr_e == pytest.approx(0.5)
        assert result.kappa == pytest.approx(0.4, abs=1e-12)

    def test_three_by_three_contingency_oracle(self):
        # contingency [[20,5,5],[5,20,5],[5,5,30]] over 100 items:
        # pr_a = 0.70, pr_e = 0.3*0.3 + 0.3*0.3 + 0.4*0.4 = 0.34,
        # kappa = 0.36/0.66 = 6/11
        labels_a, labels_b = [], []
        table = [[20, 5, 5], [5, 20, 5], [5, 5, 30]]
        for i, row in enumerate(table):
            for j, count in enumerate(row):
                labels_a += [LABELS[i]] * count
                labels_b += [LABELS[j]] * count
        result = cohen_kappa(labels_a, labels_b)
        assert result.n_items == 100
        assert result.contingency == table
        assert result.pr_a == pytest.approx(0.70, abs=1e-15)
        assert result.pr_e == pytest.approx(0.34, abs=1e-15)
        assert abs(result.kappa - float(Fraction(6, 11))) <= 1e-9
        assert abs(result.kappa - kappa_oracle(labels_a, labels_b)) <= 1e-9

    def test_symmetry_in_annotators(self):
        rng = random.Random(17)
        labels_a = [rng.choice(LABELS) for _ in range(40)]
        labels_b = [rng.choice(LABELS) for _ in range(40)]
        assert cohen_kappa(labels_a, labels_b).kappa == pytest.approx(
            cohen_kappa(labels_b, labels_a).kappa, abs=1e-12
        )

    def test_relabeling_invariance(self):
        rng = random.Random(23)
        labels_a = [rng.choice(LABELS) for _ in range(60)]
        labels_b = [rng.choice(LABELS) for _ in range(60)]
        perm = {"positive": "neutral", "neutral": "negative", "negative": "positive"}
        base = cohen_kappa(labels_a, labels_b).kappa
        mapped = cohen_kappa([perm[x] for x in labels_a], [perm[x] for x in labels_b]).kappa
        assert base == pytest.approx(mapped, abs=1e-12)

    def test_random_pairs_match_bruteforce(self):
        rng = random.Random(555)
        for _ in range(100):
            labels_a = [rng.choice(LABELS) for _ in range(50)]
            labels_b = [rng.choice(LABELS) for _ in range(50)]
            oracle = kappa_oracle(labels_a, labels_b)
            if oracle is None:
                continue
            assert abs(cohen_kappa(labels_a, labels_b).kappa - oracle) <= 1e-9

    def test_incomplete_round_rejected(self):
        store, project = project_with_comments(2)
        rnd = open_round(project, Guidelines(version=1, text="g"))
        record_annotation(rnd, "A1", rnd.comment_ids[0], "positive")
        with pytest.raises(IncompleteRound):
            compute_kappa(rnd)

    def test_degenerate_single_identical_label(self):
        _, _, rnd = labeled_round(["positive"] * 5, ["positive"] * 5)
        with pytest.raises(DegenerateAgreement):
            compute_kappa(rnd)

    def test_contingency_cells_sum_to_n(self):
        rng = random.Random(9)
        labels_a = [rng.choice(LABELS) for _ in range(33)]
        labels_b = [rng.choice(LABELS) for _ in range(33)]
        result = cohen_kappa(labels_a, labels_b)
        assert sum(sum(row) for row in result.contingency) == result.n_items == 33


class TestAdjudication:
    def test_identical_vectors_no_disagreements(self):
        labels = ["positive", "negative"] * 3
        _, _, rnd = labeled_round(labels, list(labels))
        assert list_disagreements(rnd) == []

    def test_single_disagreement(self):
        _, _, rnd = labeled_round(
            ["positive", "positive", "negative"], ["positive", "neutral", "negative"]
        )
        items = list_disagreements(rnd)
        assert len(items) == 1
        assert items[0][1:] == ("positive", "neutral")

    def test_snapshot_order_preserved(self):
        labels_a = ["positive"] * 5
        labels_b = ["negative"] * 5
        _, _, rnd = labeled_round(labels_a, labels_b)
        items = list_disagreements(rnd)
        assert [cid for cid, _, _ in items] == list(rnd.comment_ids)

    def test_agreed_item_auto_resolves(self):
        _, _, rnd = labeled_round(["positive", "negative"], ["positive", "positive"])
        items = dict(adjudicate_all(rnd))
        assert items[rnd.comment_ids[0]] == "positive"

    def test_no_consensus_becomes_neutral(self):
        _, _, rnd = labeled_round(["positive"], ["negative"])
        with pytest.raises(IncompleteRound):
            adjudicated_items(rnd)
        assert adjudicate(rnd, rnd.comment_ids[0], NO_CONSENSUS) == "neutral"

    def test_explicit_decision_wins(self):
        _, _, rnd = labeled_round(["positive"], ["neutral"])
        assert adjudicate(rnd, rnd.comment_ids[0], "negative") == "negative"

    def test_agreement_cannot_be_adjudicated(self):
        _, _, rnd = labeled_round(["positive"], ["positive"])
        with pytest.raises(NotADisagreement):
            adjudicate(rnd, rnd.comment_ids[0], "negative")


def adjudicate_all(rnd, decision=NO_CONSENSUS):
    for cid, _, _ in list_disagreements(rnd):
        adjudicate(rnd, cid, decision)
    return adjudicated_items(rnd)


def round_with_counts(pos, neg, neutral):
    n = pos + neg + neutral
    labels = ["positive"] * pos + ["negative"] * neg + ["neutral"] * neutral
    _, project, rnd = labeled_round(labels, list(labels), version=1)
    return project, rnd


class TestGoldStandard:
    def test_majority_downsampled_to_minority(self):
        _, rnd = round_with_counts(pos=45, neg=88, neutral=45)
        gold = build_gold_standard(rnd, balance_seed=3)
        counts = gold.counts()
        assert counts == {"positive": 45, "negative": 45}
        assert len(gold.items) == 90

    def test_large_round_balances_to_194(self):
        _, rnd = round_with_counts(pos=210, neg=194, neutral=13)
        gold = build_gold_standard(rnd, balance_seed=8)
        assert gold.counts() == {"positive": 194, "negative": 194}

    def test_neutral_never_in_gold(self):
        _, rnd = round_with_counts(pos=5, neg=7, neutral=9)
        gold = build_gold_standard(rnd, balance_seed=0)
        assert all(label != "neutral" for _, label in gold.items)

    def test_empty_class_rejected(self):
        _, rnd = round_with_counts(pos=0, neg=10, neutral=2)
        with pytest.raises(EmptyClass):
            build_gold_standard(rnd, balance_seed=1)

    def test_same_seed_identical_selection(self):
        _, rnd_a = round_with_counts(pos=30, neg=50, neutral=5)
        _, rnd_b = round_with_counts(pos=30, neg=50, neutral=5)
        gold_a = build_gold_standard(rnd_a, balance_seed=99)
        gold_b = build_gold_standard(rnd_b, balance_seed=99)
        assert gold_a.items == gold_b.items

    def test_different_seed_differs(self):
        _, rnd_a = round_with_counts(pos=30, neg=50, neutral=0)
        _, rnd_b = round_with_counts(pos=30, neg=50, neutral=0)
        assert build_gold_standard(rnd_a, balance_seed=1).items != build_gold_standard(
            rnd_b, balance_seed=2
        ).items

    def test_gold_subset_of_adjudicated_non_neutral(self):
        _, rnd = round_with_counts(pos=12, neg=20, neutral=4)
        gold = build_gold_standard(rnd, balance_seed=5)
        adjudicated = dict(adjudicated_items(rnd))
        for cid, label in gold.items:
            assert adjudicated[cid] == label
            assert label in ("positive", "negative")

    def test_minority_kept_whole(self):
        _, rnd = round_with_counts(pos=10, neg=25, neutral=0)
        gold = build_gold_standard(rnd, balance_seed=7)
        pos_ids = {cid for cid, lab in gold.items if lab == "positive"}
        assert len(pos_ids) == 10


class TestCsvInterchange:
    def test_round_trip(self):
        _, _, rnd = labeled_round(["positive", "negative"], ["neutral", "negative"])
        text = annotations_to_csv(rnd)
        rows = read_annotation_csv(io.StringIO(text))
        assert len(rows) == 4
        assert rows[0] == {"comment_id": rnd.comment_ids[0], "annotator_id": "A1", "label": "positive"}

    def test_missing_column_rejected(self):
        from commentlab.errors import MalformedRecord

        with pytest.raises(MalformedRecord):
            read_annotation_csv(io.StringIO("comment_id,label\nc1,positive\n"))

    def test_bad_label_rejected(self):
        from commentlab.errors import MalformedRecord

        with pytest.raises(MalformedRecord):
            read_annotation_csv(
                io.StringIO("comment_id,annotator_id,label\nc1,A1,meh\n")
            )
