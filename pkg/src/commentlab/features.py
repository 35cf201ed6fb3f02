"""Vocabulary building, word n-gram generation and document vector weighting.

Four weighting schemes are supported: TO (raw term counts), BTO (binary),
TF (counts normalized by in-vocabulary document length) and TFIDF
(TF times ln(n_docs / doc_freq)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyCorpus

SCHEMES = ("TO", "BTO", "TF", "TFIDF")

# Display labels used in report tables and CSV output.
SCHEME_LABELS = {"TO": "TO", "BTO": "BTO", "TF": "TF", "TFIDF": "TF-IDF"}


def validate_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ValueError("unknown weighting scheme: %r (expected one of %s)" % (scheme, ", ".join(SCHEMES)))
    return scheme


@dataclass(frozen=True)
class NGramConfig:
    """Cumulative n-gram configuration: max_n=2 emits unigrams and bigrams."""

    max_n: int = 1
    joiner: str = "_"

    def __post_init__(self):
        if self.max_n not in (1, 2, 3):
            raise ValueError("max_n must be 1, 2 or 3")


def generate_ngrams(tokens: Sequence[str], config: NGramConfig) -> list[str]:
    """All contiguous k-grams for k = 1..max_n, ordered by (k, position).

    A k-gram is its k tokens joined by the configured joiner.
    """
    grams: list[str] = []
    for k in range(1, config.max_n + 1):
        if k == 1:
            grams.extend(tokens)
            continue
        for i in range(len(tokens) - k + 1):
            grams.append(config.joiner.join(tokens[i : i + k]))
    return grams


@dataclass
class FeatureSpace:
    """Immutable term index over a training corpus.

    Terms are indexed densely in first-appearance order; terms seen in fewer
    than ``min_df`` documents are excluded.
    """

    terms: dict[str, int]
    doc_freq: dict[str, int]
    n_docs: int
    ngram: NGramConfig | None = None
    min_df: int = 1

    def __len__(self) -> int:
        return len(self.terms)

    def index_of(self, term: str) -> int | None:
        return self.terms.get(term)

    def to_tsv(self) -> str:
        """term<TAB>index<TAB>doc_freq dump for inspection and diffing."""
        lines = ["%s\t%d\t%d" % (t, i, self.doc_freq[t]) for t, i in self.terms.items()]
        return "\n".join(lines) + ("\n" if lines else "")


def build_feature_space(
    documents: Sequence[Sequence[str]],
    min_df: int = 1,
    ngram: NGramConfig | None = None,
) -> FeatureSpace:
    """Collect terms over already-processed documents (token/term sequences)."""
    if not documents:
        raise EmptyCorpus("cannot build a feature space over zero documents")
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    # scan in document order so term indices follow first appearance
    # (set iteration would be hash-order and break run-to-run determinism)
    order: list[str] = []
    doc_freq: dict[str, int] = {}
    for doc in documents:
        seen: set[str] = set()
        for term in doc:
            if term in seen:
                continue
            seen.add(term)
            if term in doc_freq:
                doc_freq[term] += 1
            else:
                order.append(term)
                doc_freq[term] = 1
    kept = [t for t in order if doc_freq[t] >= min_df]
    return FeatureSpace(
        terms={t: i for i, t in enumerate(kept)},
        doc_freq={t: doc_freq[t] for t in kept},
        n_docs=len(documents),
        ngram=ngram,
        min_df=min_df,
    )


@dataclass
class DocumentVector:
    """Sparse weighted vector: feature index -> weight under one scheme.

    Entries exist exactly for in-vocabulary terms occurring in the document,
    so the support is scheme-independent (a TFIDF weight may be 0.0 when a
    term occurs in every training document).
    """

    entries: dict[int, float]
    scheme: str


def vectorize(terms: Sequence[str], space: FeatureSpace, scheme: str) -> DocumentVector:
    """Weight a processed document against a feature space.

    Out-of-vocabulary terms are ignored. With c(t) the in-vocabulary count
    and L the total of those counts: TO=c, BTO=1, TF=c/L, TFIDF=(c/L)*ln(N/df).
    """
    validate_scheme(scheme)
    counts: dict[int, int] = {}
    df_by_index: dict[int, int] = {}
    for term in terms:
        idx = space.terms.get(term)
        if idx is None:
            continue
        counts[idx] = counts.get(idx, 0) + 1
        if idx not in df_by_index:
            df_by_index[idx] = space.doc_freq[term]
    if not counts:
        return DocumentVector({}, scheme)
    if scheme == "TO":
        return DocumentVector({i: float(c) for i, c in counts.items()}, scheme)
    if scheme == "BTO":
        return DocumentVector({i: 1.0 for i in counts}, scheme)
    length = sum(counts.values())
    tf = {i: c / length for i, c in counts.items()}
    if scheme == "TF":
        return DocumentVector(tf, scheme)
    n = space.n_docs
    return DocumentVector(
        {i: tf[i] * math.log(n / df_by_index[i]) for i in tf}, scheme
    )
