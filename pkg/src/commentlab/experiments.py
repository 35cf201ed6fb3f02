"""Experiment grid runner: every (stem, scheme, ngram, classifier) cell is
cross-validated independently and assembled into an EvaluationReport.

Grid definitions live in a declarative key-value config file with sections,
reviewable and diffable next to the corpus it evaluates::

    [grid]
    stem = both
    schemes = TO, TF, TFIDF, BTO
    ngrams = 1, 2, 3
    classifiers = nb, svm, knn
    k_folds = 10
    seed = 7

    [svm]
    cost = 1.0
    tolerance = 1e-4
    max_iters = 1000000

    [nb]
    alpha = 1.0

    [knn]
    k = 5
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigError, MalformedRecord
from .evaluation import (
    CLASSIFIER_ORDER,
    EvaluationReport,
    NGRAM_ORDER,
    PipelineConfig,
    SCHEME_ORDER,
    cross_validate,
)
from .features import NGramConfig, generate_ngrams
from .textproc import TextPipeline

STEM_CHOICES = ("both", "yes", "no")


@dataclass(frozen=True)
class ExperimentConfig:
    stem: str = "both"
    schemes: tuple[str, ...] = SCHEME_ORDER
    ngrams: tuple[int, ...] = NGRAM_ORDER
    classifiers: tuple[str, ...] = CLASSIFIER_ORDER
    k_folds: int = 10
    seed: Optional[int] = None  # required before running; no wall-clock default
    nb_alpha: float = 1.0
    svm_cost: float = 1.0
    svm_tolerance: float = 1e-4
    svm_max_iters: int = 1_000_000
    knn_k: int = 5
    min_df: int = 1

    def validate(self):
        if self.stem not in STEM_CHOICES:
            raise ConfigError("stem must be one of %s" % ", ".join(STEM_CHOICES))
        if not self.schemes or not self.ngrams or not self.classifiers:
            raise ConfigError("schemes, ngrams and classifiers must be non-empty")
        for s in self.schemes:
            if s not in SCHEME_ORDER:
                raise ConfigError("unknown scheme %r" % s)
        for n in self.ngrams:
            if n not in (1, 2, 3):
                raise ConfigError("ngrams must be within {1, 2, 3}")
        for c in self.classifiers:
            if c not in CLASSIFIER_ORDER:
                raise ConfigError("unknown classifier %r" % c)
        if self.seed is None:
            raise ConfigError("a seed is required for reproducible runs")
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")

    def stem_values(self) -> tuple[bool, ...]:
        if self.stem == "both":
            return (False, True)
        return (self.stem == "yes",)


def parse_experiment_config(path: str, seed_override: Optional[int] = None) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigError("cannot read experiment config %r" % path)
    try:
        grid = parser["grid"] if parser.has_section("grid") else parser["DEFAULT"]
        config = ExperimentConfig(
            stem=grid.get("stem", "both").strip(),
            schemes=_split(grid.get("schemes", "TO, TF, TFIDF, BTO")),
            ngrams=tuple(int(x) for x in _split(grid.get("ngrams", "1, 2, 3"))),
            classifiers=tuple(x.lower() for x in _split(grid.get("classifiers", "nb, svm, knn"))),
            k_folds=grid.getint("k_folds", 10),
            seed=seed_override if seed_override is not None else _opt_int(grid, "seed"),
            nb_alpha=_section_float(parser, "nb", "alpha", 1.0),
            svm_cost=_section_float(parser, "svm", "cost", 1.0),
            svm_tolerance=_section_float(parser, "svm", "tolerance", 1e-4),
            svm_max_iters=int(_section_float(parser, "svm", "max_iters", 1_000_000)),
            knn_k=int(_section_float(parser, "knn", "k", 5)),
            min_df=grid.getint("min_df", 1),
        )
    except ValueError as exc:
        raise ConfigError("bad experiment config: %s" % exc) from exc
    config.validate()
    return config


def _split(value: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in value.replace(",", " ").split() if part.strip())


def _opt_int(section, key: str) -> Optional[int]:
    raw = section.get(key)
    return int(raw) if raw is not None and raw.strip() else None


def _section_float(parser, section: str, key: str, default: float) -> float:
    if parser.has_section(section) and parser.has_option(section, key):
        return parser.getfloat(section, key)
    return default


def run_grid(
    documents: Sequence[str],
    labels: Sequence[str],
    config: ExperimentConfig,
) -> EvaluationReport:
    """Cross-validate every grid cell on (documents, labels).

    Processed term lists are shared across cells with the same
    (stem, ngram) pair; cells are independent, so assembly is
    order-insensitive and the report depends only on inputs and seed.
    """
    config.validate()
    report = EvaluationReport()
    pipelines = {stem: TextPipeline.build(stem=stem) for stem in config.stem_values()}
    term_cache: dict[tuple[bool, int], list[list[str]]] = {}
    for stem in config.stem_values():
        token_lists = [pipelines[stem](doc) for doc in documents]
        for ngram in config.ngrams:
            ngconf = NGramConfig(ngram)
            term_cache[(stem, ngram)] = [generate_ngrams(toks, ngconf) for toks in token_lists]
    for stem in config.stem_values():
        for scheme in config.schemes:
            for ngram in config.ngrams:
                for classifier in config.classifiers:
                    cell = PipelineConfig(
                        stem=stem,
                        scheme=scheme,
                        ngram_max=ngram,
                        classifier=classifier,
                        nb_alpha=config.nb_alpha,
                        svm_cost=config.svm_cost,
                        svm_tolerance=config.svm_tolerance,
                        svm_max_iters=config.svm_max_iters,
                        knn_k=config.knn_k,
                        min_df=config.min_df,
                    )
                    result = cross_validate(
                        documents,
                        labels,
                        cell,
                        k=config.k_folds,
                        seed=config.seed,
                        term_lists=term_cache[(stem, ngram)],
                    )
                    report.add(stem, scheme, ngram, classifier, result.metrics, result.pooled)
    return report


# -- gold corpus JSONL --

def read_gold_jsonl(fh) -> tuple[list[str], list[str], list[str]]:
    """Parse gold rows {"comment_id", "text", "label"}; returns parallel
    (comment_ids, texts, labels)."""
    ids, texts, labels = [], [], []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except ValueError as exc:
            raise MalformedRecord("gold line %d is not valid JSON: %s" % (lineno, exc)) from exc
        missing = {"comment_id", "text", "label"} - set(row)
        if missing:
            raise MalformedRecord("gold line %d missing fields: %s" % (lineno, ", ".join(sorted(missing))))
        if row["label"] not in ("positive", "negative"):
            raise MalformedRecord("gold line %d has label %r" % (lineno, row["label"]))
        ids.append(row["comment_id"])
        texts.append(row["text"])
        labels.append(row["label"])
    return ids, texts, labels


def write_gold_jsonl(items: Sequence[tuple[str, str, str]], fh) -> int:
    """Write (comment_id, text, label) triples as gold JSONL rows."""
    count = 0
    for comment_id, text, label in items:
        fh.write(
            json.dumps({"comment_id": comment_id, "text": text, "label": label}, ensure_ascii=False)
            + "\n"
        )
        count += 1
    return count
