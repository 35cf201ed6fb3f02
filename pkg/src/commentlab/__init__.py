"""Annotation workbench and sentiment classification pipeline for newspaper comments."""

from .annotation import (
    Guidelines,
    IAAResult,
    balance_gold_items,
    build_gold_standard,
    cohen_kappa,
    compute_kappa,
    open_round,
    record_annotation,
)
from .classifiers import predict, train_knn, train_linear_svm, train_naive_bayes
from .evaluation import PipelineConfig, compute_metrics, cross_validate, stratified_folds
from .experiments import ExperimentConfig, run_grid
from .features import NGramConfig, build_feature_space, generate_ngrams, vectorize
from .store import ProjectStore, canonicalize_for_dedup
from .textproc import TextPipeline, light_stem, normalize, tokenize

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "Guidelines",
    "IAAResult",
    "NGramConfig",
    "PipelineConfig",
    "ProjectStore",
    "TextPipeline",
    "balance_gold_items",
    "build_feature_space",
    "build_gold_standard",
    "canonicalize_for_dedup",
    "cohen_kappa",
    "compute_kappa",
    "compute_metrics",
    "cross_validate",
    "generate_ngrams",
    "light_stem",
    "normalize",
    "open_round",
    "predict",
    "record_annotation",
    "run_grid",
    "stratified_folds",
    "tokenize",
    "train_knn",
    "train_linear_svm",
    "train_naive_bayes",
    "vectorize",
]
