"""Domain error types shared by the core modules, the CLI and the HTTP service."""


class CommentLabError(Exception):
    """Base class for all domain errors. The CLI maps these to exit code 2."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


# --- corpus store ---

class UnknownProject(CommentLabError):
    code = "unknown_project"


class UnknownArticle(CommentLabError):
    code = "unknown_article"


class UnknownRound(CommentLabError):
    code = "unknown_round"


class MalformedRecord(CommentLabError):
    code = "malformed_record"


class EmptySelection(CommentLabError):
    code = "empty_selection"


class StoreCorrupt(CommentLabError):
    code = "store_corrupt"


# --- annotation workflow ---

class NoComments(CommentLabError):
    code = "no_comments"


class StaleGuidelinesVersion(CommentLabError):
    code = "stale_guidelines_version"


class UnknownComment(CommentLabError):
    code = "unknown_comment"


class UnknownAnnotator(CommentLabError):
    code = "unknown_annotator"


class RoundClosed(CommentLabError):
    code = "round_closed"


class IncompleteRound(CommentLabError):
    code = "incomplete_round"


class DegenerateAgreement(CommentLabError):
    code = "degenerate_agreement"


class NotADisagreement(CommentLabError):
    code = "not_a_disagreement"


class EmptyClass(CommentLabError):
    code = "empty_class"


# --- featurization ---

class EmptyCorpus(CommentLabError):
    code = "empty_corpus"


# --- classifiers ---

class SingleClass(CommentLabError):
    code = "single_class"


class KTooLarge(CommentLabError):
    code = "k_too_large"


class DimensionMismatch(CommentLabError):
    code = "dimension_mismatch"


# --- evaluation ---

class BadK(CommentLabError):
    code = "bad_k"


class FoldTooSmall(CommentLabError):
    code = "fold_too_small"


class EmptyMatrix(CommentLabError):
    code = "empty_matrix"


class MissingCell(CommentLabError):
    code = "missing_cell"


# --- cycle engine ---

class IllegalTransition(CommentLabError):
    code = "illegal_transition"


class OperatorAbort(CommentLabError):
    code = "operator_abort"


# --- service ---

class BindFailure(CommentLabError):
    code = "bind_failure"


# --- configuration ---

class ConfigError(CommentLabError):
    code = "config_error"
