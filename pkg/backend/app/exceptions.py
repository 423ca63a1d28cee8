"""
Error hierarchy for the summarization pipeline.
Each family carries the CLI exit code it maps to.
"""

from typing import Optional


class BooksumError(Exception):
    """Base class for all pipeline errors"""

    exit_code: int = 1


# ==================== CONFIG (exit 2) ====================


class ConfigError(BooksumError):
    exit_code = 2


class BadLengths(ConfigError):
    """min_len > max_len on an abstractive request"""


class BudgetInvalid(ConfigError):
    """Summary budget outside its allowed range"""


class VocabularyError(ConfigError):
    """Malformed WordPiece vocabulary file"""


# ==================== INPUT (exit 3) ====================


class InputError(BooksumError):
    exit_code = 3


class UndecodableInput(InputError):
    """Plaintext payload is not valid UTF-8"""


class ExtractionFailed(InputError):
    """PDF backend failed, or the PDF is encrypted / image-only"""


class EmptyDocument(InputError):
    """No sentences could be read from the input"""


class EmptyInput(InputError):
    """Candidate or reference has no tokens to score"""


class AllEmpty(InputError):
    """Every chapter summary is empty"""


class DegenerateMatrix(InputError):
    """Term-sentence matrix has no terms at all"""


# ==================== REMOTE (exit 4) ====================


class RemoteError(BooksumError):
    exit_code = 4


class RemoteUnavailable(RemoteError):
    """Inference service timed out or answered with an error"""


class DimensionMismatch(RemoteError):
    """Embedding dimensions disagree with the configured dimension"""


# ==================== WARNINGS ====================


class ConvergenceFailure(UserWarning):
    """PageRank hit max_iter before reaching tolerance"""


# ==================== STAGE WRAPPER ====================


class PipelineStageError(BooksumError):
    """A pipeline stage failed; the original error is chained as __cause__"""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


def exit_code_for(exc: Optional[BaseException]) -> int:
    """Exit code the CLI should return for an exception"""
    if exc is None:
        return 0
    return getattr(exc, "exit_code", 1)
