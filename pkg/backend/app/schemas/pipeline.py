from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.document import HeadingRules, InputFormat
from app.schemas.summary import (
    AbstractResult,
    RougeReport,
    ScoredSentence,
    StrategyId,
    SummaryBudget,
)


class EmbedderProvider(str, Enum):
    REMOTE = "remote"
    REFERENCE = "reference"


class ModelSize(str, Enum):
    BASE = "base"
    LARGE = "large"


MODEL_SIZE_DIMS = {ModelSize.BASE: 768, ModelSize.LARGE: 1024}
REFERENCE_DIM = 256


class EmbedderConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    provider: EmbedderProvider = EmbedderProvider.REFERENCE
    # resolved from provider / model_size when omitted
    dim: Optional[int] = Field(default=None, gt=0)
    model_size: ModelSize = ModelSize.BASE
    endpoint_url: Optional[str] = None
    timeout_ms: int = Field(default=10_000, gt=0)
    cache_dir: Optional[str] = None

    @model_validator(mode="after")
    def _resolve(self) -> "EmbedderConfig":
        if self.dim is None:
            dim = (
                REFERENCE_DIM
                if self.provider == EmbedderProvider.REFERENCE
                else MODEL_SIZE_DIMS[self.model_size]
            )
            object.__setattr__(self, "dim", dim)
        if self.provider == EmbedderProvider.REMOTE and not self.endpoint_url:
            raise ValueError("remote embedder requires endpoint_url")
        if self.provider == EmbedderProvider.REFERENCE and self.dim < 16:
            raise ValueError("reference embedder requires dim >= 16")
        return self


class AbstractiveConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    endpoint_url: Optional[str] = None
    timeout_ms: int = Field(default=60_000, gt=0)
    offline: bool = False
    # fall back to extractive compression when the service fails
    fallback: bool = True
    min_len: int = Field(default=64, gt=0)
    max_len: int = Field(default=256, gt=0)
    max_in_flight: int = Field(default=2, ge=1)


class LuhnParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    gap: int = Field(default=4, ge=0)
    top_frac: float = Field(default=0.1, gt=0, le=1)
    positional: bool = True


class PageRankParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    damping: float = Field(default=0.85, gt=0, lt=1)
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=100, ge=1)


class LexRankParams(PageRankParams):
    threshold: float = Field(default=0.1, ge=0, le=1)


class LsaParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    k_topics: int = Field(default=5, ge=1)


class StrategyParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    luhn: LuhnParams = Field(default_factory=LuhnParams)
    textrank: PageRankParams = Field(default_factory=PageRankParams)
    lexrank: LexRankParams = Field(default_factory=LexRankParams)
    lsa: LsaParams = Field(default_factory=LsaParams)
    mmr_lambda: float = Field(default=0.7, ge=0, le=1)


class OutputFormat(str, Enum):
    JSON = "json"
    MARKDOWN = "markdown"


class PipelineConfig(BaseModel):
    """Everything one run needs; loaded from JSON, overridden by CLI flags"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    input_path: str
    input_format: InputFormat = InputFormat.TXT
    strategy: StrategyId = StrategyId.CENTROID
    budget: SummaryBudget = Field(default_factory=SummaryBudget)
    embedder: EmbedderConfig = Field(default_factory=EmbedderConfig)
    abstractive: AbstractiveConfig = Field(default_factory=AbstractiveConfig)
    heading_rules: HeadingRules = Field(default_factory=HeadingRules)
    params: StrategyParams = Field(default_factory=StrategyParams)
    reference_summary_path: Optional[str] = None
    chapter_reference_dir: Optional[str] = None
    output_format: OutputFormat = OutputFormat.JSON
    parallelism: int = Field(default=1, ge=1)
    stem: bool = False
    stopwords_path: Optional[str] = None
    vocab_path: Optional[str] = None
    cased: bool = False


class ChapterEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    title: str
    sentence_count: int
    sentence_indices: List[int]
    summary: List[str]
    scores: List[ScoredSentence]
    warnings: List[str] = Field(default_factory=list)
    wordpieces: Optional[int] = None
    rouge: Optional[RougeReport] = None


class BookSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    source_id: str
    strategy: StrategyId
    chapters: List[ChapterEntry]
    abstract: AbstractResult
    rouge_report: Optional[RougeReport] = None
    # stage name -> milliseconds
    timings: Dict[str, float] = Field(default_factory=dict)


class StrategyComparison(BaseModel):
    """ROUGE of each strategy's compiled extractive abstract against one reference"""

    model_config = ConfigDict(frozen=True)

    source_id: str
    reports: Dict[StrategyId, RougeReport]
