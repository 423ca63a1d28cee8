import math
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.exceptions import BudgetInvalid
from app.schemas.document import Sentence


class EmbeddingVector(BaseModel):
    """Unit-norm float32 sentence embedding"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int
    values: np.ndarray

    @classmethod
    def from_array(cls, values: np.ndarray) -> "EmbeddingVector":
        arr = np.ascontiguousarray(values, dtype=np.float32)
        return cls(dim=int(arr.shape[0]), values=arr)


class StrategyId(str, Enum):
    CENTROID = "centroid"
    LUHN = "luhn"
    TEXTRANK = "textrank"
    LEXRANK = "lexrank"
    LSA = "lsa"


class ScoredSentence(BaseModel):
    model_config = ConfigDict(frozen=True)

    sentence_index: int
    weight: float
    rank: int


class Ranking(list):
    """List of ScoredSentence in sentence order, plus the PageRank convergence flag"""

    def __init__(self, items=(), converged: bool = True):
        super().__init__(items)
        self.converged = converged


DEFAULT_RATIO = 0.2


class BudgetMode(str, Enum):
    RATIO = "ratio"
    COUNT = "count"


class SummaryBudget(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: BudgetMode = BudgetMode.RATIO
    ratio: Optional[float] = None
    count: Optional[int] = None

    @model_validator(mode="after")
    def _default_ratio(self) -> "SummaryBudget":
        if self.mode == BudgetMode.RATIO and self.ratio is None and self.count is None:
            object.__setattr__(self, "ratio", DEFAULT_RATIO)
        return self

    @classmethod
    def of_ratio(cls, ratio: float) -> "SummaryBudget":
        return cls(mode=BudgetMode.RATIO, ratio=ratio, count=None)

    @classmethod
    def of_count(cls, count: int) -> "SummaryBudget":
        return cls(mode=BudgetMode.COUNT, ratio=None, count=count)

    def target(self, n: int) -> int:
        """Number of sentences to keep out of n"""
        if self.mode == BudgetMode.RATIO:
            if self.count is not None or self.ratio is None or not 0 < self.ratio <= 1:
                raise BudgetInvalid(f"ratio budget needs 0 < ratio <= 1, got {self.ratio}")
            k = math.ceil(self.ratio * n)
        else:
            if self.ratio is not None or self.count is None or self.count < 1:
                raise BudgetInvalid(f"count budget needs count >= 1, got {self.count}")
            k = min(self.count, n)
        return max(1, min(k, n))


class ChapterSummary(BaseModel):
    """Verbatim sentences chosen for one chapter"""

    model_config = ConfigDict(frozen=True)

    chapter_index: int
    title: str
    strategy: StrategyId
    sentences: List[Sentence]
    scores: List[ScoredSentence]
    converged: bool = True
    warnings: List[str] = Field(default_factory=list)

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)


class AbstractMode(str, Enum):
    REMOTE = "remote"
    FALLBACK = "fallback"


FALLBACK_MODEL_ID = "fallback-compressive"


class AbstractiveRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    min_len: int = 64
    max_len: int = 256


class AbstractResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    summary: str
    mode: AbstractMode
    model_id: str
    # set when the fallback had to cut its only sentence to fit max_len
    warnings: List[str] = Field(default_factory=list)


class RougeScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        denom = precision + recall
        f1 = 2 * precision * recall / denom if denom > 0 else 0.0
        return cls(precision=precision, recall=recall, f1=f1)


class RougeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore
    # additional ROUGE-N rows keyed "rouge<n>"
    extra: Dict[str, RougeScore] = Field(default_factory=dict)

    def rows(self) -> Dict[str, RougeScore]:
        rows = {"rouge1": self.rouge1, "rouge2": self.rouge2}
        rows.update(sorted(self.extra.items()))
        rows["rougeL"] = self.rougeL
        return rows
