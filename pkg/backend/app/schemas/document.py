import re
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_HEADING_PATTERNS = [
    r"^(chapter|part|book)\s+([0-9]+|[ivxlc]+)\b",
    r"^[0-9]{1,3}\.\s+\S",
]


class InputFormat(str, Enum):
    PDF = "pdf"
    TXT = "txt"


class RawDocument(BaseModel):
    """Undecoded input file"""

    model_config = ConfigDict(frozen=True)

    source_id: str
    format: InputFormat
    payload: bytes


class Sentence(BaseModel):
    """One sentence, verbatim, with its feature tokens"""

    model_config = ConfigDict(frozen=True)

    index: int
    text: str
    clean_tokens: List[str] = Field(default_factory=list)
    char_span: Tuple[int, int]


class CleanDocument(BaseModel):
    model_config = ConfigDict(frozen=True)

    source_id: str
    full_text: str
    sentences: List[Sentence]
    stopword_list_id: str


class Chapter(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    title: str
    sentences: List[Sentence]


class HeadingRules(BaseModel):
    """Case-insensitive heading patterns matched at the start of a sentence"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    patterns: List[str] = Field(default_factory=lambda: list(DEFAULT_HEADING_PATTERNS))
    min_chapter_sentences: int = Field(default=3, ge=1)
    # all-caps heading lines up to this length; None disables the rule
    all_caps_max_len: Optional[int] = Field(default=60, ge=1)

    @field_validator("patterns")
    @classmethod
    def _check_patterns(cls, patterns: List[str]) -> List[str]:
        if not patterns:
            raise ValueError("heading patterns must not be empty")
        for pattern in patterns:
            try:
                re.compile(pattern, re.IGNORECASE)
            except re.error as e:
                raise ValueError(f"invalid heading pattern {pattern!r}: {e}")
        return patterns
