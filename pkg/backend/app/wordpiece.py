"""
WordPiece subword tokenization (greedy longest-match-first over a fixed vocabulary)
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from pydantic import BaseModel, ConfigDict

from app.exceptions import VocabularyError
from app.preprocessing import DATA_DIR, pre_tokenize

logger = logging.getLogger(__name__)

TOY_VOCAB_PATH = DATA_DIR / "vocab_toy.txt"


class WordPiece(BaseModel):
    model_config = ConfigDict(frozen=True)

    surface: str
    id: int
    is_continuation: bool


class Vocabulary(BaseModel):
    """Immutable token -> id map; ids are dense from 0"""

    model_config = ConfigDict(frozen=True)

    token_to_id: Dict[str, int]
    continuation_prefix: str = "##"
    unk_token: str = "[UNK]"
    max_word_chars: int = 100

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], **kwargs) -> "Vocabulary":
        token_to_id: Dict[str, int] = {}
        for i, token in enumerate(tokens):
            if not token:
                raise VocabularyError(f"empty token at id {i}")
            if token in token_to_id:
                raise VocabularyError(f"duplicate token {token!r} at id {i}")
            token_to_id[token] = i
        vocab = cls(token_to_id=token_to_id, **kwargs)
        if vocab.unk_token not in token_to_id:
            raise VocabularyError(f"vocabulary lacks unk token {vocab.unk_token!r}")
        if not vocab.continuation_prefix:
            raise VocabularyError("continuation prefix must not be empty")
        return vocab

    @classmethod
    def load(cls, path: Optional[str] = None, **kwargs) -> "Vocabulary":
        """vocab.txt layout: one token per line, line number = id"""
        vocab_path = Path(path) if path else TOY_VOCAB_PATH
        try:
            lines = vocab_path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise VocabularyError(f"cannot read vocabulary {vocab_path}: {e}")
        vocab = cls.from_tokens((line.strip() for line in lines), **kwargs)
        logger.debug(f"Loaded {len(vocab)} WordPiece entries from {vocab_path}")
        return vocab

    def __len__(self) -> int:
        return len(self.token_to_id)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    @property
    def unk_id(self) -> int:
        return self.token_to_id[self.unk_token]

    def piece(self, surface: str) -> WordPiece:
        return WordPiece(
            surface=surface,
            id=self.token_to_id.get(surface, self.unk_id),
            is_continuation=surface.startswith(self.continuation_prefix),
        )

    def encode(self, pieces: List[WordPiece]) -> List[int]:
        return [p.id for p in pieces]

    def decode(self, ids: List[int]) -> List[str]:
        id_to_token = {i: t for t, i in self.token_to_id.items()}
        return [id_to_token.get(i, self.unk_token) for i in ids]


def tokenize_word(word: str, vocab: Vocabulary) -> List[WordPiece]:
    """Greedy longest-match-first split of one whitespace-free word"""
    if len(word) > vocab.max_word_chars:
        return [vocab.piece(vocab.unk_token)]

    pieces: List[WordPiece] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = vocab.continuation_prefix + candidate
            if candidate in vocab:
                match = candidate
                break
            end -= 1
        if match is None:
            return [vocab.piece(vocab.unk_token)]
        pieces.append(vocab.piece(match))
        start = end
    return pieces


def tokenize_text(text: str, vocab: Vocabulary, cased: bool = False) -> List[WordPiece]:
    """pre_tokenize, then WordPiece each token; uncased mode lowercases first"""
    if not cased:
        text = text.lower()
    pieces: List[WordPiece] = []
    for token in pre_tokenize(text):
        pieces.extend(tokenize_word(token, vocab))
    return pieces


def strip_continuation(pieces: List[WordPiece], vocab: Vocabulary) -> str:
    """Join pieces of one word back into its surface form"""
    prefix_len = len(vocab.continuation_prefix)
    return "".join(p.surface[prefix_len:] if p.is_continuation else p.surface for p in pieces)
