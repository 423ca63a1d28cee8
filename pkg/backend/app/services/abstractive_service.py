import logging
import math
import threading
from typing import List, Optional

import requests

from app.exceptions import AllEmpty, BadLengths, EmptyInput, RemoteUnavailable
from app.extractive_engine import ExtractiveEngine
from app.preprocessing import TextPreprocessor, is_punctuation, pre_tokenize
from app.schemas.document import Chapter
from app.schemas.pipeline import AbstractiveConfig, EmbedderConfig, StrategyParams
from app.schemas.summary import (
    FALLBACK_MODEL_ID,
    AbstractiveRequest,
    AbstractMode,
    AbstractResult,
    ChapterSummary,
    StrategyId,
    SummaryBudget,
)
from app.services.embedding_service import EmbeddingService

logger = logging.getLogger(__name__)

TOKENS_PER_FALLBACK_SENTENCE = 25


def compile_chapter_summaries(summaries: List[ChapterSummary]) -> str:
    """One paragraph per non-empty chapter summary, in chapter order"""
    paragraphs = [
        cs.text for cs in sorted(summaries, key=lambda cs: cs.chapter_index) if cs.sentences
    ]
    if not paragraphs:
        raise AllEmpty("every chapter summary is empty")
    return "\n\n".join(paragraphs)


def _truncate_tokens(text: str, max_tokens: int) -> str:
    """Longest prefix of text holding at most max_tokens pre-tokens"""
    count = 0
    in_word = False
    for i, ch in enumerate(text):
        if ch.isspace():
            in_word = False
            continue
        starts_token = is_punctuation(ch) or not in_word
        in_word = not is_punctuation(ch)
        if starts_token:
            count += 1
            if count > max_tokens:
                return text[:i].rstrip()
    return text


class AbstractiveService:
    """Client for POST {endpoint}/summarize with an extractive fallback"""

    def __init__(
        self,
        cfg: AbstractiveConfig,
        session: Optional[requests.Session] = None,
        preprocessor: Optional[TextPreprocessor] = None,
        params: Optional[StrategyParams] = None,
    ):
        self.cfg = cfg
        self.session = session or requests.Session()
        self.preprocessor = preprocessor or TextPreprocessor()
        self.params = params or StrategyParams()
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)

    def summarize(self, req: AbstractiveRequest) -> AbstractResult:
        if req.min_len > req.max_len:
            raise BadLengths(f"min_len {req.min_len} > max_len {req.max_len}")
        if req.min_len < 1:
            raise BadLengths(f"min_len must be positive, got {req.min_len}")
        if not req.text.strip():
            raise EmptyInput("abstractive request text is empty")

        if self.cfg.offline:
            return self.fallback(req)
        try:
            return self._remote(req)
        except RemoteUnavailable as e:
            if not self.cfg.fallback:
                raise
            logger.warning(f"Abstractive service unavailable ({e}); using extractive fallback")
            return self.fallback(req)

    def _remote(self, req: AbstractiveRequest) -> AbstractResult:
        if not self.cfg.endpoint_url:
            raise RemoteUnavailable("no abstractive endpoint configured")
        url = f"{self.cfg.endpoint_url.rstrip('/')}/summarize"
        payload = {"text": req.text, "min_length": req.min_len, "max_length": req.max_len}

        with self._slots:
            try:
                logger.info(f"Requesting abstract from {url}")
                response = self.session.post(url, json=payload, timeout=self.cfg.timeout_ms / 1000)
            except requests.RequestException as e:
                logger.error(f"Abstractive request failed: {e}")
                raise RemoteUnavailable(f"abstractive service unreachable: {e}")

        if response.status_code != 200:
            raise RemoteUnavailable(f"abstractive service returned HTTP {response.status_code}")
        try:
            body = response.json()
            summary = body["summary"]
        except (ValueError, KeyError, TypeError) as e:
            raise RemoteUnavailable(f"malformed abstractive response: {e}")
        if not isinstance(summary, str) or not summary:
            raise RemoteUnavailable("abstractive service returned an empty summary")
        return AbstractResult(
            summary=summary, mode=AbstractMode.REMOTE, model_id=str(body.get("model_id", "unknown"))
        )

    def fallback(self, req: AbstractiveRequest) -> AbstractResult:
        """Centroid extraction over the request's own sentences; never paraphrases"""
        doc = self.preprocessor.build_document("abstractive-request", req.text)
        chapter = Chapter(index=0, title="Abstract", sentences=doc.sentences)
        budget = SummaryBudget.of_count(math.ceil(req.max_len / TOKENS_PER_FALLBACK_SENTENCE))
        engine = ExtractiveEngine(self.params, EmbeddingService(EmbedderConfig()))
        summary = engine.summarize(chapter, StrategyId.CENTROID, budget)

        # drop the weakest picks until the pre-token budget holds
        picks = sorted(zip(summary.scores, summary.sentences), key=lambda pair: pair[0].rank)
        while len(picks) > 1 and sum(len(pre_tokenize(s.text)) for _, s in picks) > req.max_len:
            picks.pop()
        picks.sort(key=lambda pair: pair[1].index)
        text = " ".join(s.text for _, s in picks)
        notes: List[str] = []
        if len(pre_tokenize(text)) > req.max_len:
            # max_len is a hard bound; the kept text is a verbatim prefix of the sentence
            note = f"fallback sentence {picks[0][1].index} exceeds {req.max_len} tokens; cut at a token boundary"
            logger.warning(note)
            notes.append(note)
            text = _truncate_tokens(text, req.max_len)

        return AbstractResult(
            summary=text, mode=AbstractMode.FALLBACK, model_id=FALLBACK_MODEL_ID, warnings=notes
        )


def summarize_abstractive(
    req: AbstractiveRequest,
    cfg: AbstractiveConfig,
    session: Optional[requests.Session] = None,
) -> AbstractResult:
    return AbstractiveService(cfg, session=session).summarize(req)
