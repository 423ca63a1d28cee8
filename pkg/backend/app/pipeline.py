"""
Book pipeline orchestration:
ingest -> chapters -> extractive (per chapter) -> compile -> abstractive -> evaluate
"""

import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

import requests
from joblib import Parallel, delayed

from app.chapters import split_chapters
from app.exceptions import ConfigError, PipelineStageError
from app.extractive_engine import ExtractiveEngine
from app.preprocessing import TextPreprocessor, extract_text, read_document
from app.rouge import evaluate_summary
from app.schemas.document import Chapter, CleanDocument, InputFormat
from app.schemas.pipeline import BookSummary, ChapterEntry, PipelineConfig, StrategyComparison
from app.schemas.summary import (
    AbstractiveRequest,
    AbstractResult,
    ChapterSummary,
    RougeReport,
    StrategyId,
)
from app.services.abstractive_service import AbstractiveService, compile_chapter_summaries
from app.services.embedding_service import EmbeddingService
from app.wordpiece import Vocabulary, tokenize_text

logger = logging.getLogger(__name__)

STAGES = ("ingest", "chapters", "extractive", "abstractive", "evaluate")


def read_reference(path: str) -> str:
    """Reference summaries are UTF-8 plaintext"""
    return extract_text(read_document(path, InputFormat.TXT))


class BookPipeline:
    """One configured run over one book"""

    def __init__(self, cfg: PipelineConfig, session: Optional[requests.Session] = None):
        self.cfg = cfg
        self.session = session or requests.Session()
        self.preprocessor = TextPreprocessor(stopwords_path=cfg.stopwords_path, stem=cfg.stem)
        self.embedder = EmbeddingService(cfg.embedder, session=self.session)
        self.timings: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Time a stage and wrap its failure with the stage name"""
        logger.info(f"Stage {name} started")
        start = time.perf_counter()
        try:
            yield
        except Exception as e:
            logger.error(f"Stage {name} failed: {e}")
            raise PipelineStageError(name, e) from e
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + (time.perf_counter() - start) * 1000

    # ==================== STAGES ====================

    def ingest(self) -> CleanDocument:
        with self.stage("ingest"):
            raw = read_document(self.cfg.input_path, self.cfg.input_format)
            return self.preprocessor.ingest(raw)

    def split(self, doc: CleanDocument) -> List[Chapter]:
        with self.stage("chapters"):
            return split_chapters(doc, self.cfg.heading_rules)

    def summarize_chapters(self, chapters: List[Chapter], strategy: StrategyId) -> List[ChapterSummary]:
        with self.stage("extractive"):
            engine = ExtractiveEngine(self.cfg.params, self.embedder, degenerate_fallback=True)
            if self.cfg.parallelism == 1:
                return [engine.summarize(c, strategy, self.cfg.budget) for c in chapters]
            logger.info(f"Summarizing {len(chapters)} chapters on {self.cfg.parallelism} workers")
            # results come back in submission order
            return Parallel(n_jobs=self.cfg.parallelism, prefer="threads")(
                delayed(engine.summarize)(c, strategy, self.cfg.budget) for c in chapters
            )

    def abstract(self, summaries: List[ChapterSummary]) -> AbstractResult:
        with self.stage("abstractive"):
            compiled = compile_chapter_summaries(summaries)
            service = AbstractiveService(
                self.cfg.abstractive,
                session=self.session,
                preprocessor=self.preprocessor,
                params=self.cfg.params,
            )
            request = AbstractiveRequest(
                text=compiled,
                min_len=self.cfg.abstractive.min_len,
                max_len=self.cfg.abstractive.max_len,
            )
            return service.summarize(request)

    def evaluate(self, candidate: str) -> Optional[RougeReport]:
        if not self.cfg.reference_summary_path:
            return None
        with self.stage("evaluate"):
            return evaluate_summary(candidate, read_reference(self.cfg.reference_summary_path))

    def chapter_rouge(self, summary: ChapterSummary) -> Optional[RougeReport]:
        if not self.cfg.chapter_reference_dir:
            return None
        path = Path(self.cfg.chapter_reference_dir) / f"chapter_{summary.chapter_index + 1}.txt"
        if not path.is_file():
            logger.debug(f"No chapter reference at {path}")
            return None
        with self.stage("evaluate"):
            return evaluate_summary(summary.text, read_reference(str(path)))

    def wordpiece_counts(self, summaries: List[ChapterSummary]) -> List[Optional[int]]:
        if not self.cfg.vocab_path:
            return [None] * len(summaries)
        with self.stage("extractive"):
            vocab = Vocabulary.load(self.cfg.vocab_path)
            return [len(tokenize_text(s.text, vocab, cased=self.cfg.cased)) for s in summaries]

    # ==================== RUNS ====================

    def run(self) -> BookSummary:
        doc = self.ingest()
        chapters = self.split(doc)
        summaries = self.summarize_chapters(chapters, self.cfg.strategy)
        wordpieces = self.wordpiece_counts(summaries)
        abstract = self.abstract(summaries)
        rouge_report = self.evaluate(abstract.summary)

        entries = [
            ChapterEntry(
                index=chapter.index,
                title=chapter.title,
                sentence_count=len(chapter.sentences),
                sentence_indices=[s.index for s in summary.sentences],
                summary=[s.text for s in summary.sentences],
                scores=summary.scores,
                warnings=summary.warnings,
                wordpieces=count,
                rouge=self.chapter_rouge(summary),
            )
            for chapter, summary, count in zip(chapters, summaries, wordpieces)
        ]
        logger.info(
            f"Summarized {doc.source_id}: {len(entries)} chapters, abstract via {abstract.mode.value}"
        )
        return BookSummary(
            source_id=doc.source_id,
            strategy=self.cfg.strategy,
            chapters=entries,
            abstract=abstract,
            rouge_report=rouge_report,
            timings=dict(self.timings),
        )

    def compare(self, strategies: Sequence[StrategyId]) -> StrategyComparison:
        if not self.cfg.reference_summary_path:
            raise ConfigError("strategy comparison needs reference_summary_path")
        doc = self.ingest()
        chapters = self.split(doc)
        reports: Dict[StrategyId, RougeReport] = {}
        for strategy in strategies:
            summaries = self.summarize_chapters(chapters, strategy)
            with self.stage("abstractive"):
                compiled = compile_chapter_summaries(summaries)
            reports[strategy] = self.evaluate(compiled)
            logger.info(f"{strategy.value}: ROUGE-1 F {reports[strategy].rouge1.f1:.4f}")
        return StrategyComparison(source_id=doc.source_id, reports=reports)


def run_book_pipeline(cfg: PipelineConfig, session: Optional[requests.Session] = None) -> BookSummary:
    return BookPipeline(cfg, session=session).run()


def compare_strategies(
    cfg: PipelineConfig,
    strategies: Optional[Sequence[StrategyId]] = None,
    session: Optional[requests.Session] = None,
) -> StrategyComparison:
    """ROUGE of the compiled extractive abstract for each strategy against one reference"""
    return BookPipeline(cfg, session=session).compare(list(strategies or StrategyId))
