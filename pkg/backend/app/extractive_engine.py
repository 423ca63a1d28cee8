"""
Extractive Summarization Engine
Centroid (embedding), Luhn, TextRank, LexRank and LSA sentence scoring,
followed by budgeted selection with optional MMR redundancy control
"""

import logging
import math
import warnings
from collections import Counter
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy import linalg

from app.exceptions import ConvergenceFailure, DegenerateMatrix, DimensionMismatch
from app.schemas.document import Chapter, Sentence
from app.schemas.pipeline import (
    EmbedderConfig,
    LexRankParams,
    LsaParams,
    LuhnParams,
    PageRankParams,
    StrategyParams,
)
from app.schemas.summary import (
    ChapterSummary,
    EmbeddingVector,
    Ranking,
    ScoredSentence,
    StrategyId,
    SummaryBudget,
)
from app.services.embedding_service import EmbeddingService

logger = logging.getLogger(__name__)

WEIGHT_DECIMALS = 12
LSA_TIE_TOL = 1e-9


# ==================== RANKING ====================


def assign_ranks(weights: Sequence[float], converged: bool = True) -> Ranking:
    """Rank 1 = heaviest; equal weights rank the lower index first"""
    rounded = [round(max(0.0, float(w)), WEIGHT_DECIMALS) + 0.0 for w in weights]
    order = sorted(range(len(rounded)), key=lambda i: (-rounded[i], i))
    ranks = [0] * len(rounded)
    for position, i in enumerate(order, start=1):
        ranks[i] = position
    return Ranking(
        (ScoredSentence(sentence_index=i, weight=rounded[i], rank=ranks[i]) for i in range(len(rounded))),
        converged=converged,
    )


def _power_iteration(weights: np.ndarray, damping: float, max_iter: int) -> np.ndarray:
    """Same update networkx runs; returns the iterate with the smallest step"""
    n = weights.shape[0]
    out_strength = weights.sum(axis=1)
    dangling = out_strength == 0
    transition = np.zeros_like(weights, dtype=np.float64)
    transition[~dangling] = weights[~dangling] / out_strength[~dangling, None]
    redistribute = (~dangling).astype(np.float64) / float((~dangling).sum())

    rank = np.full(n, 1.0 / n)
    best, best_err = rank, math.inf
    for _ in range(max_iter):
        new_rank = (1.0 - damping) / n + damping * (rank @ transition + rank[dangling].sum() * redistribute)
        err = float(np.abs(new_rank - rank).sum())
        rank = new_rank
        if err < best_err:
            best, best_err = rank, err
    return best


def pagerank(graph: nx.Graph, damping: float, tol: float, max_iter: int) -> Tuple[np.ndarray, bool]:
    """
    Weighted PageRank over nodes 0..n-1 by networkx power iteration.
    Nodes with no edges hand their mass to the connected nodes, so an
    isolated node keeps exactly (1 - damping) / n. Convergence means an L1
    step below n * tol. On failure the best iterate is returned instead.
    """
    n = graph.number_of_nodes()
    nodes = list(range(n))
    connected = [v for v in nodes if graph.degree(v, weight="weight") > 0]
    if not connected:
        return np.full(n, 1.0 / n), True
    try:
        scores = nx.pagerank(
            graph,
            alpha=damping,
            tol=tol,
            max_iter=max_iter,
            weight="weight",
            dangling={v: 1.0 for v in connected},
        )
    except nx.PowerIterationFailedConvergence:
        # networkx drops the last iterate when it gives up
        matrix = nx.to_numpy_array(graph, nodelist=nodes, weight="weight", dtype=np.float64)
        return _power_iteration(matrix, damping, max_iter), False
    return np.array([scores[v] for v in nodes], dtype=np.float64), True


def _pagerank_ranking(graph: nx.Graph, params: PageRankParams, label: str) -> Ranking:
    weights, converged = pagerank(graph, params.damping, params.tol, params.max_iter)
    if not converged:
        message = f"{label} PageRank did not converge in {params.max_iter} iterations"
        logger.warning(message)
        warnings.warn(message, ConvergenceFailure, stacklevel=3)
    return assign_ranks(weights, converged=converged)


# ==================== SCORERS ====================


def score_centroid(embeddings: List[EmbeddingVector]) -> Ranking:
    """Cosine of each embedding to the normalized mean embedding, floored at 0"""
    if not embeddings:
        raise ValueError("score_centroid needs at least one embedding")
    dims = {e.dim for e in embeddings}
    if len(dims) != 1 or any(e.values.shape != (e.dim,) for e in embeddings):
        raise DimensionMismatch(f"embeddings have mixed dimensions {sorted(dims)}")

    matrix = np.vstack([e.values for e in embeddings]).astype(np.float64)
    centroid = matrix.mean(axis=0)
    centroid_norm = np.linalg.norm(centroid)
    if centroid_norm == 0:
        return assign_ranks([0.0] * len(embeddings))
    centroid /= centroid_norm
    norms = np.linalg.norm(matrix, axis=1)
    norms[norms == 0] = 1.0
    cosines = (matrix @ centroid) / norms
    return assign_ranks(np.maximum(cosines, 0.0))


def significant_terms(sentences: List[Sentence], top_frac: float) -> set:
    """Most frequent terms (count >= 2), top_frac of the distinct vocabulary"""
    freq = Counter(t for s in sentences for t in s.clean_tokens)
    if not freq:
        return set()
    n_keep = max(1, math.ceil(top_frac * len(freq)))
    candidates = sorted((t for t, c in freq.items() if c >= 2), key=lambda t: (-freq[t], t))
    return set(candidates[:n_keep])


def luhn_sentence_score(tokens: List[str], significant: set, gap: int) -> float:
    """Best significant-word cluster: count^2 / window length"""
    positions = [i for i, t in enumerate(tokens) if t in significant]
    if not positions:
        return 0.0
    best = 0.0
    start = prev = positions[0]
    count = 1
    for p in positions[1:]:
        if p - prev - 1 > gap:
            best = max(best, count * count / (prev - start + 1))
            start, count = p, 0
        count += 1
        prev = p
    return max(best, count * count / (prev - start + 1))


def luhn_boost(position: int) -> float:
    return 1.0 + 1.0 / (1.0 + position)


def score_luhn(chapter: Chapter, params: Optional[LuhnParams] = None) -> Ranking:
    params = params or LuhnParams()
    significant = significant_terms(chapter.sentences, params.top_frac)
    weights = []
    for position, sentence in enumerate(chapter.sentences):
        score = luhn_sentence_score(sentence.clean_tokens, significant, params.gap)
        if params.positional:
            score *= luhn_boost(position)
        weights.append(score)
    return assign_ranks(weights)


def textrank_similarity(a: List[str], b: List[str]) -> float:
    denom = math.log(1 + len(a)) + math.log(1 + len(b))
    if denom == 0:
        return 0.0
    return len(set(a) & set(b)) / denom


def score_textrank(chapter: Chapter, params: Optional[PageRankParams] = None) -> Ranking:
    params = params or PageRankParams()
    tokens = [s.clean_tokens for s in chapter.sentences]
    n = len(tokens)
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            weight = textrank_similarity(tokens[i], tokens[j])
            if weight > 0:
                graph.add_edge(i, j, weight=weight)
    return _pagerank_ranking(graph, params, "TextRank")


def tfidf_matrix(token_lists: List[List[str]]) -> np.ndarray:
    """Sentence x term TF-IDF with idf = ln(n / (1 + df)) + 1"""
    n = len(token_lists)
    vocab = sorted({t for tokens in token_lists for t in tokens})
    if not vocab:
        return np.zeros((n, 0))
    column = {t: j for j, t in enumerate(vocab)}
    tf = np.zeros((n, len(vocab)), dtype=np.float64)
    for i, tokens in enumerate(token_lists):
        for t in tokens:
            tf[i, column[t]] += 1.0
    df = (tf > 0).sum(axis=0)
    idf = np.log(n / (1.0 + df)) + 1.0
    return tf * idf


def score_lexrank(chapter: Chapter, params: Optional[LexRankParams] = None) -> Ranking:
    params = params or LexRankParams()
    matrix = tfidf_matrix([s.clean_tokens for s in chapter.sentences])
    n = matrix.shape[0]
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    unit = matrix / safe[:, None]
    cosines = unit @ unit.T

    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if cosines[i, j] >= params.threshold:
                graph.add_edge(i, j, weight=1.0)
    return _pagerank_ranking(graph, params, "LexRank")


def score_lsa(chapter: Chapter, params: Optional[LsaParams] = None) -> Ranking:
    """Gong-Liu selection over the thin SVD of the term x sentence count matrix"""
    params = params or LsaParams()
    token_lists = [s.clean_tokens for s in chapter.sentences]
    vocab = sorted({t for tokens in token_lists for t in tokens})
    if not vocab:
        raise DegenerateMatrix(f"chapter {chapter.index} has no terms for LSA")

    row = {t: i for i, t in enumerate(vocab)}
    counts = np.zeros((len(vocab), len(token_lists)), dtype=np.float64)
    for j, tokens in enumerate(token_lists):
        for t in tokens:
            counts[row[t], j] += 1.0

    _, sigma, vt = linalg.svd(counts, full_matrices=False)
    rank_tol = max(counts.shape) * np.finfo(np.float64).eps * sigma[0]
    rank = int((sigma > rank_tol).sum())

    weights = np.zeros(len(token_lists))
    selected: set = set()
    for topic in range(min(params.k_topics, rank)):
        loadings = np.abs(vt[topic])
        open_ = [j for j in range(len(token_lists)) if j not in selected]
        if not open_:
            break
        top = max(loadings[j] for j in open_)
        pick = min(j for j in open_ if loadings[j] >= top - LSA_TIE_TOL)
        selected.add(pick)
        weights[pick] = sigma[topic]
    return assign_ranks(weights)


# ==================== SELECTION ====================


def _mmr_order(ranked: List[int], weights: Dict[int, float], vectors: np.ndarray, k: int, mmr_lambda: float) -> List[int]:
    """Greedy MMR; ties go to the better-ranked sentence"""
    order = np.asarray(ranked, dtype=np.int64)
    ordered = vectors[order]
    relevance = np.array([weights[j] for j in ranked], dtype=np.float64)
    # max similarity to anything picked so far; undefined until the first pick
    redundancy = np.zeros(len(order))
    available = np.ones(len(order), dtype=bool)
    picked: List[int] = []
    for step in range(min(k, len(order))):
        scores = np.where(available, mmr_lambda * relevance - (1.0 - mmr_lambda) * redundancy, -np.inf)
        best = int(np.argmax(scores))
        picked.append(int(order[best]))
        available[best] = False
        similarity = ordered @ ordered[best]
        redundancy = similarity if step == 0 else np.maximum(redundancy, similarity)
    return picked


def select_positions(
    scored: List[ScoredSentence],
    n: int,
    budget: SummaryBudget,
    embeddings: Optional[List[EmbeddingVector]] = None,
    mmr_lambda: float = 0.7,
) -> List[int]:
    """Chapter positions to keep, ascending"""
    if len(scored) != n or {s.sentence_index for s in scored} != set(range(n)):
        raise ValueError("scores must cover every chapter sentence exactly once")
    k = budget.target(n)
    ranked = [s.sentence_index for s in sorted(scored, key=lambda s: s.rank)]

    if embeddings is not None:
        if len(embeddings) != n:
            raise DimensionMismatch(f"{len(embeddings)} embeddings for {n} sentences")
        vectors = np.vstack([e.values for e in embeddings]).astype(np.float64)
        norms = np.linalg.norm(vectors, axis=1)
        vectors /= np.where(norms == 0, 1.0, norms)[:, None]
        weights = {s.sentence_index: s.weight for s in scored}
        picked = _mmr_order(ranked, weights, vectors, k, mmr_lambda)
    else:
        picked = ranked[:k]
    return sorted(picked)


def select(
    scored: List[ScoredSentence],
    chapter: Chapter,
    budget: SummaryBudget,
    embeddings: Optional[List[EmbeddingVector]] = None,
    mmr_lambda: float = 0.7,
) -> List[Sentence]:
    """Top sentences by rank (or MMR), returned in document order"""
    positions = select_positions(scored, len(chapter.sentences), budget, embeddings, mmr_lambda)
    return [chapter.sentences[p] for p in positions]


# ==================== ENGINE ====================


class ExtractiveEngine:
    """
    Strategy dispatch for chapter summaries.

    Scorer errors propagate unless degenerate_fallback is set, in which case a
    chapter with no scorable terms keeps document order and says so in its warnings.
    """

    def __init__(
        self,
        params: Optional[StrategyParams] = None,
        embedder: Optional[EmbeddingService] = None,
        degenerate_fallback: bool = False,
    ):
        self.params = params or StrategyParams()
        self.degenerate_fallback = degenerate_fallback
        self.embedder = embedder or EmbeddingService(EmbedderConfig())
        self.scorers: Dict[StrategyId, Callable[[Chapter], Ranking]] = {
            StrategyId.LUHN: lambda c: score_luhn(c, self.params.luhn),
            StrategyId.TEXTRANK: lambda c: score_textrank(c, self.params.textrank),
            StrategyId.LEXRANK: lambda c: score_lexrank(c, self.params.lexrank),
            StrategyId.LSA: lambda c: score_lsa(c, self.params.lsa),
        }

    def summarize(self, chapter: Chapter, strategy: StrategyId, budget: SummaryBudget) -> ChapterSummary:
        if not chapter.sentences:
            raise ValueError(f"chapter {chapter.index} is empty")

        notes: List[str] = []
        embeddings = None
        if strategy == StrategyId.CENTROID:
            embeddings = self.embedder.embed_sentences(chapter.sentences)
            ranking = score_centroid(embeddings)
        else:
            try:
                ranking = self.scorers[strategy](chapter)
            except DegenerateMatrix as e:
                if not self.degenerate_fallback:
                    raise
                logger.warning(f"{e}; keeping document order")
                notes.append(f"{strategy.value}: no terms to score, kept document order")
                ranking = assign_ranks([0.0] * len(chapter.sentences))

        if not ranking.converged:
            notes.append(f"{strategy.value}: PageRank did not converge")
        positions = select_positions(
            ranking, len(chapter.sentences), budget, embeddings, self.params.mmr_lambda
        )
        return ChapterSummary(
            chapter_index=chapter.index,
            title=chapter.title,
            strategy=strategy,
            sentences=[chapter.sentences[p] for p in positions],
            scores=[ranking[p] for p in positions],
            converged=ranking.converged,
            warnings=notes,
        )


def summarize_chapter(
    chapter: Chapter,
    strategy: StrategyId,
    budget: SummaryBudget,
    params: Optional[StrategyParams] = None,
    embedder: Optional[EmbeddingService] = None,
) -> ChapterSummary:
    return ExtractiveEngine(params, embedder).summarize(chapter, strategy, budget)
