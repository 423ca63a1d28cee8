"""
ROUGE-N (clipped n-gram overlap) and ROUGE-L (longest common subsequence)
"""

from collections import Counter
from typing import Dict, Iterable, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from app.exceptions import EmptyInput
from app.preprocessing import is_punct_token, pre_tokenize
from app.schemas.summary import RougeReport, RougeScore


class NGramCounts(BaseModel):
    """Multiset of n-grams"""

    model_config = ConfigDict(frozen=True)

    n: int
    counts: Dict[Tuple[str, ...], int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def metric_tokenize(text: str) -> List[str]:
    """Lowercase pre-tokens with pure punctuation dropped; no stemming or stopwords"""
    return [t for t in pre_tokenize(text.lower()) if not is_punct_token(t)]


def ngrams(tokens: Sequence[str], n: int) -> NGramCounts:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    grams = Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return NGramCounts(n=n, counts=dict(grams))


def rouge_n_tokens(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    cand = ngrams(candidate, n)
    ref = ngrams(reference, n)
    overlap = sum(min(count, ref.counts.get(gram, 0)) for gram, count in cand.counts.items())
    precision = overlap / cand.total if cand.total else 0.0
    recall = overlap / ref.total if ref.total else 0.0
    return RougeScore.from_pr(precision, recall)


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    return rouge_n_tokens(metric_tokenize(candidate), metric_tokenize(reference), n)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Dynamic-programming LCS length in O(|a|*|b|) time, O(|b|) memory"""
    if not a or not b:
        return 0
    row = [0] * (len(b) + 1)
    for x in a:
        prev_diag = 0
        for j, y in enumerate(b, start=1):
            above = row[j]
            row[j] = prev_diag + 1 if x == y else max(above, row[j - 1])
            prev_diag = above
    return row[-1]


def rouge_l_tokens(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    lcs = lcs_length(candidate, reference)
    precision = lcs / len(candidate) if candidate else 0.0
    recall = lcs / len(reference) if reference else 0.0
    return RougeScore.from_pr(precision, recall)


def rouge_l(candidate: str, reference: str) -> RougeScore:
    return rouge_l_tokens(metric_tokenize(candidate), metric_tokenize(reference))


def evaluate_summary(candidate: str, reference: str, extra_n: Iterable[int] = ()) -> RougeReport:
    """ROUGE-1, ROUGE-2 and ROUGE-L rows, plus any extra ROUGE-N orders"""
    cand = metric_tokenize(candidate)
    ref = metric_tokenize(reference)
    if not cand:
        raise EmptyInput("candidate summary has no tokens")
    if not ref:
        raise EmptyInput("reference summary has no tokens")
    extra = {f"rouge{n}": rouge_n_tokens(cand, ref, n) for n in sorted(set(extra_n)) if n not in (1, 2)}
    return RougeReport(
        rouge1=rouge_n_tokens(cand, ref, 1),
        rouge2=rouge_n_tokens(cand, ref, 2),
        rougeL=rouge_l_tokens(cand, ref),
        extra=extra,
    )
