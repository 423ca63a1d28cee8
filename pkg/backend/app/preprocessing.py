"""
Document ingestion
Loads PDF or plaintext, segments sentences with verbatim spans, and derives
lowercase feature tokens (stopwords, punctuation and optional stemming).
"""

import hashlib
import io
import logging
import re
import unicodedata
from pathlib import Path
from typing import FrozenSet, List, Optional, Protocol, Tuple

from nltk.stem import PorterStemmer

from app.exceptions import EmptyDocument, ExtractionFailed, UndecodableInput
from app.schemas.document import CleanDocument, InputFormat, RawDocument, Sentence

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_STOPWORDS_PATH = DATA_DIR / "stopwords_en.txt"

ABBREVIATIONS = frozenset({"mr.", "mrs.", "dr.", "st.", "vs.", "e.g.", "i.e."})

_TERMINAL = re.compile(r"[.!?]+[\"')\]”’]*")
_PARAGRAPH_BREAK = re.compile(r"\n[ \t\r\f\v]*\n")
_OPENERS = "\"'([“‘"

_stemmer = PorterStemmer()


# ==================== TOKENS ====================


def is_punctuation(ch: str) -> bool:
    """ASCII symbols count as punctuation, as do all Unicode P* characters"""
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def is_punct_token(token: str) -> bool:
    return bool(token) and all(is_punctuation(ch) for ch in token)


def pre_tokenize(text: str) -> List[str]:
    """Split on whitespace (dropped) and punctuation (each char kept as a token)"""
    tokens: List[str] = []
    current: List[str] = []
    for ch in text:
        if ch.isspace():
            if current:
                tokens.append("".join(current))
                current = []
        elif is_punctuation(ch):
            if current:
                tokens.append("".join(current))
                current = []
            tokens.append(ch)
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current))
    return tokens


def load_stopwords(path: Optional[str] = None) -> Tuple[FrozenSet[str], str]:
    """Read a stopword file; returns the word set and an id naming the list"""
    stopword_path = Path(path) if path else DEFAULT_STOPWORDS_PATH
    words = set()
    for line in stopword_path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words.add(line.lower())
    digest = hashlib.sha256("\n".join(sorted(words)).encode("utf-8")).hexdigest()[:12]
    list_id = f"{stopword_path.stem}:{digest}"
    logger.debug(f"Loaded {len(words)} stopwords from {stopword_path}")
    return frozenset(words), list_id


def clean_sentence(text: str, stopwords: FrozenSet[str], stem: bool = False) -> List[str]:
    """Lowercase feature tokens with stopwords and punctuation removed"""
    tokens = []
    for token in pre_tokenize(text):
        token = token.lower()
        if is_punct_token(token) or token in stopwords:
            continue
        if stem:
            token = _stemmer.stem(token)
            # a stem can collapse onto a stopword ("doing" -> "do")
            if token in stopwords:
                continue
        tokens.append(token)
    return tokens


# ==================== SEGMENTATION ====================


def _preceding_word(text: str, start: int, end: int) -> Tuple[str, int]:
    i = end
    while i > start and not text[i - 1].isspace():
        i -= 1
    return text[i:end], i


def _is_boundary(text: str, block_start: int, match: "re.Match", block_end: int) -> bool:
    end = match.end()
    rest = text[end:block_end]
    if not rest.strip():
        return True
    if not rest[0].isspace():
        return False
    nxt = rest.lstrip()
    if nxt and nxt[0] in _OPENERS:
        nxt = nxt[1:]
    if not nxt or not nxt[0].isupper():
        return False

    word, word_start = _preceding_word(text, block_start, match.start() + 1)
    if word.lower() in ABBREVIATIONS:
        return False
    # "12. Title" at the start of a line is a numbered heading, not a sentence end
    if match.group() == "." and word[:-1].isdigit() and len(word) <= 4:
        line_start = text.rfind("\n", block_start, word_start) + 1
        if not text[max(line_start, block_start):word_start].strip():
            return False
    return True


def _blocks(text: str) -> List[Tuple[int, int]]:
    blocks = []
    cursor = 0
    for m in _PARAGRAPH_BREAK.finditer(text):
        blocks.append((cursor, m.start()))
        cursor = m.end()
    blocks.append((cursor, len(text)))
    return blocks


def _span(text: str, start: int, end: int) -> Optional[Tuple[int, int]]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return (start, end) if start < end else None


def segment_sentences(text: str) -> List[Sentence]:
    """Split at terminal punctuation followed by an uppercase start, and at blank lines"""
    spans: List[Tuple[int, int]] = []
    for block_start, block_end in _blocks(text):
        cursor = block_start
        for match in _TERMINAL.finditer(text, block_start, block_end):
            if _is_boundary(text, block_start, match, block_end):
                span = _span(text, cursor, match.end())
                if span:
                    spans.append(span)
                cursor = match.end()
        span = _span(text, cursor, block_end)
        if span:
            spans.append(span)

    return [
        Sentence(index=i, text=text[s:e], clean_tokens=[], char_span=(s, e))
        for i, (s, e) in enumerate(spans)
    ]


# ==================== EXTRACTION ====================


class TextExtractionBackend(Protocol):
    """Turns PDF bytes into one string per page"""

    def extract_pages(self, payload: bytes) -> List[str]: ...


class PypdfBackend:
    """pypdf-based extraction; no OCR"""

    def extract_pages(self, payload: bytes) -> List[str]:
        from pypdf import PdfReader
        from pypdf.errors import PdfReadError

        try:
            reader = PdfReader(io.BytesIO(payload))
            if reader.is_encrypted:
                raise ExtractionFailed("PDF is encrypted")
            return [page.extract_text() or "" for page in reader.pages]
        except PdfReadError as e:
            raise ExtractionFailed(f"unreadable PDF: {e}")


def _normalize_breaks(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n").replace("\f", "\n")


def extract_text(doc: RawDocument, backend: Optional[TextExtractionBackend] = None) -> str:
    """Decode a RawDocument to text; PDF pages are joined by newlines"""
    if not doc.payload:
        raise EmptyDocument(f"{doc.source_id} is empty")

    if doc.format == InputFormat.TXT:
        try:
            return doc.payload.decode("utf-8")
        except UnicodeDecodeError as e:
            raise UndecodableInput(f"{doc.source_id} is not valid UTF-8: {e}")

    if backend is None:
        raise ExtractionFailed("no PDF extraction backend configured")
    try:
        pages = backend.extract_pages(doc.payload)
    except ExtractionFailed:
        raise
    except Exception as e:
        logger.error(f"PDF backend failed on {doc.source_id}: {e}")
        raise ExtractionFailed(f"PDF backend error: {e}")

    if not any(page.strip() for page in pages):
        raise ExtractionFailed(f"{doc.source_id} has no extractable text (image-only PDF?)")
    logger.info(f"Extracted {len(pages)} pages from {doc.source_id}")
    return "\n".join(_normalize_breaks(page) for page in pages)


def read_document(path: str, fmt: InputFormat) -> RawDocument:
    """Load a file from disk as a RawDocument"""
    file_path = Path(path)
    try:
        payload = file_path.read_bytes()
    except OSError as e:
        raise EmptyDocument(f"cannot read {path}: {e}")
    if not payload:
        raise EmptyDocument(f"{path} is empty")
    return RawDocument(source_id=file_path.name, format=fmt, payload=payload)


# ==================== PREPROCESSOR ====================


class TextPreprocessor:
    """Segmentation plus feature cleaning for one stopword list / stemming setting"""

    def __init__(self, stopwords_path: Optional[str] = None, stem: bool = False):
        self.stopwords, self.stopword_list_id = load_stopwords(stopwords_path)
        self.stem = stem

    def clean(self, text: str) -> List[str]:
        return clean_sentence(text, self.stopwords, stem=self.stem)

    def build_document(self, source_id: str, text: str) -> CleanDocument:
        sentences = [
            s.model_copy(update={"clean_tokens": self.clean(s.text)})
            for s in segment_sentences(text)
        ]
        if not sentences:
            raise EmptyDocument(f"{source_id} contains no sentences")
        logger.info(f"Segmented {source_id} into {len(sentences)} sentences")
        return CleanDocument(
            source_id=source_id,
            full_text=text,
            sentences=sentences,
            stopword_list_id=self.stopword_list_id,
        )

    def ingest(self, doc: RawDocument, backend: Optional[TextExtractionBackend] = None) -> CleanDocument:
        if backend is None and doc.format == InputFormat.PDF:
            backend = PypdfBackend()
        return self.build_document(doc.source_id, extract_text(doc, backend))
