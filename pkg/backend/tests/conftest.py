import io
import random
from pathlib import Path
from typing import Callable, List, Optional
from unittest.mock import Mock

import pytest
import requests

from app.preprocessing import TextPreprocessor
from app.schemas.document import Chapter

GOLDEN_DIR = Path(__file__).parent / "goldens"

COMMON_WORDS = [
    "river", "stone", "light", "morning", "window", "garden", "letter", "voice", "silence",
    "road", "winter", "summer", "market", "bridge", "lamp", "shadow", "table", "cupboard",
    "coat", "hill", "field", "village", "harbor", "ship", "rain", "wind", "door", "house",
    "friend", "brother", "sister", "mother", "father", "pilot", "stranger", "doctor",
    "walked", "waited", "listened", "remembered", "carried", "opened", "closed", "found",
    "lost", "answered", "watched", "followed", "believed", "noticed", "quiet", "bright",
    "old", "young", "careful", "tired", "sudden", "distant", "narrow", "heavy", "warm",
    "cold", "green", "grey", "slowly", "quickly", "again", "together", "alone", "nearly",
    "the", "a", "and", "of", "to", "in", "on", "with", "for", "at", "by", "from", "was",
    "had", "she", "he", "they", "we", "it", "that", "this", "there", "but", "when",
]

CHAPTER_TOPICS = [
    ("Harbor Lights", ["sailor", "anchor", "tide", "lighthouse", "gull", "net", "dock", "salt"]),
    ("The Orchard", ["apple", "blossom", "ladder", "basket", "branch", "harvest", "bee", "pear"]),
    ("Railway Nights", ["train", "platform", "ticket", "whistle", "carriage", "track", "station", "smoke"]),
    ("The Workshop", ["hammer", "timber", "chisel", "bench", "sawdust", "nail", "plank", "varnish"]),
    ("Letters Home", ["envelope", "stamp", "ink", "postman", "signature", "parcel", "reply", "address"]),
    ("The Fever", ["illness", "medicine", "nurse", "bandage", "fever", "recovery", "ward", "pulse"]),
    ("Snowfall", ["snow", "sled", "frost", "fireplace", "blanket", "icicle", "mitten", "chimney"]),
    ("The Fair", ["carousel", "lantern", "ribbon", "music", "dancer", "tent", "juggler", "prize"]),
    ("Homecoming", ["return", "welcome", "memory", "photograph", "reunion", "embrace", "porch", "evening"]),
]


def _sentence(rng: random.Random, topic_words: List[str]) -> str:
    n = rng.randint(10, 20)
    words = [rng.choice(topic_words) if rng.random() < 0.35 else rng.choice(COMMON_WORDS) for _ in range(n)]
    text = " ".join(words)
    return text[0].upper() + text[1:] + "."


def build_book(seed: int = 7, sentences_per_chapter: int = 370, paragraph: int = 6) -> str:
    """Nine-chapter synthetic book, ~50k words at the default size"""
    rng = random.Random(seed)
    parts = []
    for number, (title, topic_words) in enumerate(CHAPTER_TOPICS, start=1):
        parts.append(f"Chapter {number}: {title}")
        sentences = [_sentence(rng, topic_words) for _ in range(sentences_per_chapter)]
        for i in range(0, len(sentences), paragraph):
            parts.append(" ".join(sentences[i : i + paragraph]))
    return "\n\n".join(parts) + "\n"


def random_document(rng: random.Random, max_chapters: int = 4, with_headings: bool = True) -> str:
    """Small random book; headings optional"""
    parts = []
    for number in range(1, rng.randint(1, max_chapters) + 1):
        if with_headings:
            parts.append(f"Chapter {number}")
        topic = CHAPTER_TOPICS[rng.randrange(len(CHAPTER_TOPICS))][1]
        parts.append(" ".join(_sentence(rng, topic) for _ in range(rng.randint(1, 12))))
    return "\n\n".join(parts)


def render_pdf(pages: List[List[str]], encrypt: Optional[str] = None) -> bytes:
    """One PDF page per list of text lines"""
    from reportlab.lib.pagesizes import letter
    from reportlab.pdfgen import canvas

    buffer = io.BytesIO()
    pdf = canvas.Canvas(buffer, pagesize=letter, encrypt=encrypt)
    for lines in pages:
        y = 720
        for line in lines:
            pdf.drawString(72, y, line)
            y -= 16
        pdf.showPage()
    pdf.save()
    return buffer.getvalue()


def make_response(status: int = 200, body=None, json_error: bool = False) -> Mock:
    response = Mock()
    response.status_code = status
    if json_error:
        response.json.side_effect = ValueError("not JSON")
    else:
        response.json.return_value = body
    return response


# ==================== OPTIONS ====================


def pytest_addoption(parser):
    parser.addoption(
        "--update-goldens",
        action="store_true",
        default=False,
        help="Rewrite pinned reports under tests/goldens instead of comparing",
    )


@pytest.fixture
def update_goldens(request) -> bool:
    return request.config.getoption("--update-goldens")


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN_DIR


# ==================== FIXTURES ====================


@pytest.fixture(scope="session")
def preprocessor() -> TextPreprocessor:
    return TextPreprocessor()


@pytest.fixture
def make_document(preprocessor) -> Callable:
    def _make(text: str, source_id: str = "test.txt"):
        return preprocessor.build_document(source_id, text)

    return _make


@pytest.fixture
def make_chapter(make_document) -> Callable:
    def _make(text: str, index: int = 0, title: str = "Chapter 1") -> Chapter:
        doc = make_document(text)
        return Chapter(index=index, title=title, sentences=doc.sentences)

    return _make


@pytest.fixture
def mock_session() -> Mock:
    session = Mock(spec=requests.Session)
    session.post.return_value = make_response(500)
    return session


@pytest.fixture
def response_factory() -> Callable:
    return make_response


@pytest.fixture
def book_builder() -> Callable:
    return build_book


@pytest.fixture
def document_factory() -> Callable:
    return random_document


@pytest.fixture
def pdf_factory() -> Callable:
    return render_pdf


@pytest.fixture(scope="session")
def book_text() -> str:
    return build_book()


@pytest.fixture
def book_file(tmp_path, book_text) -> Path:
    path = tmp_path / "synthetic_book.txt"
    path.write_text(book_text, encoding="utf-8")
    return path


@pytest.fixture
def small_book_file(tmp_path) -> Path:
    path = tmp_path / "small_book.txt"
    path.write_text(build_book(seed=3, sentences_per_chapter=12), encoding="utf-8")
    return path


@pytest.fixture
def reference_file(tmp_path) -> Path:
    path = tmp_path / "reference.txt"
    path.write_text(
        "The sailor watched the tide from the lighthouse. "
        "The apple harvest filled every basket in the orchard. "
        "A train whistle sounded at the station and the family returned home.",
        encoding="utf-8",
    )
    return path
