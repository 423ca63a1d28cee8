import math

import pytest
import requests

from app.exceptions import AllEmpty, BadLengths, EmptyInput, RemoteUnavailable
from app.preprocessing import pre_tokenize, segment_sentences
from app.schemas.document import Sentence
from app.schemas.pipeline import AbstractiveConfig
from app.schemas.summary import (
    FALLBACK_MODEL_ID,
    AbstractiveRequest,
    AbstractMode,
    ChapterSummary,
    StrategyId,
)
from app.services.abstractive_service import (
    AbstractiveService,
    _truncate_tokens,
    compile_chapter_summaries,
    summarize_abstractive,
)

ENDPOINT = "http://summarizer.local"


@pytest.fixture
def long_text(book_builder):
    paragraphs = book_builder(seed=5, sentences_per_chapter=15).split("\n\n")
    return "\n\n".join(p for p in paragraphs if not p.startswith("Chapter"))


def _chapter_summary(index, sentences):
    return ChapterSummary(
        chapter_index=index,
        title=f"Chapter {index + 1}",
        strategy=StrategyId.CENTROID,
        sentences=[Sentence(index=i, text=t, char_span=(0, len(t))) for i, t in enumerate(sentences)],
        scores=[],
    )


# ==================== COMPILE ====================


def test_compile_orders_by_chapter_and_skips_empty():
    summaries = [
        _chapter_summary(2, ["Third one."]),
        _chapter_summary(0, ["First one.", "First two."]),
        _chapter_summary(1, []),
    ]
    assert compile_chapter_summaries(summaries) == "First one. First two.\n\nThird one."


def test_compile_all_empty():
    with pytest.raises(AllEmpty):
        compile_chapter_summaries([_chapter_summary(0, [])])
    with pytest.raises(AllEmpty):
        compile_chapter_summaries([])


# ==================== REMOTE ====================


def test_remote_summary_passes_through_verbatim(mock_session, response_factory):
    service_text = "  A paraphrase,\nwith odd   spacing and ünïcode.  "
    mock_session.post.return_value = response_factory(body={"summary": service_text, "model_id": "bart-large-cnn"})
    cfg = AbstractiveConfig(endpoint_url=ENDPOINT + "/")
    result = summarize_abstractive(AbstractiveRequest(text="Some text. More text."), cfg, session=mock_session)

    assert result.summary == service_text
    assert result.mode == AbstractMode.REMOTE
    assert result.model_id == "bart-large-cnn"
    args, kwargs = mock_session.post.call_args
    assert args[0] == ENDPOINT + "/summarize"
    assert kwargs["json"] == {"text": "Some text. More text.", "min_length": 64, "max_length": 256}
    assert kwargs["timeout"] == 60.0


def test_remote_model_id_defaults(mock_session, response_factory):
    mock_session.post.return_value = response_factory(body={"summary": "Short."})
    result = AbstractiveService(AbstractiveConfig(endpoint_url=ENDPOINT), session=mock_session).summarize(
        AbstractiveRequest(text="Some text.")
    )
    assert result.model_id == "unknown"


def test_timeout_without_fallback_raises(mock_session):
    mock_session.post.side_effect = requests.Timeout("timed out")
    cfg = AbstractiveConfig(endpoint_url=ENDPOINT, fallback=False)
    with pytest.raises(RemoteUnavailable):
        summarize_abstractive(AbstractiveRequest(text="Some text."), cfg, session=mock_session)


@pytest.mark.parametrize("status,body", [(500, None), (200, {"summary": ""}), (200, {"other": 1})])
def test_bad_responses_without_fallback_raise(mock_session, response_factory, status, body):
    mock_session.post.return_value = response_factory(status, body)
    cfg = AbstractiveConfig(endpoint_url=ENDPOINT, fallback=False)
    with pytest.raises(RemoteUnavailable):
        summarize_abstractive(AbstractiveRequest(text="Some text."), cfg, session=mock_session)


def test_timeout_with_fallback(mock_session, long_text):
    mock_session.post.side_effect = requests.Timeout("timed out")
    cfg = AbstractiveConfig(endpoint_url=ENDPOINT)
    result = summarize_abstractive(AbstractiveRequest(text=long_text), cfg, session=mock_session)
    assert result.mode == AbstractMode.FALLBACK
    assert result.model_id == FALLBACK_MODEL_ID
    assert mock_session.post.call_count == 1


def test_missing_endpoint_falls_back(mock_session):
    result = summarize_abstractive(AbstractiveRequest(text="One thing. Another thing."), AbstractiveConfig(), mock_session)
    assert result.mode == AbstractMode.FALLBACK
    mock_session.post.assert_not_called()


def test_offline_never_calls_service(mock_session):
    cfg = AbstractiveConfig(endpoint_url=ENDPOINT, offline=True)
    result = summarize_abstractive(AbstractiveRequest(text="One thing. Another thing."), cfg, session=mock_session)
    assert result.mode == AbstractMode.FALLBACK
    mock_session.post.assert_not_called()


# ==================== VALIDATION ====================


def test_bad_lengths():
    with pytest.raises(BadLengths):
        AbstractiveService(AbstractiveConfig(offline=True)).summarize(
            AbstractiveRequest(text="Text.", min_len=300, max_len=200)
        )
    with pytest.raises(BadLengths):
        AbstractiveService(AbstractiveConfig(offline=True)).summarize(
            AbstractiveRequest(text="Text.", min_len=0, max_len=200)
        )


def test_empty_text():
    with pytest.raises(EmptyInput):
        AbstractiveService(AbstractiveConfig(offline=True)).summarize(AbstractiveRequest(text="  \n "))


# ==================== FALLBACK ====================


@pytest.mark.parametrize("max_len", [50, 100, 256])
def test_fallback_is_extractive_and_bounded(long_text, max_len):
    service = AbstractiveService(AbstractiveConfig(offline=True))
    result = service.summarize(AbstractiveRequest(text=long_text, min_len=10, max_len=max_len))

    source = {s.text for s in segment_sentences(long_text)}
    picked = segment_sentences(result.summary)
    assert picked
    assert all(s.text in source for s in picked)
    assert len(picked) <= math.ceil(max_len / 25)
    assert len(pre_tokenize(result.summary)) <= max_len


def test_fallback_keeps_document_order(long_text):
    service = AbstractiveService(AbstractiveConfig(offline=True))
    result = service.summarize(AbstractiveRequest(text=long_text))
    positions = [long_text.index(s.text) for s in segment_sentences(result.summary)]
    assert positions == sorted(positions)


def test_fallback_is_deterministic(long_text):
    service = AbstractiveService(AbstractiveConfig(offline=True))
    request = AbstractiveRequest(text=long_text)
    assert service.summarize(request) == service.summarize(request)
    assert service.summarize(request).warnings == []


def test_fallback_truncates_single_long_sentence():
    text = "Word " * 40 + "end."
    result = AbstractiveService(AbstractiveConfig(offline=True)).summarize(
        AbstractiveRequest(text=text, min_len=5, max_len=10)
    )
    assert len(pre_tokenize(result.summary)) == 10
    assert text.startswith(result.summary)
    assert result.warnings == ["fallback sentence 0 exceeds 10 tokens; cut at a token boundary"]


def test_truncate_tokens():
    assert _truncate_tokens("one, two three.", 2) == "one,"
    assert _truncate_tokens("one two", 5) == "one two"
