import random

import pytest
from pydantic import ValidationError

from app.chapters import FRONT_MATTER_TITLE, HeadingMatcher, split_chapters
from app.exceptions import EmptyDocument
from app.schemas.document import CleanDocument, HeadingRules, Sentence

TWO_CHAPTERS = (
    "Chapter 1\n\nAnna walked home. The road was long. Rain fell.\n\n"
    "Chapter 2\n\nMorning came. The lamp was out. Anna slept."
)


def test_no_headings_gives_one_chapter(make_document):
    doc = make_document("It rained. We stayed in. Nobody came.")
    chapters = split_chapters(doc)
    assert len(chapters) == 1
    assert chapters[0].title == "Chapter 1"
    assert chapters[0].sentences == doc.sentences


def test_two_chapters(make_document):
    chapters = split_chapters(make_document(TWO_CHAPTERS))
    assert [c.title for c in chapters] == ["Chapter 1", "Chapter 2"]
    assert [c.index for c in chapters] == [0, 1]
    assert [len(c.sentences) for c in chapters] == [4, 4]
    assert chapters[1].sentences[0].text == "Chapter 2"


def test_short_chapter_merges_into_previous(make_document):
    text = "Chapter 1\n\nOne here. Two here. Three here.\n\nChapter 2\n\nOnly one."
    chapters = split_chapters(make_document(text))
    assert len(chapters) == 1
    assert len(chapters[0].sentences) == 6


def test_short_front_matter_merges_forward(make_document):
    text = "A preface.\n\nChapter 1\n\nOne here. Two here. Three here."
    chapters = split_chapters(make_document(text))
    assert len(chapters) == 1
    assert chapters[0].title == "Chapter 1"
    assert chapters[0].sentences[0].text == "A preface."


def test_long_front_matter_is_kept(make_document):
    text = "Some notes. More notes. Final notes.\n\nChapter 1\n\nOne here. Two here. Three here."
    chapters = split_chapters(make_document(text))
    assert [c.title for c in chapters] == [FRONT_MATTER_TITLE, "Chapter 1"]


def test_roman_numeral_and_part_headings(make_document):
    text = "PART IV\n\nOne here. Two here. Three here.\n\nBook ii\n\nFour here. Five here. Six here."
    chapters = split_chapters(make_document(text))
    assert [c.title for c in chapters] == ["PART IV", "Book ii"]


def test_numbered_heading(make_document):
    text = "1. Beginnings\nThe town was small. It had a mill. The mill was old."
    chapters = split_chapters(make_document(text))
    assert chapters[0].title == "1. Beginnings"


def test_all_caps_heading(make_document):
    text = "THE BEGINNING\n\nOne here. Two here. Three here.\n\nTHE END\n\nFour here. Five here. Six here."
    chapters = split_chapters(make_document(text))
    assert [c.title for c in chapters] == ["THE BEGINNING", "THE END"]


def test_shouted_sentence_mid_line_is_not_a_heading(make_document):
    text = (
        "Chapter 1\n\nThe sailor walked home. The rain came down hard. He yelled. STOP IT NOW. "
        "Then he left the harbor. More rain fell. The night came."
    )
    chapters = split_chapters(make_document(text))
    assert len(chapters) == 1
    assert chapters[0].title == "Chapter 1"


def test_chapter_word_mid_line_is_not_a_heading(make_document):
    text = (
        "Chapter 1\n\nShe opened the book. She read until dark. She closed the book. "
        "Chapter 2 would wait until morning. The lamp went out. The house was quiet."
    )
    chapters = split_chapters(make_document(text))
    assert [c.title for c in chapters] == ["Chapter 1"]
    assert len(chapters[0].sentences) == 7


def test_all_caps_rule_can_be_disabled(make_document):
    text = "THE BEGINNING\n\nOne here. Two here. Three here."
    rules = HeadingRules(all_caps_max_len=None)
    chapters = split_chapters(make_document(text), rules)
    assert len(chapters) == 1
    assert chapters[0].title == "Chapter 1"


def test_single_capital_letter_is_not_a_heading():
    matcher = HeadingMatcher(HeadingRules())
    assert matcher.heading_title(Sentence(index=0, text="I.", char_span=(0, 2))) is None


def test_custom_patterns(make_document):
    rules = HeadingRules(patterns=[r"^scene\s+\d+"], min_chapter_sentences=1, all_caps_max_len=None)
    text = "Scene 1\n\nThey met.\n\nScene 2\n\nThey parted."
    chapters = split_chapters(make_document(text), rules)
    assert [c.title for c in chapters] == ["Scene 1", "Scene 2"]


def test_invalid_heading_pattern():
    with pytest.raises(ValidationError):
        HeadingRules(patterns=["(unclosed"])
    with pytest.raises(ValidationError):
        HeadingRules(patterns=[])


def test_empty_document():
    doc = CleanDocument(source_id="empty", full_text="", sentences=[], stopword_list_id="x")
    with pytest.raises(EmptyDocument):
        split_chapters(doc)


def test_partition_preserves_every_sentence(make_document, document_factory):
    rng = random.Random(11)
    for _ in range(200):
        doc = make_document(document_factory(rng, with_headings=rng.random() < 0.8))
        chapters = split_chapters(doc)
        indices = [s.index for c in chapters for s in c.sentences]
        assert indices == list(range(len(doc.sentences)))
        assert all(c.sentences for c in chapters)
        assert [c.index for c in chapters] == list(range(len(chapters)))


def test_heading_free_random_books_give_one_chapter(make_document, document_factory):
    rng = random.Random(5)
    for _ in range(50):
        doc = make_document(document_factory(rng, with_headings=False))
        assert len(split_chapters(doc)) == 1


def test_synthetic_book_has_nine_chapters(make_document, book_builder):
    doc = make_document(book_builder(sentences_per_chapter=20))
    chapters = split_chapters(doc)
    assert len(chapters) == 9
    assert chapters[0].title == "Chapter 1: Harbor Lights"
    assert all(len(c.sentences) == 21 for c in chapters)
