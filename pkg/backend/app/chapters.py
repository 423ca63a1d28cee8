"""
Chapter segmentation by heading detection
"""

import logging
import re
from typing import List, Optional, Tuple

from app.exceptions import EmptyDocument
from app.schemas.document import Chapter, CleanDocument, HeadingRules, Sentence

logger = logging.getLogger(__name__)

FRONT_MATTER_TITLE = "Front matter"
MAX_TITLE_CHARS = 80


class HeadingMatcher:
    """Compiled form of HeadingRules"""

    def __init__(self, rules: HeadingRules):
        self.rules = rules
        self.patterns = [re.compile(p, re.IGNORECASE) for p in rules.patterns]

    def _is_all_caps(self, line: str) -> bool:
        limit = self.rules.all_caps_max_len
        if limit is None or not line or len(line) > limit:
            return False
        letters = [c for c in line if c.isalpha()]
        return len(letters) >= 2 and all(c.isupper() for c in letters)

    def heading_title(self, sentence: Sentence, full_text: Optional[str] = None) -> Optional[str]:
        """Heading text if the sentence opens a chapter, else None.

        With the source text given, only a sentence that starts a line can be a heading,
        and the all-caps rule looks at that whole source line.
        """
        first_line = sentence.text.split("\n", 1)[0].strip()
        line = first_line
        if full_text is not None:
            start = sentence.char_span[0]
            before = full_text[:start].rstrip(" \t")
            if before and not before.endswith("\n"):
                return None
            end = full_text.find("\n", start)
            line = full_text[start:end if end != -1 else len(full_text)].strip()
        if any(p.match(sentence.text) for p in self.patterns) or self._is_all_caps(line):
            return first_line[:MAX_TITLE_CHARS]
        return None


def _merge_short(groups: List[Tuple[str, List[Sentence]]], min_sentences: int) -> List[Tuple[str, List[Sentence]]]:
    merged: List[Tuple[str, List[Sentence]]] = []
    pending: List[Sentence] = []
    for title, sentences in groups:
        sentences = pending + sentences
        pending = []
        if len(sentences) >= min_sentences:
            merged.append((title, sentences))
        elif merged:
            logger.warning(f"Merging short chapter {title!r} ({len(sentences)} sentences) into previous")
            merged[-1][1].extend(sentences)
        else:
            # nothing before it: carry into the next chapter
            pending = sentences
    if pending:
        if merged:
            merged[-1][1].extend(pending)
        else:
            merged.append((groups[0][0], pending))
    return merged


def split_chapters(doc: CleanDocument, rules: Optional[HeadingRules] = None) -> List[Chapter]:
    """Ordered partition of the document's sentences into chapters"""
    if not doc.sentences:
        raise EmptyDocument(f"{doc.source_id} has no sentences to split")

    matcher = HeadingMatcher(rules or HeadingRules())
    groups: List[Tuple[str, List[Sentence]]] = []
    for sentence in doc.sentences:
        title = matcher.heading_title(sentence, doc.full_text)
        if title is not None:
            groups.append((title, [sentence]))
        elif groups:
            groups[-1][1].append(sentence)
        else:
            groups.append((FRONT_MATTER_TITLE, [sentence]))

    if len(groups) == 1 and groups[0][0] == FRONT_MATTER_TITLE:
        logger.info(f"No chapter headings found in {doc.source_id}; using one chapter")
        return [Chapter(index=0, title="Chapter 1", sentences=list(doc.sentences))]

    merged = _merge_short(groups, matcher.rules.min_chapter_sentences)
    chapters = [
        Chapter(index=i, title=title or f"Chapter {i + 1}", sentences=sentences)
        for i, (title, sentences) in enumerate(merged)
    ]
    logger.info(f"Split {doc.source_id} into {len(chapters)} chapters")
    return chapters
