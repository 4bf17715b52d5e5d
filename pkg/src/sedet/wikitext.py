"""Parse wiki markup pages into listing records.

Extracts enumerations (lines starting with ``*`` or ``#``) and tables
(``{|...|}`` blocks) together with the heading chain that encloses them.
Internal links become candidate entity mentions.  Listings with fewer than
three items are dropped.

Markup stripping is deliberately minimal but deterministic: HTML comments,
``<ref>`` elements and templates are removed before anything else; inside
cell text, external links keep only their display text, remaining HTML tags
are dropped (their inner text kept), bold/italic quote runs are removed, and
character entities are decoded.  Template expansion is out of scope, so any
content inside an unexpanded template is excluded.

Parsing is a pure function of the page text: the same wikitext always yields
byte-identical records, and pages can be parsed in parallel.
"""
from __future__ import annotations

import bz2
import html
import logging
import re
import statistics
from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional
from xml.etree import ElementTree

from sklearn.base import BaseEstimator, TransformerMixin

from .types import EntityMention, Listing, ListingContext, ListingItem, ListingKind

logger = logging.getLogger(__name__)

_COMMENT_RE = re.compile(r"<!--.*?-->", re.S)
_REF_RE = re.compile(r"<ref[^<>]*?/>|<ref[^<>]*?>.*?</ref>", re.S | re.I)
_HEADING_RE = re.compile(r"^(={2,6})\s*(.+?)\s*\1\s*$")
_LIST_RE = re.compile(r"^([*#]+)\s*(.*)$")
_EXT_LINK_RE = re.compile(r"\[(?:https?|ftp)://[^\s\]]*(?:\s+([^\]]*))?\]", re.I)
_TAG_RE = re.compile(r"</?[A-Za-z][^<>]*>")
_QUOTES_RE = re.compile(r"'{2,}")
_SPAN_ATTR_RE = re.compile(r"(row|col)span\s*=\s*\"?(\d+)", re.I)
_WORD_RE = re.compile(r"\S+")

_SKIP_NAMESPACES = {"file", "image", "category", "media"}


@dataclass(frozen=True)
class RawPage:
    title: str
    wikitext: str


def _strip_page_level(text: str) -> str:
    text = _COMMENT_RE.sub("", text)
    text = _REF_RE.sub(" ", text)
    return _strip_templates(text)


def _strip_templates(text: str) -> str:
    """Remove ``{{...}}`` constructs, honoring nesting.

    An unclosed template swallows the rest of the text, matching the policy
    of excluding content inside unexpanded templates.
    """
    out: list[str] = []
    depth = 0
    i = 0
    n = len(text)
    while i < n:
        pair = text[i : i + 2]
        if pair == "{{":
            depth += 1
            i += 2
        elif pair == "}}" and depth:
            depth -= 1
            i += 2
        elif depth == 0:
            out.append(text[i])
            i += 1
        else:
            i += 1
    return "".join(out)


def _clean_fragment(text: str) -> str:
    """Normalize everything except internal links."""
    text = _EXT_LINK_RE.sub(lambda m: m.group(1) or " ", text)
    text = _TAG_RE.sub(" ", text)
    text = _QUOTES_RE.sub("", text)
    return html.unescape(text)


def _find_link_end(text: str, start: int) -> Optional[int]:
    """Index of the ``]]`` closing the link opened at ``start``, or None."""
    depth = 0
    i = start
    n = len(text)
    while i < n - 1:
        pair = text[i : i + 2]
        if pair == "[[":
            depth += 1
            i += 2
        elif pair == "]]":
            depth -= 1
            if depth == 0:
                return i
            i += 2
        else:
            i += 1
    return None


def _extract_links(text: str) -> tuple[str, list[tuple[int, int, str]]]:
    """Replace internal links by their display text.

    Returns the resulting plain text and ``(start_char, end_char, target)``
    triples for every kept link.  Links into file/image/category namespaces
    are removed entirely.
    """
    parts: list[str] = []
    length = 0
    links: list[tuple[int, int, str]] = []
    i = 0
    n = len(text)
    while i < n:
        if text.startswith("[[", i):
            close = _find_link_end(text, i)
            if close is None:
                i += 2
                continue
            inner = text[i + 2 : close]
            i = close + 2
            target, sep, display = inner.partition("|")
            target = target.strip()
            if not target:
                continue
            namespace = target.split(":", 1)[0].strip().lower() if ":" in target else ""
            if namespace in _SKIP_NAMESPACES:
                continue
            display = display if sep else target
            display = re.sub(r"\[\[|\]\]", "", display).strip() or target
            start = length
            parts.append(display)
            length += len(display)
            links.append((start, length, target))
        else:
            parts.append(text[i])
            length += 1
            i += 1
    return "".join(parts), links


def _cell_words(raw: str) -> tuple[list[str], list[EntityMention]]:
    """Stripped words of one cell plus its link mentions (cell_index 0)."""
    plain, links = _extract_links(_clean_fragment(raw))
    spans = [(m.start(), m.end()) for m in _WORD_RE.finditer(plain)]
    words = [plain[s:e] for s, e in spans]
    mentions: list[EntityMention] = []
    for link_start, link_end, target in links:
        covered = [
            w for w, (s, e) in enumerate(spans) if s < link_end and link_start < e
        ]
        if not covered:
            continue
        start_word, end_word = covered[0], covered[-1] + 1
        mentions.append(
            EntityMention(
                cell_index=0,
                start_word=start_word,
                end_word=end_word,
                surface=" ".join(words[start_word:end_word]),
                entity_id=target,
            )
        )
    return words, mentions


def _plain_text(raw: str) -> str:
    words, _ = _cell_words(raw)
    return " ".join(words)


# ---------------------------------------------------------------------------
# tables

@dataclass
class _RawCell:
    text: str
    is_header: bool
    colspan: int = 1
    rowspan: int = 1


def _split_cell_attrs(raw: str) -> tuple[str, int, int]:
    """Strip a leading attribute segment and read its row/col spans."""
    colspan = 1
    rowspan = 1
    pos = raw.find("|")
    if pos != -1:
        prefix = raw[:pos]
        if "=" in prefix and "[[" not in prefix:
            for kind, value in _SPAN_ATTR_RE.findall(prefix):
                if kind.lower() == "col":
                    colspan = max(1, int(value))
                else:
                    rowspan = max(1, int(value))
            raw = raw[pos + 1 :]
    return raw, colspan, rowspan


def _table_rows(block: list[str]) -> list[list[_RawCell]]:
    """Raw cell grid of a table block (outer ``{|``/``|}`` lines included)."""
    rows: list[list[_RawCell]] = []
    current: list[_RawCell] = []
    nested = 0
    for line in block[1:-1]:
        stripped = line.strip()
        if nested:
            if stripped.startswith("{|"):
                nested += 1
            elif stripped.startswith("|}"):
                nested -= 1
            continue
        if stripped.startswith("{|"):
            nested += 1
            continue
        if stripped.startswith("|-"):
            if current:
                rows.append(current)
            current = []
        elif stripped.startswith("|+"):
            continue
        elif stripped.startswith("!"):
            for piece in re.split(r"!!", stripped[1:]):
                text, colspan, rowspan = _split_cell_attrs(piece.strip())
                current.append(_RawCell(text, True, colspan, rowspan))
        elif stripped.startswith("|"):
            for piece in re.split(r"\|\|", stripped[1:]):
                text, colspan, rowspan = _split_cell_attrs(piece.strip())
                current.append(_RawCell(text, False, colspan, rowspan))
        elif current:
            current[-1].text += " " + stripped
    if current:
        rows.append(current)
    return rows


def _expand_spans(rows: list[list[_RawCell]]) -> list[list[_RawCell]]:
    """Duplicate rowspan/colspan cells so every row covers its columns."""
    expanded: list[list[_RawCell]] = []
    pending: dict[int, list] = {}  # column -> [cell, rows remaining]
    for row in rows:
        out: list[_RawCell] = []
        queue = deque(row)
        col = 0
        while queue or col in pending:
            if col in pending:
                cell, remaining = pending[col]
                out.append(_RawCell(cell.text, cell.is_header))
                if remaining - 1 <= 0:
                    del pending[col]
                else:
                    pending[col][1] = remaining - 1
                col += 1
            else:
                cell = queue.popleft()
                for _ in range(cell.colspan):
                    while col in pending:
                        spanned, remaining = pending[col]
                        out.append(_RawCell(spanned.text, spanned.is_header))
                        if remaining - 1 <= 0:
                            del pending[col]
                        else:
                            pending[col][1] = remaining - 1
                        col += 1
                    if cell.rowspan > 1:
                        pending[col] = [cell, cell.rowspan - 1]
                    out.append(_RawCell(cell.text, cell.is_header))
                    col += 1
        expanded.append(out)
    return expanded


def _normalize_width(rows: list[list[_RawCell]], width: int) -> list[list[_RawCell]]:
    normalized = []
    for row in rows:
        if len(row) > width:
            row = row[:width]
        elif len(row) < width:
            row = row + [_RawCell("", row[0].is_header if row else False)] * (width - len(row))
        normalized.append(row)
    return normalized


def _build_table_listing(
    block: list[str], listing_id: str, page_title: str, section_path: tuple[str, ...], min_items: int
) -> Optional[Listing]:
    rows = _expand_spans(_table_rows(block))
    rows = [r for r in rows if r]
    if not rows:
        return None

    header_cells: Optional[tuple[str, ...]] = None
    data_rows: list[list[_RawCell]] = []
    for row in rows:
        if header_cells is None and all(c.is_header for c in row):
            header_cells = tuple(_plain_text(c.text) for c in row)
        else:
            data_rows.append(row)

    if len(data_rows) < min_items:
        return None

    if header_cells is not None:
        width = len(header_cells)
    else:
        counts = Counter(len(r) for r in data_rows)
        best = max(counts.values())
        width = min(w for w, c in counts.items() if c == best)
    data_rows = _normalize_width(data_rows, width)

    items = []
    for row in data_rows:
        cells: list[str] = []
        mentions: list[EntityMention] = []
        for cell_index, cell in enumerate(row):
            words, cell_mentions = _cell_words(cell.text)
            cells.append(" ".join(words))
            for mention in cell_mentions:
                mentions.append(
                    EntityMention(
                        cell_index=cell_index,
                        start_word=mention.start_word,
                        end_word=mention.end_word,
                        surface=mention.surface,
                        entity_id=mention.entity_id,
                    )
                )
        items.append(ListingItem(cells=tuple(cells), depth=1, mentions=tuple(mentions)))

    context = ListingContext(
        page_title=page_title, section_path=section_path, header_cells=header_cells
    )
    return Listing(id=listing_id, kind=ListingKind.TABLE, context=context, items=tuple(items))


# ---------------------------------------------------------------------------
# page parsing

def parse_page(page: RawPage, min_items: int = 3) -> list[Listing]:
    """All enumerations and tables of one page with at least ``min_items`` items.

    Malformed table markup skips the affected listing with a diagnostic;
    a page never fails as a whole.
    """
    text = _strip_page_level(page.wikitext)
    lines = text.split("\n")

    listings: list[Listing] = []
    sections: list[tuple[int, str]] = []
    enum_items: list[ListingItem] = []

    def next_id() -> str:
        return f"{page.title}#{len(listings):04d}"

    def section_path() -> tuple[str, ...]:
        return tuple(title for _, title in sections)

    def close_enum() -> None:
        nonlocal enum_items
        if len(enum_items) >= min_items:
            listings.append(
                Listing(
                    id=next_id(),
                    kind=ListingKind.ENUM,
                    context=ListingContext(page_title=page.title, section_path=section_path()),
                    items=tuple(enum_items),
                )
            )
        enum_items = []

    i = 0
    n = len(lines)
    while i < n:
        line = lines[i].rstrip()
        if not line.strip():
            close_enum()
            i += 1
            continue

        heading = _HEADING_RE.match(line)
        if heading:
            close_enum()
            depth = len(heading.group(1)) - 1
            title = _plain_text(heading.group(2))
            while sections and sections[-1][0] >= depth:
                sections.pop()
            if title:
                sections.append((depth, title))
            i += 1
            continue

        if line.lstrip().startswith("{|"):
            block, i = _collect_table_block(lines, i)
            if block is None:
                logger.warning("page %s: unclosed table block, skipped", page.title)
                continue
            listing = _build_table_listing(
                block, next_id(), page.title, section_path(), min_items
            )
            if listing is not None:
                listings.append(listing)
            continue

        entry = _LIST_RE.match(line)
        if entry:
            words, mentions = _cell_words(entry.group(2))
            if words:
                enum_items.append(
                    ListingItem(
                        cells=(" ".join(words),),
                        depth=len(entry.group(1)),
                        mentions=tuple(mentions),
                    )
                )
            i += 1
            continue

        # plain content between items does not split an enumeration block
        i += 1

    close_enum()
    return listings


def _collect_table_block(lines: list[str], start: int) -> tuple[Optional[list[str]], int]:
    """Lines of the table starting at ``start``; None when it never closes."""
    depth = 0
    for i in range(start, len(lines)):
        stripped = lines[i].strip()
        if stripped.startswith("{|"):
            depth += 1
        elif stripped.startswith("|}"):
            depth -= 1
            if depth == 0:
                return lines[start : i + 1], i + 1
    return None, len(lines)


# ---------------------------------------------------------------------------
# corpus input and statistics

def iter_pages_from_dir(path: str | Path) -> Iterator[RawPage]:
    """One page per file; the file stem is the page title."""
    for file in sorted(Path(path).iterdir()):
        if file.is_file():
            yield RawPage(title=file.stem, wikitext=file.read_text("utf-8"))


def iter_pages_from_dump(path: str | Path) -> Iterator[RawPage]:
    """Pages of a wiki XML export (optionally bz2-compressed)."""
    path = Path(path)
    opener = bz2.open if path.suffix == ".bz2" else open
    with opener(path, "rb") as handle:
        title: Optional[str] = None
        for event, element in ElementTree.iterparse(handle, events=("end",)):
            tag = element.tag.rsplit("}", 1)[-1]
            if tag == "title":
                title = element.text or ""
            elif tag == "text":
                if title is not None:
                    yield RawPage(title=title, wikitext=element.text or "")
            elif tag == "page":
                title = None
                element.clear()


@dataclass
class CorpusStats:
    pages: int = 0
    enums: int = 0
    tables: int = 0
    enum_items_avg: float = 0.0
    enum_items_median: float = 0.0
    table_items_avg: float = 0.0
    table_items_median: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def corpus_stats(listings: Iterable[Listing]) -> CorpusStats:
    """Per-kind listing counts and item-count averages/medians."""
    pages: set[str] = set()
    enum_counts: list[int] = []
    table_counts: list[int] = []
    for listing in listings:
        pages.add(listing.context.page_title)
        if listing.kind is ListingKind.ENUM:
            enum_counts.append(len(listing.items))
        else:
            table_counts.append(len(listing.items))
    return CorpusStats(
        pages=len(pages),
        enums=len(enum_counts),
        tables=len(table_counts),
        enum_items_avg=statistics.fmean(enum_counts) if enum_counts else 0.0,
        enum_items_median=float(statistics.median(enum_counts)) if enum_counts else 0.0,
        table_items_avg=statistics.fmean(table_counts) if table_counts else 0.0,
        table_items_median=float(statistics.median(table_counts)) if table_counts else 0.0,
    )


class WikitextListingParser(BaseEstimator, TransformerMixin):
    """Stateless transformer from raw pages to listing records."""

    def __init__(self, min_items: int = 3) -> None:
        self.min_items = min_items

    def fit(self, X: Iterable[RawPage], y=None) -> "WikitextListingParser":
        return self

    def transform(self, X: Iterable[RawPage]) -> list[Listing]:
        listings: list[Listing] = []
        for page in X:
            listings.extend(parse_page(page, min_items=self.min_items))
        return listings
