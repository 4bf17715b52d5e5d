"""Core domain types: listings, entity mentions, and the token-label vocabulary.

All types are immutable value objects after construction and can be shared
freely between threads.  Word offsets (whitespace-delimited) are the canonical
span unit throughout the package; character offsets can be recomputed from the
cell text when needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional


class EntityType(str, Enum):
    """The 13 coarse-grained entity types assigned to subject entities."""

    PERSON = "PERSON"
    ORG = "ORG"
    LOC = "LOC"
    GPE = "GPE"
    FAC = "FAC"
    EVENT = "EVENT"
    NORP = "NORP"
    LANGUAGE = "LANGUAGE"
    LAW = "LAW"
    PRODUCT = "PRODUCT"
    SPECIES = "SPECIES"
    WORK_OF_ART = "WORK_OF_ART"
    OTHER = "OTHER"


class TokenLabel(str, Enum):
    """Per-word classification target.

    ``IGNORE`` marks context words and special tokens (no prediction wanted),
    ``NONE`` marks non-subject words inside listing items, and the remaining
    13 values mirror :class:`EntityType` for words inside a subject mention.
    """

    IGNORE = "IGNORE"
    NONE = "NONE"
    PERSON = "PERSON"
    ORG = "ORG"
    LOC = "LOC"
    GPE = "GPE"
    FAC = "FAC"
    EVENT = "EVENT"
    NORP = "NORP"
    LANGUAGE = "LANGUAGE"
    LAW = "LAW"
    PRODUCT = "PRODUCT"
    SPECIES = "SPECIES"
    WORK_OF_ART = "WORK_OF_ART"
    OTHER = "OTHER"

    @classmethod
    def from_entity_type(cls, entity_type: EntityType) -> "TokenLabel":
        return cls(entity_type.value)

    @property
    def is_entity(self) -> bool:
        return self not in (TokenLabel.IGNORE, TokenLabel.NONE)

    @property
    def entity_type(self) -> Optional[EntityType]:
        return EntityType(self.value) if self.is_entity else None


class ListingKind(str, Enum):
    ENUM = "ENUM"
    TABLE = "TABLE"


class LabelMode(str, Enum):
    """TYPED keeps the 13 entity types; BINARY collapses them all to OTHER."""

    TYPED = "TYPED"
    BINARY = "BINARY"


@dataclass(frozen=True)
class EntityMention:
    """A word span inside one item cell, optionally linked to a known entity.

    ``start_word``/``end_word`` are word offsets within the cell (end
    exclusive); ``surface`` is the covered words joined by single spaces.
    ``is_subject`` marks the mention as the item's subject entity, in which
    case ``label`` carries its entity type.
    """

    cell_index: int
    start_word: int
    end_word: int
    surface: str
    entity_id: Optional[str] = None
    label: Optional[EntityType] = None
    is_subject: bool = False


@dataclass(frozen=True)
class ListingContext:
    """Where a listing sits on its page: title, heading chain, table header."""

    page_title: str
    section_path: tuple[str, ...] = ()
    header_cells: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "section_path", tuple(self.section_path))
        if self.header_cells is not None:
            object.__setattr__(self, "header_cells", tuple(self.header_cells))


@dataclass(frozen=True)
class ListingItem:
    """One enumeration entry or table row.

    ``cells`` is a singleton for enumeration entries; ``depth`` is the
    indentation level (always 1 for table rows).
    """

    cells: tuple[str, ...]
    depth: int = 1
    mentions: tuple[EntityMention, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "mentions", tuple(self.mentions))

    @property
    def cell_words(self) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(cell.split()) for cell in self.cells)

    @property
    def words(self) -> tuple[str, ...]:
        """All item words, cells concatenated in order."""
        return tuple(w for cell in self.cells for w in cell.split())

    def subject_mention(self) -> Optional[EntityMention]:
        for mention in self.mentions:
            if mention.is_subject:
                return mention
        return None


@dataclass(frozen=True)
class Listing:
    """An enumeration or table with its page context and ordered items."""

    id: str
    kind: ListingKind
    context: ListingContext
    items: tuple[ListingItem, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ListingKind(self.kind))
        object.__setattr__(self, "items", tuple(self.items))


def mention_flat_span(item: ListingItem, mention: EntityMention) -> tuple[int, int]:
    """Word span of a mention in item-level coordinates.

    Item-level coordinates number the words of all cells consecutively
    (cell 0 first), skipping any structural tokens.  This is the coordinate
    system shared by decoded predictions and the scorer.
    """
    offset = sum(len(cell.split()) for cell in item.cells[: mention.cell_index])
    return offset + mention.start_word, offset + mention.end_word


def subject_flat_span(item: ListingItem) -> Optional[tuple[int, int, EntityType]]:
    """Flat span and type of the item's subject mention, if any."""
    mention = item.subject_mention()
    if mention is None or mention.label is None:
        return None
    start, end = mention_flat_span(item, mention)
    return start, end, mention.label


def validate_listing(listing: Listing) -> list[str]:
    """Check every structural invariant of a listing.

    Returns an empty list iff the listing is well formed; otherwise one
    human-readable violation per broken rule, naming the item index.
    Validation never raises.
    """
    violations: list[str] = []

    if listing.kind is ListingKind.ENUM and listing.context.header_cells is not None:
        violations.append("header cells present on a non-table listing")

    expected_cells: Optional[int] = None
    if listing.kind is ListingKind.TABLE:
        if listing.context.header_cells is not None:
            expected_cells = len(listing.context.header_cells)
        elif listing.items:
            expected_cells = len(listing.items[0].cells)

    for i, item in enumerate(listing.items):
        if listing.kind is ListingKind.ENUM:
            if len(item.cells) != 1:
                violations.append(f"item {i}: enumeration item has {len(item.cells)} cells, expected 1")
            if item.depth < 1:
                violations.append(f"item {i}: depth {item.depth} < 1")
        else:
            if item.depth != 1:
                violations.append(f"item {i}: table item depth {item.depth} ≠ 1")
            if expected_cells is not None and len(item.cells) != expected_cells:
                violations.append(f"item {i}: cell count {len(item.cells)} ≠ {expected_cells}")

        subjects = 0
        for j, mention in enumerate(item.mentions):
            if mention.cell_index < 0 or mention.cell_index >= len(item.cells):
                violations.append(f"item {i} mention {j}: cell index {mention.cell_index} out of range")
                continue
            cell_words = item.cells[mention.cell_index].split()
            if mention.end_word <= mention.start_word:
                violations.append(f"item {i} mention {j}: empty span")
            elif mention.start_word < 0 or mention.end_word > len(cell_words):
                violations.append(
                    f"item {i} mention {j}: span [{mention.start_word}, {mention.end_word}) "
                    f"outside cell of {len(cell_words)} words"
                )
            else:
                covered = " ".join(cell_words[mention.start_word : mention.end_word])
                if mention.surface != covered:
                    violations.append(
                        f"item {i} mention {j}: surface {mention.surface!r} ≠ covered words {covered!r}"
                    )
            if mention.is_subject:
                subjects += 1
                if mention.label is None:
                    violations.append(f"item {i} mention {j}: subject mention has no label")
        if subjects > 1:
            violations.append(f"item {i}: {subjects} subject mentions, at most 1 allowed")

    return violations


def iter_violations(listings: Iterable[Listing]) -> Iterable[tuple[str, str]]:
    """Yield (listing id, violation) pairs over a stream of listings."""
    for listing in listings:
        for violation in validate_listing(listing):
            yield listing.id, violation
