"""Distantly-supervised training labels from a typed knowledge base.

List pages enumerate entities of one known class.  Given a mapping from a
list page to that target class, every linked mention whose entity carries the
target class (or a subclass of it) gets a positive verdict, every mention
whose entity carries a class disjoint with the target gets a negative one,
and everything else stays unknown.  Items are kept for training only when
the verdicts allow a confident call either way.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .encoding import EncodedChunk
from .types import (
    EntityType,
    LabelMode,
    Listing,
    ListingItem,
    TokenLabel,
    subject_flat_span,
)

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class ListPageTarget:
    """Target class and coarse token type for one list page."""

    target_class: str
    token_type: EntityType


@dataclass
class TypeKB:
    """Entity-to-class assignments plus class disjointness and hierarchy.

    ``entity_types`` maps entity ids to their direct classes,
    ``disjoint_pairs`` holds unordered class pairs, and ``subclass_of`` maps
    a class to its direct parents.  Disjointness is checked transitively
    upward: two classes conflict when any of their ancestors form a disjoint
    pair.  Read-only once built; safe to share across threads.
    """

    entity_types: dict[str, set[str]] = field(default_factory=dict)
    disjoint_pairs: set[frozenset[str]] = field(default_factory=set)
    subclass_of: dict[str, set[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.disjoint_pairs = {frozenset(p) for p in self.disjoint_pairs}
        self._ancestor_cache: dict[str, frozenset[str]] = {}

    def known_classes(self) -> set[str]:
        classes: set[str] = set()
        for assigned in self.entity_types.values():
            classes.update(assigned)
        for pair in self.disjoint_pairs:
            classes.update(pair)
        for child, parents in self.subclass_of.items():
            classes.add(child)
            classes.update(parents)
        return classes

    def ancestors(self, class_id: str) -> frozenset[str]:
        """Reflexive transitive closure over subclass edges."""
        cached = self._ancestor_cache.get(class_id)
        if cached is not None:
            return cached
        seen: set[str] = set()
        stack = [class_id]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(self.subclass_of.get(current, ()))
        result = frozenset(seen)
        self._ancestor_cache[class_id] = result
        return result

    def is_subclass(self, class_id: str, ancestor: str) -> bool:
        return ancestor in self.ancestors(class_id)

    def are_disjoint(self, a: str, b: str) -> bool:
        ancestors_a = self.ancestors(a)
        ancestors_b = self.ancestors(b)
        for pair in self.disjoint_pairs:
            x, *rest = pair
            y = rest[0] if rest else x
            if (x in ancestors_a and y in ancestors_b) or (y in ancestors_a and x in ancestors_b):
                return True
        return False


def classify_entity(entity_id: Optional[str], target: ListPageTarget, kb: TypeKB) -> Verdict:
    """Verdict for a single entity id against the page's target class."""
    if entity_id is None:
        return Verdict.UNKNOWN
    classes = kb.entity_types.get(entity_id)
    if not classes:
        return Verdict.UNKNOWN
    if any(kb.is_subclass(c, target.target_class) for c in classes):
        return Verdict.POSITIVE
    if any(kb.are_disjoint(c, target.target_class) for c in classes):
        return Verdict.NEGATIVE
    return Verdict.UNKNOWN


def label_entities(listing: Listing, target: ListPageTarget, kb: TypeKB) -> list[list[Verdict]]:
    """Per-item, per-mention verdicts, in mention order."""
    return [
        [classify_entity(m.entity_id, target, kb) for m in item.mentions]
        for item in listing.items
    ]


def _mention_order(item: ListingItem) -> list[int]:
    return sorted(
        range(len(item.mentions)),
        key=lambda j: (item.mentions[j].cell_index, item.mentions[j].start_word),
    )


def select_training_items(
    listing: Listing,
    verdicts: Sequence[Sequence[Verdict]],
    target: ListPageTarget,
) -> Optional[Listing]:
    """Keep items that support a confident training label.

    An item is kept as positive-bearing when at least one mention is
    POSITIVE (the first such mention in word order becomes the subject
    entity, typed with the page's token type), and as all-negative when it
    has mentions and every one is NEGATIVE.  Everything else is dropped.
    Returns None when no item survives.
    """
    kept: list[ListingItem] = []
    for index, item in enumerate(listing.items):
        item_verdicts = verdicts[index]
        order = _mention_order(item)
        positives = [j for j in order if item_verdicts[j] is Verdict.POSITIVE]
        if positives:
            if len(positives) > 1:
                logger.warning(
                    "listing %s item %d: %d positive mentions, keeping the first",
                    listing.id,
                    index,
                    len(positives),
                )
            subject = positives[0]
            mentions = tuple(
                replace(m, is_subject=(j == subject), label=target.token_type if j == subject else None)
                for j, m in enumerate(item.mentions)
            )
            kept.append(replace(item, mentions=mentions))
        elif item.mentions and all(v is Verdict.NEGATIVE for v in item_verdicts):
            mentions = tuple(replace(m, is_subject=False, label=None) for m in item.mentions)
            kept.append(replace(item, mentions=mentions))
        # anything else might hold an unidentifiable subject entity: drop it
    if not kept:
        return None
    return replace(listing, items=tuple(kept))


def label_listing(listing: Listing, target: ListPageTarget, kb: TypeKB) -> Optional[Listing]:
    """label_entities + select_training_items in one step."""
    return select_training_items(listing, label_entities(listing, target, kb), target)


def gold_token_labels(
    chunk: EncodedChunk,
    listing: Listing,
    label_mode: LabelMode | str = LabelMode.TYPED,
) -> list[TokenLabel]:
    """Per-token gold labels for a chunk built from a labeled listing.

    Context words and special tokens get IGNORE, words inside a subject
    mention get its entity type (or OTHER in binary mode), and the remaining
    item words get NONE.  The output length equals the chunk's token length.
    """
    label_mode = LabelMode(label_mode)
    labels = [TokenLabel.IGNORE] * len(chunk.tokens)
    for item_index in chunk.item_spans:
        item = listing.items[item_index]
        span = subject_flat_span(item)
        if span is not None and label_mode is LabelMode.BINARY:
            span = (span[0], span[1], EntityType.OTHER)
        for pos, word_index in chunk.item_word_positions(item_index):
            if span is not None and span[0] <= word_index < span[1]:
                labels[pos] = TokenLabel.from_entity_type(span[2])
            else:
                labels[pos] = TokenLabel.NONE
    return labels


def attach_gold_labels(
    chunks: Iterable[EncodedChunk],
    listing: Listing,
    label_mode: LabelMode | str = LabelMode.TYPED,
) -> list[EncodedChunk]:
    return [c.with_labels(gold_token_labels(c, listing, label_mode)) for c in chunks]


class DistantSupervisionLabeler(BaseEstimator, TransformerMixin):
    """Transformer that labels list-page listings from a knowledge base.

    ``targets`` maps a page title to its :class:`ListPageTarget`.  Listings
    from pages without a target are dropped (they carry no supervision).
    """

    def __init__(self, kb: TypeKB, targets: Mapping[str, ListPageTarget]) -> None:
        self.kb = kb
        self.targets = targets
        known = kb.known_classes()
        for page, target in targets.items():
            if target.target_class not in known:
                logger.warning(
                    "target class %s for page %s is unknown to the knowledge base",
                    target.target_class,
                    page,
                )

    def fit(self, X: Iterable[Listing], y=None) -> "DistantSupervisionLabeler":
        return self

    def transform(self, X: Iterable[Listing]) -> list[Listing]:
        labeled: list[Listing] = []
        for listing in X:
            target = self.targets.get(listing.context.page_title)
            if target is None:
                continue
            result = label_listing(listing, target, self.kb)
            if result is not None:
                labeled.append(result)
        return labeled
