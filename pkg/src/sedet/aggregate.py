"""Turn per-token predicted labels back into typed subject-entity mentions.

Within each item span of a chunk, maximal runs of one entity type become
candidate mentions; structural tokens break runs.  Since a listing item is
assumed to carry at most one subject entity, only the first candidate per
item survives.  A decoded mention is linked to a known entity when its word
span overlaps one of the item's parsed link spans.
"""
from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .encoding import EncodedChunk
from .types import (
    EntityType,
    Listing,
    ListingItem,
    TokenLabel,
    mention_flat_span,
)

logger = logging.getLogger(__name__)


class AlignmentError(ValueError):
    """Prediction labels do not line up with the chunk's tokens."""


@dataclass(frozen=True)
class PredictionRecord:
    """Per-chunk model output: one label per chunk token."""

    listing_id: str
    chunk_index: int
    labels: tuple[TokenLabel, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(TokenLabel(l) for l in self.labels))


@dataclass(frozen=True)
class ExtractedMention:
    """A typed subject-entity mention in item-level word coordinates."""

    listing_id: str
    item_index: int
    start_word: int
    end_word: int
    surface: str
    label: EntityType
    linked_entity: Optional[str] = None


def _link_spans(item: ListingItem) -> list[tuple[int, int, str]]:
    spans = [
        (*mention_flat_span(item, m), m.entity_id)
        for m in item.mentions
        if m.entity_id is not None
    ]
    spans.sort(key=lambda s: (s[0], s[1]))
    return spans


def decode_mentions(
    chunk: EncodedChunk,
    prediction: PredictionRecord,
    listing: Optional[Listing] = None,
) -> list[ExtractedMention]:
    """Collapse a chunk's predicted token labels into at most one mention per item.

    Passing the source listing enables entity linking: a mention gets the id
    of the first parsed link whose word span overlaps it.  Raises
    :class:`AlignmentError` when the prediction does not match the chunk.
    """
    if (prediction.listing_id, prediction.chunk_index) != (chunk.listing_id, chunk.chunk_index):
        raise AlignmentError(
            f"prediction for {prediction.listing_id} chunk {prediction.chunk_index} "
            f"applied to {chunk.listing_id} chunk {chunk.chunk_index}"
        )
    if len(prediction.labels) != len(chunk.tokens):
        raise AlignmentError(
            f"{chunk.listing_id} chunk {chunk.chunk_index}: "
            f"{len(prediction.labels)} labels for {len(chunk.tokens)} tokens"
        )

    mentions: list[ExtractedMention] = []
    for item_index in sorted(chunk.item_spans):
        positions = chunk.item_word_positions(item_index)
        runs: list[tuple[EntityType, int, int]] = []
        current: Optional[EntityType] = None
        run_start = 0
        previous_pos: Optional[int] = None
        previous_word = 0
        for pos, word_index in positions:
            entity = prediction.labels[pos].entity_type
            # a gap in token positions means a structural token broke the run
            adjacent = previous_pos is not None and pos == previous_pos + 1
            if not (entity is not None and entity == current and adjacent):
                if current is not None:
                    runs.append((current, run_start, previous_word + 1))
                current = entity
                run_start = word_index
            previous_pos = pos
            previous_word = word_index
        if current is not None:
            runs.append((current, run_start, previous_word + 1))

        if not runs:
            continue
        if len(runs) > 1:
            logger.warning(
                "listing %s item %d: %d candidate mentions, keeping the first",
                chunk.listing_id,
                item_index,
                len(runs),
            )
        entity, start, end = runs[0]
        words = [chunk.tokens[pos] for pos, w in positions if start <= w < end]
        linked = None
        if listing is not None:
            for link_start, link_end, entity_id in _link_spans(listing.items[item_index]):
                if link_start < end and start < link_end:
                    linked = entity_id
                    break
        mentions.append(
            ExtractedMention(
                listing_id=chunk.listing_id,
                item_index=item_index,
                start_word=start,
                end_word=end,
                surface=" ".join(words),
                label=entity,
                linked_entity=linked,
            )
        )
    return mentions


def decode_all(
    chunks: Iterable[EncodedChunk],
    predictions: Iterable[PredictionRecord],
    listings: Optional[Mapping[str, Listing]] = None,
) -> list[ExtractedMention]:
    """Decode a chunk stream against its prediction stream.

    Predictions are keyed by (listing id, chunk index); every chunk must
    have exactly one prediction.
    """
    by_key: dict[tuple[str, int], PredictionRecord] = {}
    for prediction in predictions:
        key = (prediction.listing_id, prediction.chunk_index)
        if key in by_key:
            raise AlignmentError(f"duplicate prediction for {key[0]} chunk {key[1]}")
        by_key[key] = prediction

    mentions: list[ExtractedMention] = []
    for chunk in chunks:
        key = (chunk.listing_id, chunk.chunk_index)
        prediction = by_key.get(key)
        if prediction is None:
            raise AlignmentError(f"missing prediction for {key[0]} chunk {key[1]}")
        listing = listings.get(chunk.listing_id) if listings is not None else None
        mentions.extend(decode_mentions(chunk, prediction, listing))
    return mentions


def filter_multi_type_listings(
    mentions: Iterable[ExtractedMention],
) -> dict[str, list[ExtractedMention]]:
    """Keep only listings whose extracted mentions all share one entity type.

    Mixed-type listings are the tell-tale of noisy predictions and are
    discarded when building a fine-tuning set from model output.  Listings
    without any mention never appear in the input and are therefore dropped
    as well (no type evidence).
    """
    grouped: dict[str, list[ExtractedMention]] = defaultdict(list)
    for mention in mentions:
        grouped[mention.listing_id].append(mention)
    return {
        listing_id: listing_mentions
        for listing_id, listing_mentions in grouped.items()
        if len({m.label for m in listing_mentions}) == 1
    }


def gold_mentions(listing: Listing) -> list[ExtractedMention]:
    """Subject mentions of a labeled listing in item-level coordinates."""
    mentions: list[ExtractedMention] = []
    for item_index, item in enumerate(listing.items):
        subject = item.subject_mention()
        if subject is None or subject.label is None:
            continue
        start, end = mention_flat_span(item, subject)
        mentions.append(
            ExtractedMention(
                listing_id=listing.id,
                item_index=item_index,
                start_word=start,
                end_word=end,
                surface=subject.surface,
                label=subject.label,
                linked_entity=subject.entity_id,
            )
        )
    return mentions


def pick_first_entity_baseline(listing: Listing) -> list[ExtractedMention]:
    """Label the first linked mention of every item as the subject entity.

    The baseline has no type model, so every mention is typed OTHER; score
    it under the boundary-only scenarios.
    """
    mentions: list[ExtractedMention] = []
    for item_index, item in enumerate(listing.items):
        spans = _link_spans(item)
        if not spans:
            continue
        start, end, entity_id = spans[0]
        words = item.words[start:end]
        mentions.append(
            ExtractedMention(
                listing_id=listing.id,
                item_index=item_index,
                start_word=start,
                end_word=end,
                surface=" ".join(words),
                label=EntityType.OTHER,
                linked_entity=entity_id,
            )
        )
    return mentions


def relabel_chunks(
    chunks: Iterable[EncodedChunk],
    kept: Mapping[str, Sequence[ExtractedMention]],
    include_empty: Iterable[str] = (),
) -> list[EncodedChunk]:
    """Rebuild gold labels on chunks from accepted mentions.

    Used to turn filtered model predictions into a noisy fine-tuning set:
    chunks of kept listings get mention words labeled with the mention type,
    other item words NONE, everything else IGNORE.  ``include_empty`` lists
    additional listing ids to keep with all-NONE item labels.
    """
    include_empty = set(include_empty)
    by_item: dict[str, dict[int, ExtractedMention]] = {}
    for listing_id, listing_mentions in kept.items():
        by_item[listing_id] = {m.item_index: m for m in listing_mentions}

    relabeled: list[EncodedChunk] = []
    for chunk in chunks:
        item_mentions = by_item.get(chunk.listing_id)
        if item_mentions is None:
            if chunk.listing_id in include_empty:
                item_mentions = {}
            else:
                continue
        labels = [TokenLabel.IGNORE] * len(chunk.tokens)
        for item_index in chunk.item_spans:
            mention = item_mentions.get(item_index)
            for pos, word_index in chunk.item_word_positions(item_index):
                if mention is not None and mention.start_word <= word_index < mention.end_word:
                    labels[pos] = TokenLabel.from_entity_type(mention.label)
                else:
                    labels[pos] = TokenLabel.NONE
        relabeled.append(chunk.with_labels(labels))
    return relabeled


@dataclass
class ExtractionStats:
    """Aggregate mention counts; merges associatively across shards."""

    per_type: Counter = field(default_factory=Counter)
    total: int = 0
    linked: int = 0
    linked_entities: set = field(default_factory=set)

    def add(self, mention: ExtractedMention) -> None:
        self.per_type[mention.label.value] += 1
        self.total += 1
        if mention.linked_entity is not None:
            self.linked += 1
            self.linked_entities.add(mention.linked_entity)

    def merge(self, other: "ExtractionStats") -> "ExtractionStats":
        merged = ExtractionStats(
            per_type=self.per_type + other.per_type,
            total=self.total + other.total,
            linked=self.linked + other.linked,
            linked_entities=self.linked_entities | other.linked_entities,
        )
        return merged

    @property
    def unlinked(self) -> int:
        return self.total - self.linked

    @property
    def distinct_linked_entities(self) -> int:
        return len(self.linked_entities)

    @property
    def mentions_per_entity(self) -> float:
        if not self.linked_entities:
            return 0.0
        return self.linked / len(self.linked_entities)

    def to_dict(self) -> dict:
        return {
            "per_type": dict(sorted(self.per_type.items())),
            "total": self.total,
            "linked": self.linked,
            "unlinked": self.unlinked,
            "distinct_linked_entities": self.distinct_linked_entities,
            "mentions_per_entity": self.mentions_per_entity,
        }


def extraction_stats(mentions: Iterable[ExtractedMention]) -> ExtractionStats:
    """Per-type counts plus linked/unlinked totals over a mention stream."""
    stats = ExtractionStats()
    for mention in mentions:
        stats.add(mention)
    return stats
