"""Line-delimited record formats shared by every pipeline stage.

All inter-stage files are UTF-8 JSON lines: one listing, encoded chunk,
prediction record, or extracted mention per line, with the field names fixed
below.  These files are the wire contract between the pipeline stages and
the external model adapter, so the layouts here must stay stable.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Optional

from .aggregate import ExtractedMention, PredictionRecord
from .distant import ListPageTarget, TypeKB
from .encoding import EncodedChunk
from .types import (
    EntityMention,
    EntityType,
    Listing,
    ListingContext,
    ListingItem,
    ListingKind,
    TokenLabel,
)


# ---------------------------------------------------------------------------
# listings

def listing_to_record(listing: Listing) -> dict[str, Any]:
    return {
        "id": listing.id,
        "kind": listing.kind.value,
        "context": {
            "page_title": listing.context.page_title,
            "section_path": list(listing.context.section_path),
            "header_cells": list(listing.context.header_cells)
            if listing.context.header_cells is not None
            else None,
        },
        "items": [
            {
                "cells": list(item.cells),
                "depth": item.depth,
                "mentions": [
                    {
                        "cell_index": m.cell_index,
                        "start_word": m.start_word,
                        "end_word": m.end_word,
                        "surface": m.surface,
                        "entity_id": m.entity_id,
                        "label": m.label.value if m.label is not None else None,
                        "is_subject": m.is_subject,
                    }
                    for m in item.mentions
                ],
            }
            for item in listing.items
        ],
    }


def listing_from_record(record: Mapping[str, Any]) -> Listing:
    context = record["context"]
    return Listing(
        id=record["id"],
        kind=ListingKind(record["kind"]),
        context=ListingContext(
            page_title=context["page_title"],
            section_path=tuple(context.get("section_path") or ()),
            header_cells=tuple(context["header_cells"])
            if context.get("header_cells") is not None
            else None,
        ),
        items=tuple(
            ListingItem(
                cells=tuple(item["cells"]),
                depth=item.get("depth", 1),
                mentions=tuple(
                    EntityMention(
                        cell_index=m["cell_index"],
                        start_word=m["start_word"],
                        end_word=m["end_word"],
                        surface=m["surface"],
                        entity_id=m.get("entity_id"),
                        label=EntityType(m["label"]) if m.get("label") is not None else None,
                        is_subject=m.get("is_subject", False),
                    )
                    for m in item.get("mentions", ())
                ),
            )
            for item in record["items"]
        ),
    )


# ---------------------------------------------------------------------------
# encoded chunks

def chunk_to_record(chunk: EncodedChunk) -> dict[str, Any]:
    return {
        "listing_id": chunk.listing_id,
        "chunk_index": chunk.chunk_index,
        "tokens": list(chunk.tokens),
        "item_spans": {str(i): list(span) for i, span in chunk.item_spans.items()},
        "labels": [l.value for l in chunk.labels] if chunk.labels is not None else None,
    }


def chunk_from_record(record: Mapping[str, Any]) -> EncodedChunk:
    labels = record.get("labels")
    return EncodedChunk(
        listing_id=record["listing_id"],
        chunk_index=record["chunk_index"],
        tokens=tuple(record["tokens"]),
        item_spans={int(i): (span[0], span[1]) for i, span in record["item_spans"].items()},
        labels=tuple(TokenLabel(l) for l in labels) if labels is not None else None,
    )


# ---------------------------------------------------------------------------
# predictions and mentions

def prediction_to_record(prediction: PredictionRecord) -> dict[str, Any]:
    return {
        "listing_id": prediction.listing_id,
        "chunk_index": prediction.chunk_index,
        "labels": [l.value for l in prediction.labels],
    }


def prediction_from_record(record: Mapping[str, Any]) -> PredictionRecord:
    return PredictionRecord(
        listing_id=record["listing_id"],
        chunk_index=record["chunk_index"],
        labels=tuple(TokenLabel(l) for l in record["labels"]),
    )


def mention_to_record(mention: ExtractedMention) -> dict[str, Any]:
    return {
        "listing_id": mention.listing_id,
        "item_index": mention.item_index,
        "start_word": mention.start_word,
        "end_word": mention.end_word,
        "surface": mention.surface,
        "label": mention.label.value,
        "linked_entity": mention.linked_entity,
    }


def mention_from_record(record: Mapping[str, Any]) -> ExtractedMention:
    return ExtractedMention(
        listing_id=record["listing_id"],
        item_index=record["item_index"],
        start_word=record["start_word"],
        end_word=record["end_word"],
        surface=record["surface"],
        label=EntityType(record["label"]),
        linked_entity=record.get("linked_entity"),
    )


# ---------------------------------------------------------------------------
# generic JSONL plumbing

def write_jsonl(path: str | Path, records: Iterable[Mapping[str, Any]]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count


def read_jsonl(path: str | Path) -> Iterator[dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_listings(path: str | Path, listings: Iterable[Listing]) -> int:
    return write_jsonl(path, (listing_to_record(l) for l in listings))


def read_listings(path: str | Path) -> Iterator[Listing]:
    for record in read_jsonl(path):
        yield listing_from_record(record)


def write_chunks(path: str | Path, chunks: Iterable[EncodedChunk]) -> int:
    return write_jsonl(path, (chunk_to_record(c) for c in chunks))


def read_chunks(path: str | Path) -> Iterator[EncodedChunk]:
    for record in read_jsonl(path):
        yield chunk_from_record(record)


def write_predictions(path: str | Path, predictions: Iterable[PredictionRecord]) -> int:
    return write_jsonl(path, (prediction_to_record(p) for p in predictions))


def read_predictions(path: str | Path) -> Iterator[PredictionRecord]:
    for record in read_jsonl(path):
        yield prediction_from_record(record)


def write_mentions(path: str | Path, mentions: Iterable[ExtractedMention]) -> int:
    return write_jsonl(path, (mention_to_record(m) for m in mentions))


def read_mentions(path: str | Path) -> Iterator[ExtractedMention]:
    for record in read_jsonl(path):
        yield mention_from_record(record)


# ---------------------------------------------------------------------------
# knowledge base and list-page targets

def load_type_kb(path: str | Path) -> TypeKB:
    """Load a TypeKB from line-delimited records.

    Three record shapes are accepted:
    ``{"entity": id, "classes": [...]}`` for entity-to-class assignments,
    ``{"disjoint": [a, b]}`` for disjointness pairs, and
    ``{"subclass": [child, parent]}`` for hierarchy edges.
    """
    kb = TypeKB()
    for record in read_jsonl(path):
        if "entity" in record:
            kb.entity_types.setdefault(record["entity"], set()).update(record["classes"])
        elif "disjoint" in record:
            a, b = record["disjoint"]
            kb.disjoint_pairs.add(frozenset((a, b)))
        elif "subclass" in record:
            child, parent = record["subclass"]
            kb.subclass_of.setdefault(child, set()).add(parent)
        else:
            raise ValueError(f"unrecognized knowledge-base record: {record}")
    return kb


def load_class_entity_types(path: Optional[str | Path] = None) -> dict[str, EntityType]:
    """Class-to-entity-type mapping, from a JSON file or the bundled default."""
    if path is None:
        text = resources.files("sedet.data").joinpath("class_entity_types.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    return {cls: EntityType(name) for cls, name in raw.items()}


def load_targets(
    path: str | Path,
    class_types: Optional[Mapping[str, EntityType]] = None,
) -> dict[str, ListPageTarget]:
    """Load page-to-target-class assignments from a two-column TSV file.

    Column 1 is the page title, column 2 the target class.  The coarse token
    type comes from the class mapping; classes without an entry fall back to
    OTHER.
    """
    if class_types is None:
        class_types = load_class_entity_types()
    targets: dict[str, ListPageTarget] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected 2 tab-separated columns")
            page, target_class = parts
            token_type = class_types.get(target_class, EntityType.OTHER)
            targets[page] = ListPageTarget(target_class=target_class, token_type=token_type)
    return targets
