"""Reader/writer for the encoded-chunk and prediction wire formats.

These line-delimited JSON layouts are the adapter's only contract with the
upstream pipeline: chunks come in with word tokens, item spans, and
(optionally) gold labels; predictions go out with one label per chunk token.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

IGNORE = "IGNORE"
NONE = "NONE"

#: structural marker tokens that must map to reserved vocabulary entries
SPECIAL_TOKEN_RE = re.compile(r"\[(CLS|SEP|CXS|CXE|ROW|COL|E\d+)\]")


def is_special_token(token: str) -> bool:
    return SPECIAL_TOKEN_RE.fullmatch(token) is not None


@dataclass(frozen=True)
class Chunk:
    """One encoded listing chunk as read from the wire."""

    listing_id: str
    chunk_index: int
    tokens: tuple[str, ...]
    item_spans: dict[int, tuple[int, int]]
    labels: Optional[tuple[str, ...]] = None

    def item_positions(self) -> set[int]:
        return {p for start, end in self.item_spans.values() for p in range(start, end)}


@dataclass(frozen=True)
class Prediction:
    listing_id: str
    chunk_index: int
    labels: tuple[str, ...]


def read_chunks(path: str | Path) -> Iterator[Chunk]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            labels = record.get("labels")
            yield Chunk(
                listing_id=record["listing_id"],
                chunk_index=record["chunk_index"],
                tokens=tuple(record["tokens"]),
                item_spans={
                    int(i): (span[0], span[1])
                    for i, span in record["item_spans"].items()
                },
                labels=tuple(labels) if labels is not None else None,
            )


def write_chunks(path: str | Path, chunks: Iterable[Chunk]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for chunk in chunks:
            record = {
                "listing_id": chunk.listing_id,
                "chunk_index": chunk.chunk_index,
                "tokens": list(chunk.tokens),
                "item_spans": {str(i): list(s) for i, s in chunk.item_spans.items()},
                "labels": list(chunk.labels) if chunk.labels is not None else None,
            }
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def write_predictions(path: str | Path, predictions: Iterable[Prediction]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for prediction in predictions:
            record = {
                "listing_id": prediction.listing_id,
                "chunk_index": prediction.chunk_index,
                "labels": list(prediction.labels),
            }
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def read_predictions(path: str | Path) -> Iterator[Prediction]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            yield Prediction(
                listing_id=record["listing_id"],
                chunk_index=record["chunk_index"],
                labels=tuple(record["labels"]),
            )
