"""Serialize listings into model input sequences with special tokens.

A sequence has the shape::

    [CLS] <context> [CXE] <listing items> [SEP]

where the context is the page title, the section headings (each preceded by
``[CXS]``) and, for tables with a header row, the header cells encoded as
``[CXS] [ROW] h0 [COL] h1 ...``.  Enumeration entries start with ``[E<depth>]``
and table rows with ``[ROW]``, cells separated by ``[COL]``.

Special tokens are literal bracketed strings in the word stream; a model
adapter maps them to reserved tokenizer vocabulary entries.  Length budgeting
uses a pluggable per-word estimator so the encoder stays independent of any
concrete subword tokenizer.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .types import Listing, ListingContext, ListingItem, ListingKind, TokenLabel

logger = logging.getLogger(__name__)

CLS = "[CLS]"
SEP = "[SEP]"
CXS = "[CXS]"
CXE = "[CXE]"
ROW = "[ROW]"
COL = "[COL]"

_ENTRY_RE = re.compile(r"\[E\d+\]")

#: subword-per-word estimate used by the default length estimator
_SUBWORDS_PER_WORD = 1.5


def entry_token(depth: int) -> str:
    return f"[E{depth}]"


def is_special_token(token: str) -> bool:
    return token in (CLS, SEP, CXS, CXE, ROW, COL) or _ENTRY_RE.fullmatch(token) is not None


def default_length_estimator(token: str) -> int:
    """Estimate the subword cost of one word token.

    Special tokens are assumed to map to a single reserved vocabulary entry;
    ordinary words are budgeted at 1.5 subword tokens, rounded up.
    """
    if is_special_token(token):
        return 1
    return math.ceil(_SUBWORDS_PER_WORD)


@dataclass(frozen=True)
class EncoderConfig:
    """Budget and layout knobs for the encoder.

    ``chunking_enabled=False`` puts exactly one item into each sequence,
    which is the ablation mode for measuring the effect of item chunking.
    """

    max_seq_len: int = 512
    max_items_per_chunk: int = 20
    length_estimator: Callable[[str], int] = default_length_estimator
    max_enum_depth: int = 4
    chunking_enabled: bool = True

    def __post_init__(self) -> None:
        if self.max_seq_len < 16:
            raise ValueError(f"max_seq_len must be >= 16, got {self.max_seq_len}")
        if self.max_items_per_chunk < 1:
            raise ValueError("max_items_per_chunk must be >= 1")
        if self.max_enum_depth < 1:
            raise ValueError("max_enum_depth must be >= 1")


@dataclass(frozen=True)
class EncodedChunk:
    """One model input: tokens, item span map, and optional gold labels.

    ``item_spans`` maps the original item index to the ``[token_start,
    token_end)`` range the item occupies in ``tokens``.  The spans are
    disjoint, ordered, and tile the region between ``[CXE]`` and ``[SEP]``.
    """

    listing_id: str
    chunk_index: int
    tokens: tuple[str, ...]
    item_spans: dict[int, tuple[int, int]]
    labels: Optional[tuple[TokenLabel, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(
            self,
            "item_spans",
            {int(k): (int(v[0]), int(v[1])) for k, v in self.item_spans.items()},
        )
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(TokenLabel(l) for l in self.labels))

    def with_labels(self, labels: Sequence[TokenLabel]) -> "EncodedChunk":
        if len(labels) != len(self.tokens):
            raise ValueError(
                f"label count {len(labels)} != token count {len(self.tokens)} "
                f"for {self.listing_id} chunk {self.chunk_index}"
            )
        return replace(self, labels=tuple(labels))

    def item_word_positions(self, item_index: int) -> list[tuple[int, int]]:
        """(token position, item-level word index) pairs for one item span.

        Structural tokens inside the span are skipped, so the word indices
        match the item-level coordinates used by mentions.
        """
        start, end = self.item_spans[item_index]
        positions = []
        word_index = 0
        for pos in range(start, end):
            if is_special_token(self.tokens[pos]):
                continue
            positions.append((pos, word_index))
            word_index += 1
        return positions


def encode_context(context: ListingContext) -> list[str]:
    """Token prefix for a listing: ``[CLS]`` through ``[CXE]`` inclusive."""
    tokens = [CLS]
    tokens.extend(context.page_title.split())
    for heading in context.section_path:
        tokens.append(CXS)
        tokens.extend(heading.split())
    if context.header_cells is not None:
        tokens.append(CXS)
        for i, cell in enumerate(context.header_cells):
            tokens.append(ROW if i == 0 else COL)
            tokens.extend(cell.split())
    tokens.append(CXE)
    return tokens


def encode_item(item: ListingItem, kind: ListingKind, max_enum_depth: int = 4) -> list[str]:
    """Token run for one listing item, including its structural markers."""
    if kind is ListingKind.ENUM:
        depth = min(item.depth, max_enum_depth)
        tokens = [entry_token(depth)]
        tokens.extend(item.cells[0].split())
        return tokens
    tokens = []
    for i, cell in enumerate(item.cells):
        tokens.append(ROW if i == 0 else COL)
        tokens.extend(cell.split())
    return tokens


def _cost(tokens: Iterable[str], estimator: Callable[[str], int]) -> int:
    return sum(estimator(t) for t in tokens)


def _truncate_item(
    listing: Listing, item_index: int, run: list[str], budget: int, estimator: Callable[[str], int]
) -> list[str]:
    """Drop trailing tokens of an oversized item run until it fits."""
    kept: list[str] = []
    used = 0
    for token in run:
        cost = estimator(token)
        if used + cost > budget:
            break
        kept.append(token)
        used += cost
    if not kept or not is_special_token(kept[0]):
        raise ValueError(
            f"listing {listing.id}: context leaves no room for item {item_index} "
            f"within max_seq_len"
        )
    logger.warning(
        "listing %s item %d truncated from %d to %d tokens to fit the budget",
        listing.id,
        item_index,
        len(run),
        len(kept),
    )
    return kept


def chunk_listing(listing: Listing, config: EncoderConfig | None = None) -> list[EncodedChunk]:
    """Pack listing items greedily into budgeted chunks.

    Every chunk repeats the identical context prefix; a new chunk starts when
    the next item would exceed the length budget or the per-chunk item cap.
    Items are never split across chunks; a single item that alone exceeds the
    budget has its tail words truncated (with a diagnostic).
    """
    config = config or EncoderConfig()
    estimator = config.length_estimator
    prefix = encode_context(listing.context)
    prefix_cost = _cost(prefix, estimator) + estimator(SEP)
    item_budget = config.max_seq_len - prefix_cost

    runs: list[tuple[int, list[str]]] = []
    for index, item in enumerate(listing.items):
        run = encode_item(item, listing.kind, config.max_enum_depth)
        if _cost(run, estimator) > item_budget:
            run = _truncate_item(listing, index, run, item_budget, estimator)
        runs.append((index, run))

    chunks: list[EncodedChunk] = []
    pending: list[tuple[int, list[str]]] = []
    pending_cost = 0

    def flush() -> None:
        nonlocal pending, pending_cost
        if not pending:
            return
        tokens = list(prefix)
        item_spans: dict[int, tuple[int, int]] = {}
        for index, run in pending:
            start = len(tokens)
            tokens.extend(run)
            item_spans[index] = (start, len(tokens))
        tokens.append(SEP)
        chunks.append(
            EncodedChunk(
                listing_id=listing.id,
                chunk_index=len(chunks),
                tokens=tuple(tokens),
                item_spans=item_spans,
            )
        )
        pending = []
        pending_cost = 0

    for index, run in runs:
        run_cost = _cost(run, estimator)
        if pending and (
            not config.chunking_enabled
            or len(pending) >= config.max_items_per_chunk
            or pending_cost + run_cost > item_budget
        ):
            flush()
        pending.append((index, run))
        pending_cost += run_cost
        if not config.chunking_enabled:
            flush()
    flush()
    return chunks


class ListingEncoder(BaseEstimator, TransformerMixin):
    """Stateless transformer from listings to encoded chunks.

    Parameters mirror :class:`EncoderConfig`; ``with_labels`` attaches gold
    token labels derived from each listing's subject mentions (``label_mode``
    selects typed or binary labels).  ``fit`` is a no-op so the encoder
    composes with scikit-learn pipelines.
    """

    def __init__(
        self,
        max_seq_len: int = 512,
        max_items_per_chunk: int = 20,
        max_enum_depth: int = 4,
        chunking_enabled: bool = True,
        length_estimator: Optional[Callable[[str], int]] = None,
        with_labels: bool = True,
        label_mode: str = "TYPED",
    ) -> None:
        self.max_seq_len = max_seq_len
        self.max_items_per_chunk = max_items_per_chunk
        self.max_enum_depth = max_enum_depth
        self.chunking_enabled = chunking_enabled
        self.length_estimator = length_estimator
        self.with_labels = with_labels
        self.label_mode = label_mode

    def _config(self) -> EncoderConfig:
        return EncoderConfig(
            max_seq_len=self.max_seq_len,
            max_items_per_chunk=self.max_items_per_chunk,
            length_estimator=self.length_estimator or default_length_estimator,
            max_enum_depth=self.max_enum_depth,
            chunking_enabled=self.chunking_enabled,
        )

    def fit(self, X: Iterable[Listing], y=None) -> "ListingEncoder":
        return self

    def transform(self, X: Iterable[Listing]) -> list[EncodedChunk]:
        from .distant import attach_gold_labels

        config = self._config()
        chunks: list[EncodedChunk] = []
        for listing in X:
            listing_chunks = chunk_listing(listing, config)
            if self.with_labels:
                listing_chunks = attach_gold_labels(listing_chunks, listing, self.label_mode)
            chunks.extend(listing_chunks)
        return chunks
