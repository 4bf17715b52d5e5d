"""Synthetic negative listings assembled from shuffled positives.

A negative takes its context from one positive listing and its items from
other positives, so the items lack the coherence of a real listing.  Tables
are only assembled within groups of equal column count to keep rows
consistent.  Every mention in a synthetic listing is stripped of subject
flags and labels; the gold token label of every item word is therefore NONE.

Sampling is driven by a seeded 64-bit PCG64 generator so that identical
inputs and configuration produce byte-identical output on any platform.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .types import Listing, ListingContext, ListingItem, ListingKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplerConfig:
    """Negative-sampling knobs.

    ``proportion`` ranges from 0.0 (no negatives) to 1.0 (as many negatives
    as positives); each synthetic listing receives between ``min_items`` and
    ``max_items`` items, the upper bound matching the encoder's per-chunk
    item cap.
    """

    proportion: float = 0.5
    seed: int = 0
    min_items: int = 3
    max_items: int = 20

    def __post_init__(self) -> None:
        if not 0.0 <= self.proportion <= 1.0:
            raise ValueError(f"proportion must be in [0, 1], got {self.proportion}")
        if self.min_items > self.max_items:
            raise ValueError("min_items must be <= max_items")


def _neutral_item(item: ListingItem) -> ListingItem:
    """Copy of an item with subject flags and labels cleared."""
    mentions = tuple(replace(m, is_subject=False, label=None) for m in item.mentions)
    return replace(item, mentions=mentions)


def _donor_pools(
    positives: Sequence[Listing], min_items: int
) -> list[tuple[int, list[tuple[int, int]]]]:
    """(context donor index, item pool) pairs for every eligible positive.

    The item pool holds (listing index, item index) pairs drawn from other
    listings of the same kind; for tables, only listings with the donor's
    column count qualify.  Donors whose pool cannot fill a minimal listing
    are dropped with a diagnostic.
    """
    enums = [i for i, l in enumerate(positives) if l.kind is ListingKind.ENUM]
    tables_by_width: dict[int, list[int]] = {}
    for i, listing in enumerate(positives):
        if listing.kind is ListingKind.TABLE:
            width = len(listing.items[0].cells) if listing.items else 0
            tables_by_width.setdefault(width, []).append(i)

    for width, group in sorted(tables_by_width.items()):
        if len(group) < 2:
            logger.warning(
                "no table group of size >= 2 for column count %d: table negatives skipped",
                width,
            )

    pools: list[tuple[int, list[tuple[int, int]]]] = []
    for donor in range(len(positives)):
        listing = positives[donor]
        if listing.kind is ListingKind.ENUM:
            group = enums
        else:
            width = len(listing.items[0].cells) if listing.items else 0
            group = tables_by_width.get(width, [])
        pool = [
            (other, item_index)
            for other in group
            if other != donor
            for item_index in range(len(positives[other].items))
        ]
        if len(pool) >= min_items:
            pools.append((donor, pool))
    return pools


def sample_negatives(positives: Sequence[Listing], config: SamplerConfig) -> list[Listing]:
    """Emit ``floor(proportion * len(positives))`` synthetic negative listings.

    Each negative copies the context of a uniformly chosen donor and samples
    its items (without replacement within one listing) from the pools built
    by :func:`_donor_pools`.  Output is deterministic for a given seed.
    """
    positives = list(positives)
    # guard against float error so e.g. 0.3 * 10 still floors to 3
    count = math.floor(config.proportion * len(positives) + 1e-9)
    if count == 0:
        return []
    if not positives:
        raise ValueError("cannot sample negatives from an empty positive set")

    pools = _donor_pools(positives, config.min_items)
    if not pools:
        logger.warning("no eligible donors for negative sampling; nothing emitted")
        return []

    rng = np.random.default_rng(config.seed)
    negatives: list[Listing] = []
    for n in range(count):
        donor, pool = pools[int(rng.integers(len(pools)))]
        context_listing = positives[donor]
        k = int(rng.integers(config.min_items, config.max_items + 1))
        k = min(k, len(pool))
        chosen = rng.choice(len(pool), size=k, replace=False)
        items = tuple(
            _neutral_item(positives[listing_index].items[item_index])
            for listing_index, item_index in (pool[int(c)] for c in chosen)
        )
        context = ListingContext(
            page_title=context_listing.context.page_title,
            section_path=context_listing.context.section_path,
            header_cells=context_listing.context.header_cells,
        )
        negatives.append(
            Listing(
                id=f"negative#{n:05d}",
                kind=context_listing.kind,
                context=context,
                items=items,
            )
        )
    return negatives


class ShuffledListingSampler(BaseEstimator, TransformerMixin):
    """Transformer emitting synthetic negatives for a positive training set."""

    def __init__(
        self,
        proportion: float = 0.5,
        seed: int = 0,
        min_items: int = 3,
        max_items: int = 20,
    ) -> None:
        self.proportion = proportion
        self.seed = seed
        self.min_items = min_items
        self.max_items = max_items

    def _config(self) -> SamplerConfig:
        return SamplerConfig(
            proportion=self.proportion,
            seed=self.seed,
            min_items=self.min_items,
            max_items=self.max_items,
        )

    def fit(self, X: Iterable[Listing], y=None) -> "ShuffledListingSampler":
        return self

    def transform(self, X: Iterable[Listing]) -> list[Listing]:
        return sample_negatives(list(X), self._config())
