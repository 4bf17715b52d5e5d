"""Shared fixtures: the discography running example and random-listing generators."""
from __future__ import annotations

import numpy as np
import pytest

from sedet.types import (
    EntityMention,
    EntityType,
    Listing,
    ListingContext,
    ListingItem,
    ListingKind,
)

WORD_POOL = [
    "alder", "birch", "cedar", "delta", "ember", "falcon", "garnet", "harbor",
    "indigo", "juniper", "krill", "lumen", "maple", "nectar", "onyx", "prairie",
    "quartz", "raven", "sable", "tundra", "umber", "vortex", "willow", "zephyr",
]

TYPE_POOL = [EntityType.PERSON, EntityType.ORG, EntityType.WORK_OF_ART, EntityType.GPE]


@pytest.fixture
def discography_enum() -> Listing:
    """Enumeration of two albums under a heading chain."""
    return Listing(
        id="Gilby Clarke#0000",
        kind=ListingKind.ENUM,
        context=ListingContext(
            page_title="Gilby Clarke",
            section_path=("Discography", "Albums with Guns N' Roses"),
        ),
        items=(
            ListingItem(
                cells=("The Spaghetti Incident? (1993)",),
                depth=1,
                mentions=(
                    EntityMention(
                        cell_index=0,
                        start_word=0,
                        end_word=3,
                        surface="The Spaghetti Incident?",
                        entity_id="The Spaghetti Incident?",
                        label=EntityType.WORK_OF_ART,
                        is_subject=True,
                    ),
                ),
            ),
            ListingItem(
                cells=("Greatest Hits (1999)",),
                depth=1,
                mentions=(
                    EntityMention(
                        cell_index=0,
                        start_word=0,
                        end_word=2,
                        surface="Greatest Hits",
                        entity_id="Greatest Hits (Guns N' Roses album)",
                        label=EntityType.WORK_OF_ART,
                        is_subject=True,
                    ),
                ),
            ),
        ),
    )


@pytest.fixture
def discography_table() -> Listing:
    """Two-column solo-albums table with a header row."""
    return Listing(
        id="Gilby Clarke#0001",
        kind=ListingKind.TABLE,
        context=ListingContext(
            page_title="Gilby Clarke",
            section_path=("Discography", "Solo albums"),
            header_cells=("Name", "Year"),
        ),
        items=(
            ListingItem(
                cells=("Rubber", "1998"),
                mentions=(
                    EntityMention(
                        cell_index=0,
                        start_word=0,
                        end_word=1,
                        surface="Rubber",
                        entity_id="Rubber (album)",
                        label=EntityType.WORK_OF_ART,
                        is_subject=True,
                    ),
                ),
            ),
            ListingItem(
                cells=("Swag", "2001"),
                mentions=(
                    EntityMention(
                        cell_index=0,
                        start_word=0,
                        end_word=1,
                        surface="Swag",
                        entity_id="Swag (Gilby Clarke album)",
                        label=EntityType.WORK_OF_ART,
                        is_subject=True,
                    ),
                ),
            ),
        ),
    )


def random_words(rng: np.random.Generator, low: int = 1, high: int = 6) -> list[str]:
    count = int(rng.integers(low, high + 1))
    return [WORD_POOL[int(i)] for i in rng.integers(0, len(WORD_POOL), size=count)]


def random_item(
    rng: np.random.Generator,
    kind: ListingKind,
    width: int,
    with_subject: bool,
) -> ListingItem:
    if kind is ListingKind.ENUM:
        cells = [" ".join(random_words(rng, 2, 8))]
        depth = int(rng.integers(1, 7))
    else:
        cells = [" ".join(random_words(rng, 1, 4)) for _ in range(width)]
        depth = 1

    mentions = []
    if with_subject and rng.random() < 0.8:
        cell_index = 0
        words = cells[cell_index].split()
        start = int(rng.integers(0, len(words)))
        end = int(rng.integers(start + 1, len(words) + 1))
        mentions.append(
            EntityMention(
                cell_index=cell_index,
                start_word=start,
                end_word=end,
                surface=" ".join(words[start:end]),
                entity_id=f"entity-{int(rng.integers(0, 10_000))}",
                label=TYPE_POOL[int(rng.integers(0, len(TYPE_POOL)))],
                is_subject=True,
            )
        )
    return ListingItem(cells=tuple(cells), depth=depth, mentions=tuple(mentions))


def build_list_page_fixture(
    root,
    n_pages: int = 5,
    listings_per_page: int = 2,
    items_per_listing: int = 5,
    seed: int = 0,
) -> dict:
    """Write a small list-page corpus: page files, knowledge base, targets.

    Every page alternates enumeration and table listings.  Roughly 80% of
    items link a Writer entity (positive), 10% a Lake (negative via the
    Person/Place disjointness), and 10% an entity unknown to the KB.
    """
    rng = np.random.default_rng(seed)
    pages_dir = root / "pages"
    pages_dir.mkdir(parents=True, exist_ok=True)

    kb_lines = [
        '{"subclass": ["Writer", "Person"]}',
        '{"subclass": ["Lake", "Place"]}',
        '{"disjoint": ["Person", "Place"]}',
    ]
    target_lines = []

    def display_name() -> str:
        words = random_words(rng, 1, 3)
        return " ".join(w.capitalize() for w in words)

    for p in range(n_pages):
        title = f"List of group {p}"
        target_lines.append(f"{title}\tWriter")
        body = []
        for l in range(listings_per_page):
            body.append(f"== Section {l} ==")
            entries = []
            for i in range(items_per_listing):
                entity_id = f"E{p}-{l}-{i}"
                draw = rng.random()
                if draw < 0.8:
                    kb_lines.append(f'{{"entity": "{entity_id}", "classes": ["Writer"]}}')
                elif draw < 0.9:
                    kb_lines.append(f'{{"entity": "{entity_id}", "classes": ["Lake"]}}')
                # else: unknown entity, no KB record
                entries.append((entity_id, display_name(), 1990 + i))
            if l % 2 == 0:
                for entity_id, name, year in entries:
                    body.append(f"* [[{entity_id}|{name}]] ({year})")
            else:
                body.append('{| class="wikitable"')
                body.append("! Name !! Year")
                for entity_id, name, year in entries:
                    body.append("|-")
                    body.append(f"| [[{entity_id}|{name}]] || {year}")
                body.append("|}")
            body.append("")
        (pages_dir / f"{title}.txt").write_text("\n".join(body), "utf-8")

    kb_path = root / "kb.jsonl"
    kb_path.write_text("\n".join(kb_lines) + "\n", "utf-8")
    targets_path = root / "targets.tsv"
    targets_path.write_text("\n".join(target_lines) + "\n", "utf-8")
    return {"pages": pages_dir, "kb": kb_path, "targets": targets_path}


def random_listing(
    rng: np.random.Generator,
    listing_id: str,
    with_subjects: bool = True,
    max_items: int = 12,
) -> Listing:
    kind = ListingKind.ENUM if rng.random() < 0.5 else ListingKind.TABLE
    width = int(rng.integers(2, 5)) if kind is ListingKind.TABLE else 1
    item_count = int(rng.integers(3, max_items + 1))
    items = tuple(random_item(rng, kind, width, with_subjects) for _ in range(item_count))
    header = None
    if kind is ListingKind.TABLE and rng.random() < 0.7:
        header = tuple(" ".join(random_words(rng, 1, 2)) for _ in range(width))
    context = ListingContext(
        page_title=f"Page {int(rng.integers(0, 50))}",
        section_path=tuple(" ".join(random_words(rng, 1, 3)) for _ in range(int(rng.integers(0, 3)))),
        header_cells=header,
    )
    return Listing(id=listing_id, kind=kind, context=context, items=items)
