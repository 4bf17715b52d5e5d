import logging

import numpy as np
import pytest

from sedet.encoding import (
    EncodedChunk,
    EncoderConfig,
    ListingEncoder,
    chunk_listing,
    default_length_estimator,
    encode_context,
    encode_item,
    is_special_token,
)
from sedet.types import (
    Listing,
    ListingContext,
    ListingItem,
    ListingKind,
)

from conftest import random_listing


class TestEncodeContext:
    def test_enum_context(self, discography_enum):
        assert encode_context(discography_enum.context) == [
            "[CLS]", "Gilby", "Clarke", "[CXS]", "Discography",
            "[CXS]", "Albums", "with", "Guns", "N'", "Roses", "[CXE]",
        ]

    def test_table_context_with_header(self, discography_table):
        assert encode_context(discography_table.context) == [
            "[CLS]", "Gilby", "Clarke", "[CXS]", "Discography",
            "[CXS]", "Solo", "albums",
            "[CXS]", "[ROW]", "Name", "[COL]", "Year", "[CXE]",
        ]

    def test_bare_context(self):
        context = ListingContext(page_title="Some Page")
        assert encode_context(context) == ["[CLS]", "Some", "Page", "[CXE]"]


class TestEncodeItem:
    def test_enum_entry(self, discography_enum):
        assert encode_item(discography_enum.items[0], ListingKind.ENUM) == [
            "[E1]", "The", "Spaghetti", "Incident?", "(1993)",
        ]

    def test_table_row(self, discography_table):
        assert encode_item(discography_table.items[0], ListingKind.TABLE) == [
            "[ROW]", "Rubber", "[COL]", "1998",
        ]

    def test_depth_clamped(self):
        item = ListingItem(cells=("deep",), depth=7)
        assert encode_item(item, ListingKind.ENUM, max_enum_depth=4)[0] == "[E4]"


class TestChunkListing:
    def test_two_items_one_chunk(self, discography_enum):
        (chunk,) = chunk_listing(discography_enum)
        assert list(chunk.tokens) == [
            "[CLS]", "Gilby", "Clarke", "[CXS]", "Discography",
            "[CXS]", "Albums", "with", "Guns", "N'", "Roses", "[CXE]",
            "[E1]", "The", "Spaghetti", "Incident?", "(1993)",
            "[E1]", "Greatest", "Hits", "(1999)", "[SEP]",
        ]
        assert chunk.item_spans == {0: (12, 17), 1: (17, 21)}

    def test_table_one_chunk(self, discography_table):
        (chunk,) = chunk_listing(discography_table)
        assert list(chunk.tokens) == [
            "[CLS]", "Gilby", "Clarke", "[CXS]", "Discography",
            "[CXS]", "Solo", "albums", "[CXS]", "[ROW]", "Name", "[COL]", "Year", "[CXE]",
            "[ROW]", "Rubber", "[COL]", "1998",
            "[ROW]", "Swag", "[COL]", "2001", "[SEP]",
        ]

    def test_greedy_packing_by_item_cap(self):
        items = tuple(ListingItem(cells=(f"w{i}",)) for i in range(50))
        listing = Listing(
            id="l", kind=ListingKind.ENUM, context=ListingContext(page_title="P"), items=items
        )
        chunks = chunk_listing(listing, EncoderConfig(max_items_per_chunk=20))
        assert [len(c.item_spans) for c in chunks] == [20, 20, 10]
        assert [c.chunk_index for c in chunks] == [0, 1, 2]

    def test_chunking_disabled_one_item_per_chunk(self):
        items = tuple(ListingItem(cells=(f"w{i}",)) for i in range(5))
        listing = Listing(
            id="l", kind=ListingKind.ENUM, context=ListingContext(page_title="P"), items=items
        )
        chunks = chunk_listing(listing, EncoderConfig(chunking_enabled=False))
        assert len(chunks) == 5
        for chunk in chunks:
            assert len(chunk.item_spans) == 1

    def test_budget_forces_new_chunk(self):
        # context + [SEP] cost 3; each item costs 1 + 2*3 = 7; budget 20 fits two items
        items = tuple(ListingItem(cells=("a b c",)) for _ in range(5))
        listing = Listing(
            id="l", kind=ListingKind.ENUM, context=ListingContext(page_title="P"), items=items
        )
        chunks = chunk_listing(listing, EncoderConfig(max_seq_len=20))
        assert [len(c.item_spans) for c in chunks] == [2, 2, 1]

    def test_oversized_item_truncated_with_diagnostic(self, caplog):
        listing = Listing(
            id="l",
            kind=ListingKind.ENUM,
            context=ListingContext(page_title="P"),
            items=(ListingItem(cells=(" ".join(["w"] * 50),)),),
        )
        with caplog.at_level(logging.WARNING):
            (chunk,) = chunk_listing(listing, EncoderConfig(max_seq_len=16))
        assert "truncated" in caplog.text
        total = sum(default_length_estimator(t) for t in chunk.tokens)
        assert total <= 16
        assert chunk.tokens[-1] == "[SEP]"

    def test_context_too_large_raises(self):
        listing = Listing(
            id="l",
            kind=ListingKind.ENUM,
            context=ListingContext(page_title=" ".join(["t"] * 40)),
            items=(ListingItem(cells=("x",)),),
        )
        with pytest.raises(ValueError, match="no room"):
            chunk_listing(listing, EncoderConfig(max_seq_len=16))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EncoderConfig(max_seq_len=8)

    def test_custom_length_estimator(self):
        # a cost-4-per-word estimator halves how many items fit per chunk
        def heavy(token: str) -> int:
            return 1 if is_special_token(token) else 4

        items = tuple(ListingItem(cells=("a b",)) for _ in range(4))
        listing = Listing(
            id="l", kind=ListingKind.ENUM, context=ListingContext(page_title="P"), items=items
        )
        default = chunk_listing(listing, EncoderConfig(max_seq_len=24))
        custom = chunk_listing(listing, EncoderConfig(max_seq_len=24, length_estimator=heavy))
        assert len(custom) > len(default)
        for chunk in custom:
            assert sum(heavy(t) for t in chunk.tokens) <= 24


def reconstruct_items(chunks: list[EncodedChunk]) -> dict[int, list[str]]:
    """Round-trip decode: item words from the chunks' span maps."""
    words: dict[int, list[str]] = {}
    for chunk in chunks:
        for item_index, (start, end) in chunk.item_spans.items():
            assert item_index not in words, "item split across chunks"
            words[item_index] = [
                t for t in chunk.tokens[start:end] if not is_special_token(t)
            ]
    return words


class TestChunkInvariants:
    def test_randomized_listings(self):
        # budget chosen so any single random item fits but several do not,
        # forcing multi-chunk listings without ever hitting truncation
        rng = np.random.default_rng(11)
        config = EncoderConfig(max_seq_len=96, max_items_per_chunk=5)
        for i in range(300):
            listing = random_listing(rng, f"l{i}", max_items=15)
            chunks = chunk_listing(listing, config)
            assert chunks, "every listing yields at least one chunk"

            prefix = None
            for chunk in chunks:
                tokens = list(chunk.tokens)
                assert tokens[0] == "[CLS]"
                assert tokens[-1] == "[SEP]"
                assert tokens.count("[CXE]") == 1
                cxe = tokens.index("[CXE]")
                if prefix is None:
                    prefix = tokens[: cxe + 1]
                assert tokens[: cxe + 1] == prefix, "context prefix differs"

                total = sum(config.length_estimator(t) for t in tokens)
                assert total <= config.max_seq_len

                spans = [chunk.item_spans[k] for k in sorted(chunk.item_spans)]
                assert spans[0][0] == cxe + 1
                assert spans[-1][1] == len(tokens) - 1
                for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
                    assert e1 == s2, "item spans must tile the item region"

            assert [c.chunk_index for c in chunks] == list(range(len(chunks)))
            covered = sorted(k for c in chunks for k in c.item_spans)
            assert covered == list(range(len(listing.items)))

            words = reconstruct_items(chunks)
            for item_index, item in enumerate(listing.items):
                assert tuple(words[item_index]) == item.words

    def test_chunking_toggle_counts(self):
        rng = np.random.default_rng(5)
        for i in range(50):
            listing = random_listing(rng, f"l{i}", max_items=8)
            chunks = chunk_listing(listing, EncoderConfig(chunking_enabled=False))
            assert len(chunks) == len(listing.items)


class TestListingEncoder:
    def test_transform_attaches_labels(self, discography_enum):
        encoder = ListingEncoder()
        (chunk,) = encoder.transform([discography_enum])
        assert chunk.labels is not None
        assert len(chunk.labels) == len(chunk.tokens)

    def test_no_labels_mode(self, discography_enum):
        encoder = ListingEncoder(with_labels=False)
        (chunk,) = encoder.transform([discography_enum])
        assert chunk.labels is None

    def test_get_params_round_trip(self):
        encoder = ListingEncoder(max_seq_len=128, chunking_enabled=False)
        params = encoder.get_params()
        clone = ListingEncoder(**params)
        assert clone.get_params() == params
