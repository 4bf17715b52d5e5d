import numpy as np

from sedet import io as records
from sedet.aggregate import ExtractedMention, PredictionRecord
from sedet.encoding import EncodedChunk
from sedet.types import EntityType, TokenLabel

from conftest import random_listing


class TestListingRoundTrip:
    def test_random_listings(self, tmp_path):
        rng = np.random.default_rng(3)
        listings = [random_listing(rng, f"l{i}") for i in range(40)]
        path = tmp_path / "corpus.jsonl"
        assert records.write_listings(path, listings) == 40
        assert list(records.read_listings(path)) == listings

    def test_field_names(self, discography_enum, tmp_path):
        record = records.listing_to_record(discography_enum)
        assert set(record) == {"id", "kind", "context", "items"}
        assert set(record["context"]) == {"page_title", "section_path", "header_cells"}
        assert set(record["items"][0]) == {"cells", "depth", "mentions"}
        assert set(record["items"][0]["mentions"][0]) == {
            "cell_index", "start_word", "end_word", "surface",
            "entity_id", "label", "is_subject",
        }


class TestChunkRoundTrip:
    def test_chunk(self, tmp_path):
        chunk = EncodedChunk(
            listing_id="l0",
            chunk_index=0,
            tokens=("[CLS]", "T", "[CXE]", "[E1]", "a", "b", "[SEP]"),
            item_spans={0: (3, 6)},
            labels=(
                TokenLabel.IGNORE, TokenLabel.IGNORE, TokenLabel.IGNORE,
                TokenLabel.IGNORE, TokenLabel.PERSON, TokenLabel.NONE, TokenLabel.IGNORE,
            ),
        )
        path = tmp_path / "chunks.jsonl"
        records.write_chunks(path, [chunk])
        (loaded,) = records.read_chunks(path)
        assert loaded == chunk
        # JSON object keys are strings; indices must come back as ints
        assert list(loaded.item_spans) == [0]

    def test_chunk_without_labels(self, tmp_path):
        chunk = EncodedChunk(
            listing_id="l0", chunk_index=0,
            tokens=("[CLS]", "[CXE]", "[E1]", "x", "[SEP]"),
            item_spans={0: (2, 4)},
        )
        path = tmp_path / "chunks.jsonl"
        records.write_chunks(path, [chunk])
        (loaded,) = records.read_chunks(path)
        assert loaded.labels is None


class TestPredictionAndMentionRoundTrip:
    def test_prediction(self, tmp_path):
        prediction = PredictionRecord(
            listing_id="l0", chunk_index=2,
            labels=(TokenLabel.IGNORE, TokenLabel.ORG, TokenLabel.NONE),
        )
        path = tmp_path / "preds.jsonl"
        records.write_predictions(path, [prediction])
        assert list(records.read_predictions(path)) == [prediction]

    def test_mention(self, tmp_path):
        mention = ExtractedMention(
            listing_id="l0", item_index=3, start_word=0, end_word=2,
            surface="a b", label=EntityType.GPE, linked_entity=None,
        )
        path = tmp_path / "mentions.jsonl"
        records.write_mentions(path, [mention])
        assert list(records.read_mentions(path)) == [mention]


class TestKbLoading:
    def test_kb_and_targets(self, tmp_path):
        kb_path = tmp_path / "kb.jsonl"
        kb_path.write_text(
            '{"entity": "e1", "classes": ["Writer"]}\n'
            '{"entity": "e1", "classes": ["Musician"]}\n'
            '{"disjoint": ["Person", "Place"]}\n'
            '{"subclass": ["Writer", "Person"]}\n',
            "utf-8",
        )
        kb = records.load_type_kb(kb_path)
        assert kb.entity_types["e1"] == {"Writer", "Musician"}
        assert frozenset(("Person", "Place")) in kb.disjoint_pairs
        assert kb.subclass_of["Writer"] == {"Person"}

        targets_path = tmp_path / "targets.tsv"
        targets_path.write_text("List of writers\tWriter\nList of lakes\tLake\n", "utf-8")
        targets = records.load_targets(targets_path)
        assert targets["List of writers"].token_type is EntityType.PERSON
        # unmapped classes fall back to OTHER
        assert targets["List of lakes"].token_type is EntityType.OTHER
