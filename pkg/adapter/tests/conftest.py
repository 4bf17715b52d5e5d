"""Synthetic patterned chunk fixtures: the subject entity is always the
first two words of each item, typed PERSON."""
from __future__ import annotations

import numpy as np
import pytest

from sedet_adapter.wire import Chunk

FIRST = ["Alda", "Brin", "Cora", "Dane", "Elio", "Fern", "Gale", "Hollis", "Iris", "Jude"]
LAST = ["Ames", "Boone", "Cole", "Drake", "Ellis", "Frost", "Gray", "Hale", "Irwin", "Jetty"]
TAIL = ["won", "the", "cup", "in", "overtime", "series", "final", "derby", "match", "season"]


def pick(rng: np.random.Generator, pool: list[str]) -> str:
    return pool[int(rng.integers(0, len(pool)))]


def patterned_chunk(
    rng: np.random.Generator,
    listing_id: str,
    n_items: int = 4,
    tail_words: tuple[int, int] = (1, 3),
) -> Chunk:
    """Enumeration chunk whose items start with a two-word PERSON subject."""
    tokens = ["[CLS]", "Team", f"Page{int(rng.integers(100))}", "[CXS]", "Roster", "[CXE]"]
    labels = ["IGNORE"] * len(tokens)
    spans = {}
    for i in range(n_items):
        start = len(tokens)
        name = [pick(rng, FIRST), pick(rng, LAST)]
        tail = [pick(rng, TAIL) for _ in range(int(rng.integers(tail_words[0], tail_words[1] + 1)))]
        tokens.extend(["[E1]"] + name + tail)
        labels.extend(["IGNORE"] + ["PERSON"] * 2 + ["NONE"] * len(tail))
        spans[i] = (start, len(tokens))
    tokens.append("[SEP]")
    labels.append("IGNORE")
    return Chunk(
        listing_id=listing_id,
        chunk_index=0,
        tokens=tuple(tokens),
        item_spans=spans,
        labels=tuple(labels),
    )


def patterned_corpus(rng: np.random.Generator, count: int, prefix: str = "c") -> list[Chunk]:
    return [patterned_chunk(rng, f"{prefix}{i:04d}") for i in range(count)]


@pytest.fixture(scope="session")
def trained_tiny_model(tmp_path_factory):
    """A tiny model fine-tuned once per session on the patterned corpus."""
    from sedet_adapter.model import TrainConfig
    from sedet_adapter.train import fine_tune

    rng = np.random.default_rng(42)
    chunks = patterned_corpus(rng, 200, prefix="train")
    out = tmp_path_factory.mktemp("model") / "tiny"
    config = TrainConfig(
        base_model="tiny", epochs=5, batch_size=16, learning_rate=1e-3,
        seed=0, max_length=128,
    )
    log = fine_tune(chunks, config, out)
    return {"dir": out, "log": log, "config": config}
