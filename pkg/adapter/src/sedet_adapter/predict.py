"""Batch inference: chunks in, per-token label records out.

A word's label is its first subword's prediction.  Structural markers and
positions outside the item spans are reported as IGNORE, matching the gold
annotation convention.  ``echo-gold`` stub mode copies the chunks' gold
labels instead of running a model, which lets the rest of the pipeline be
exercised without training.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import torch

from .align import align_chunks, collapse_first_subword
from .model import load_artifact, model_labels
from .wire import IGNORE, Chunk, Prediction, is_special_token, write_predictions

logger = logging.getLogger(__name__)


def _tidy(chunk: Chunk, word_labels: Sequence[str]) -> list[str]:
    """Force IGNORE outside item spans and on structural markers."""
    item_positions = chunk.item_positions()
    return [
        IGNORE
        if position not in item_positions or is_special_token(token)
        else word_labels[position]
        for position, token in enumerate(chunk.tokens)
    ]


def predict_chunks(
    chunks: Sequence[Chunk], model, tokenizer, batch_size: int = 32, max_length: int = 512
) -> Iterator[Prediction]:
    labels = model_labels(model)
    model.eval()
    for start in range(0, len(chunks), batch_size):
        batch = chunks[start : start + batch_size]
        aligned = align_chunks(batch, tokenizer, max_length)
        with torch.no_grad():
            logits = model(
                input_ids=aligned.input_ids, attention_mask=aligned.attention_mask
            ).logits
        predicted = logits.argmax(dim=-1)
        for i, chunk in enumerate(batch):
            subword_labels = [labels[int(p)] for p in predicted[i]]
            word_labels = collapse_first_subword(
                subword_labels, aligned.word_maps[i], aligned.word_counts[i]
            )
            yield Prediction(
                listing_id=chunk.listing_id,
                chunk_index=chunk.chunk_index,
                labels=tuple(_tidy(chunk, word_labels)),
            )


def echo_gold(chunks: Iterable[Chunk]) -> Iterator[Prediction]:
    """Stub predictor: return the gold labels unchanged."""
    for chunk in chunks:
        if chunk.labels is None:
            raise ValueError(
                f"chunk {chunk.listing_id}/{chunk.chunk_index} has no gold labels to echo"
            )
        yield Prediction(
            listing_id=chunk.listing_id,
            chunk_index=chunk.chunk_index,
            labels=chunk.labels,
        )


def predict_file(
    chunks_path: str | Path,
    out_path: str | Path,
    model_dir: str | Path | None = None,
    stub: str | None = None,
    batch_size: int = 32,
    max_length: int = 512,
) -> int:
    from .wire import read_chunks

    chunks = list(read_chunks(chunks_path))
    if stub == "echo-gold":
        predictions = echo_gold(chunks)
    elif stub is not None:
        raise ValueError(f"unknown stub {stub!r}")
    else:
        if model_dir is None:
            raise ValueError("predict requires a model directory (or a stub)")
        model, tokenizer = load_artifact(model_dir)
        predictions = predict_chunks(chunks, model, tokenizer, batch_size, max_length)
    count = write_predictions(out_path, predictions)
    logger.info("wrote %d prediction records", count)
    return count
