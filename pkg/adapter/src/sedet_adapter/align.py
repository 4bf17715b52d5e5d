"""Word-to-subword alignment between chunk tokens and the model tokenizer.

Chunks arrive as whitespace words including literal structural markers
(``[CLS]``, ``[E1]``, ...).  Those markers must be registered as special
vocabulary entries so they survive tokenization as single reserved ids.
For training, a word's label propagates to every one of its subwords (with
IGNORE positions masked out of the loss); at inference a word's label is its
first subword's prediction, so align-then-collapse is the identity on label
sequences.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import torch

from .wire import IGNORE, Chunk, is_special_token

logger = logging.getLogger(__name__)

LOSS_MASK = -100


class UnregisteredSpecialTokenError(ValueError):
    """A structural marker is not a reserved tokenizer vocabulary entry."""


def check_special_tokens(tokens: Sequence[str], tokenizer) -> None:
    registered = set(tokenizer.all_special_tokens)
    for token in tokens:
        if is_special_token(token) and _map_marker(token, tokenizer) not in registered:
            raise UnregisteredSpecialTokenError(
                f"special token {token} is not registered with the tokenizer"
            )


def _map_marker(token: str, tokenizer) -> str:
    """Map wire-format [CLS]/[SEP] onto the tokenizer's own sentinel names."""
    if token == "[CLS]":
        return tokenizer.cls_token or token
    if token == "[SEP]":
        return tokenizer.sep_token or token
    return token


@dataclass
class AlignedBatch:
    """Tokenized chunks plus the subword-to-chunk-token mapping."""

    input_ids: torch.Tensor
    attention_mask: torch.Tensor
    word_maps: list[list[Optional[int]]]
    word_counts: list[int]


def align_chunks(chunks: Sequence[Chunk], tokenizer, max_length: int = 512) -> AlignedBatch:
    """Tokenize a batch of chunks, keeping the word alignment.

    Words beyond the model's hard length limit are truncated with a
    diagnostic; their positions later collapse to IGNORE.
    """
    word_lists = []
    for chunk in chunks:
        check_special_tokens(chunk.tokens, tokenizer)
        word_lists.append([_map_marker(t, tokenizer) for t in chunk.tokens])

    encoding = tokenizer(
        word_lists,
        is_split_into_words=True,
        add_special_tokens=False,
        padding="longest",
        truncation=True,
        max_length=max_length,
        return_tensors="pt",
    )
    word_maps = []
    word_counts = []
    for i, chunk in enumerate(chunks):
        word_map = list(encoding.word_ids(i))
        word_maps.append(word_map)
        word_counts.append(len(chunk.tokens))
        seen = {w for w in word_map if w is not None}
        lost = len(chunk.tokens) - len(seen)
        if lost:
            logger.warning(
                "%s chunk %d: %d words truncated at the model length limit",
                chunk.listing_id,
                chunk.chunk_index,
                lost,
            )
    return AlignedBatch(
        input_ids=encoding["input_ids"],
        attention_mask=encoding["attention_mask"],
        word_maps=word_maps,
        word_counts=word_counts,
    )


def propagate_labels(
    labels: Sequence[str],
    word_map: Sequence[Optional[int]],
) -> list[str]:
    """Word labels copied onto every subword (identity-check variant)."""
    return [IGNORE if w is None else labels[w] for w in word_map]


def training_label_ids(
    chunk: Chunk,
    word_map: Sequence[Optional[int]],
    label2id: dict[str, int],
) -> list[int]:
    """Subword label ids for the loss; IGNORE positions are masked out.

    Masking is structural: context positions (outside the item spans) and
    structural markers never contribute to the loss, regardless of the label
    value they carry, so the loss is invariant to label perturbations at
    IGNORE positions.
    """
    if chunk.labels is None:
        raise ValueError(f"chunk {chunk.listing_id}/{chunk.chunk_index} has no gold labels")
    item_positions = chunk.item_positions()
    ids = []
    for w in word_map:
        if w is None:
            ids.append(LOSS_MASK)
            continue
        label = chunk.labels[w]
        structural = w not in item_positions or is_special_token(chunk.tokens[w])
        if structural or label == IGNORE:
            ids.append(LOSS_MASK)
        else:
            ids.append(label2id[label])
    return ids


def collapse_first_subword(
    subword_labels: Sequence[str],
    word_map: Sequence[Optional[int]],
    word_count: int,
) -> list[str]:
    """Word labels from subword labels: each word takes its first subword.

    Words without any surviving subword (truncation) come back as IGNORE.
    """
    out: list[Optional[str]] = [None] * word_count
    for label, w in zip(subword_labels, word_map):
        if w is not None and out[w] is None:
            out[w] = label
    return [IGNORE if label is None else label for label in out]
