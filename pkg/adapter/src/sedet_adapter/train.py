"""Fine-tuning loop for the token classifier.

Plain AdamW with a constant learning rate (no warmup, no weight decay
unless configured), cross-entropy over subword labels with IGNORE
positions masked out.  The per-epoch average loss is recorded in the
artifact's training log.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .align import LOSS_MASK, align_chunks, training_label_ids
from .model import TrainConfig, resolve_model, save_artifact
from .wire import Chunk

logger = logging.getLogger(__name__)


def _batches(count: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(count)
    for start in range(0, count, batch_size):
        yield [int(i) for i in order[start : start + batch_size]]


def batch_tensors(
    chunks: Sequence[Chunk], tokenizer, label2id: dict[str, int], max_length: int
):
    """(input_ids, attention_mask, label_ids) for one batch of gold chunks."""
    aligned = align_chunks(chunks, tokenizer, max_length)
    rows = []
    width = aligned.input_ids.shape[1]
    for chunk, word_map in zip(chunks, aligned.word_maps):
        ids = training_label_ids(chunk, word_map, label2id)
        ids.extend([LOSS_MASK] * (width - len(ids)))
        rows.append(ids)
    return aligned.input_ids, aligned.attention_mask, torch.tensor(rows, dtype=torch.long)


def fine_tune(
    chunks: Sequence[Chunk],
    config: TrainConfig,
    out_dir: str | Path,
    init_from: str | Path | None = None,
) -> dict:
    """Train on gold-labeled chunks and save the artifact; returns the log."""
    chunks = list(chunks)
    if not chunks:
        raise ValueError("no training chunks")

    torch.manual_seed(config.seed)
    model, tokenizer = resolve_model(config, chunks, init_from)
    label2id = model.config.label2id
    missing = {
        l for c in chunks for l in (c.labels or ()) if l != "IGNORE" and l not in label2id
    }
    if missing:
        raise ValueError(f"labels not in the model's vocabulary: {sorted(missing)}")

    optimizer = torch.optim.AdamW(
        model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )
    rng = np.random.default_rng(config.seed)
    model.train()

    epoch_losses = []
    for epoch in range(config.epochs):
        total = 0.0
        steps = 0
        for batch_indices in _batches(len(chunks), config.batch_size, rng):
            batch = [chunks[i] for i in batch_indices]
            input_ids, attention_mask, labels = batch_tensors(
                batch, tokenizer, label2id, config.max_length
            )
            optimizer.zero_grad()
            output = model(input_ids=input_ids, attention_mask=attention_mask, labels=labels)
            output.loss.backward()
            optimizer.step()
            total += float(output.loss.detach())
            steps += 1
        epoch_losses.append(total / steps)
        logger.info("epoch %d/%d: loss %.4f", epoch + 1, config.epochs, epoch_losses[-1])

    log = {
        "config": config.to_dict(),
        "init_from": str(init_from) if init_from is not None else None,
        "chunks": len(chunks),
        "epoch_losses": epoch_losses,
    }
    save_artifact(model, tokenizer, out_dir, log)
    return log
