"""Noisy fine-tuning cycle on page listings.

A model trained on distantly-supervised list pages predicts subject
entities on arbitrary page chunks; the pipeline's aggregator keeps only
listings where every predicted mention shares one type and converts them
back into gold-labeled chunks; one further fine-tuning epoch on that noisy
set produces the final model.

The aggregation runs through the upstream pipeline CLI (``python -m
sedet``), keeping this package coupled only to the wire formats.
"""
from __future__ import annotations

import logging
import subprocess
import sys
from pathlib import Path

from .model import TrainConfig
from .predict import predict_file
from .train import fine_tune
from .wire import read_chunks

logger = logging.getLogger(__name__)


class EmptyNoisySetError(RuntimeError):
    """The single-type filter removed every listing; nothing to train on."""


def run_aggregator(
    chunks_path: Path, predictions_path: Path, workdir: Path, keep_empty: bool = False
) -> tuple[Path, Path]:
    """Invoke the pipeline CLI to filter predictions and relabel chunks."""
    mentions_path = workdir / "noisy_mentions.jsonl"
    labeled_path = workdir / "noisy_chunks.jsonl"
    command = [
        sys.executable, "-m", "sedet", "aggregate",
        "--chunks", str(chunks_path),
        "--preds", str(predictions_path),
        "--out", str(mentions_path),
        "--single-type-only",
        "--labeled-chunks-out", str(labeled_path),
    ]
    if keep_empty:
        command.append("--keep-empty-listings")
    result = subprocess.run(command, capture_output=True, text=True)
    if result.returncode != 0:
        raise RuntimeError(f"aggregator failed:\n{result.stderr}")
    return mentions_path, labeled_path


def noisy_finetune_cycle(
    lp_model: str | Path,
    page_chunks: str | Path,
    workdir: str | Path,
    out_dir: str | Path,
    config: TrainConfig | None = None,
    stub: str | None = None,
    keep_empty: bool = False,
) -> dict:
    """Predict, filter, relabel, and fine-tune for one extra round.

    ``stub="echo-gold"`` skips model inference and echoes the chunks' gold
    labels, which exercises the filter path deterministically.  Raises
    :class:`EmptyNoisySetError` when no listing survives the filter.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    config = config or TrainConfig(epochs=1)

    predictions_path = workdir / "noisy_predictions.jsonl"
    predict_file(
        page_chunks,
        predictions_path,
        model_dir=None if stub else lp_model,
        stub=stub,
        max_length=config.max_length,
    )

    _, labeled_path = run_aggregator(
        Path(page_chunks), predictions_path, workdir, keep_empty
    )
    noisy_chunks = list(read_chunks(labeled_path))
    if not noisy_chunks:
        raise EmptyNoisySetError(
            "no listings survived the single-type filter; cannot fine-tune"
        )
    logger.info("fine-tuning on %d noisy chunks", len(noisy_chunks))

    log = fine_tune(noisy_chunks, config, out_dir, init_from=lp_model)
    log["noisy_chunks_file"] = str(labeled_path)
    return log
