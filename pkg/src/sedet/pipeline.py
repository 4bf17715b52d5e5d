"""End-to-end orchestration: dataset splits, run profiles, stage wiring.

A run executes the requested stages in canonical order::

    parse -> label -> split -> sample-negatives -> encode
          -> predict -> aggregate -> score

with each stage reading the previous stage's output file.  The model step
is external by design: with ``predictor="external"`` the pipeline blocks on
the prediction file appearing, while ``predictor="echo-gold"`` writes stub
predictions copying the encoded gold labels (used by the test suite).

Every run writes a manifest recording the configuration hash plus input and
output digests per stage, so identical inputs reproduce identical outputs.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as records
from .aggregate import PredictionRecord, decode_all, gold_mentions
from .distant import DistantSupervisionLabeler
from .encoding import EncoderConfig, ListingEncoder
from .negatives import SamplerConfig, sample_negatives
from .scoring import evaluate
from .types import LabelMode, Listing
from .wikitext import iter_pages_from_dir, iter_pages_from_dump, parse_page

logger = logging.getLogger(__name__)

STAGE_ORDER = (
    "parse",
    "label",
    "split",
    "sample-negatives",
    "encode",
    "predict",
    "aggregate",
    "score",
)


class PipelineError(RuntimeError):
    """A stage failed; the message names the stage and preserves the cause."""


@dataclass(frozen=True)
class RunProfile:
    """A named end-to-end configuration.

    The shipped profiles mirror the best-performing setups: ``lp`` (negative
    proportion 0.5, 3 epochs) tuned for list-page evaluation, ``p`` (0.3,
    2 epochs) tuned for arbitrary page listings, and ``final`` (``p`` plus
    one fine-tuning epoch on noisy page labels).  Epoch counts are passed
    through to the external model adapter.
    """

    name: str
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    label_mode: LabelMode = LabelMode.TYPED
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    epochs: int = 3
    noisy_epochs: int = 0

    def __post_init__(self) -> None:
        if not math.isclose(sum(self.split), 1.0, abs_tol=1e-9):
            raise ValueError(f"split fractions must sum to 1.0, got {self.split}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "encoder": {
                "max_seq_len": self.encoder.max_seq_len,
                "max_items_per_chunk": self.encoder.max_items_per_chunk,
                "max_enum_depth": self.encoder.max_enum_depth,
                "chunking_enabled": self.encoder.chunking_enabled,
            },
            "sampler": {
                "proportion": self.sampler.proportion,
                "seed": self.sampler.seed,
                "min_items": self.sampler.min_items,
                "max_items": self.sampler.max_items,
            },
            "label_mode": self.label_mode.value,
            "split": list(self.split),
            "epochs": self.epochs,
            "noisy_epochs": self.noisy_epochs,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RunProfile":
        return cls(
            name=raw.get("name", "custom"),
            encoder=EncoderConfig(**raw.get("encoder", {})),
            sampler=SamplerConfig(**raw.get("sampler", {})),
            label_mode=LabelMode(raw.get("label_mode", "TYPED")),
            split=tuple(raw.get("split", (0.6, 0.2, 0.2))),
            epochs=raw.get("epochs", 3),
            noisy_epochs=raw.get("noisy_epochs", 0),
        )


PROFILES = {
    "lp": RunProfile(name="lp", sampler=SamplerConfig(proportion=0.5), epochs=3),
    "p": RunProfile(name="p", sampler=SamplerConfig(proportion=0.3), epochs=2),
    "final": RunProfile(
        name="final", sampler=SamplerConfig(proportion=0.3), epochs=2, noisy_epochs=1
    ),
}


def split_corpus(
    listings: Sequence[Listing],
    fractions: Sequence[float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> tuple[list[Listing], ...]:
    """Page-level split: all listings of one page land in one partition.

    Pages are shuffled with a seeded generator and apportioned by largest
    remainder, so partition sizes stay within one page of the exact
    fractions.
    """
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError(f"fractions must sum to 1.0, got {fractions}")
    listings = list(listings)
    pages = sorted({l.context.page_title for l in listings})
    if len(pages) < len(fractions):
        raise ValueError(f"{len(pages)} pages cannot fill {len(fractions)} partitions")

    rng = np.random.default_rng(seed)
    order = [pages[i] for i in rng.permutation(len(pages))]

    n = len(pages)
    base = [math.floor(f * n + 1e-9) for f in fractions]
    remainders = [f * n - b for f, b in zip(fractions, base)]
    leftover = n - sum(base)
    for index in sorted(range(len(fractions)), key=lambda i: -remainders[i])[:leftover]:
        base[index] += 1

    partitions: list[list[Listing]] = []
    start = 0
    for size in base:
        member_pages = set(order[start : start + size])
        partitions.append([l for l in listings if l.context.page_title in member_pages])
        start += size
    return tuple(partitions)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _wait_for_file(path: Path, timeout: float) -> None:
    deadline = time.monotonic() + timeout
    while not path.exists():
        if time.monotonic() >= deadline:
            raise FileNotFoundError(f"prediction file {path} did not appear")
        time.sleep(0.1)


@dataclass
class _StageRecord:
    name: str
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)


def run_pipeline(
    profile: RunProfile,
    stages: Sequence[str],
    workdir: str | Path,
    *,
    dump: Optional[str | Path] = None,
    corpus: Optional[str | Path] = None,
    kb: Optional[str | Path] = None,
    targets: Optional[str | Path] = None,
    class_types: Optional[str | Path] = None,
    predictions: Optional[str | Path] = None,
    predictor: str = "external",
    min_items: int = 3,
    split_seed: int = 0,
    prediction_timeout: float = 0.0,
) -> dict:
    """Execute the requested stages and return the run manifest.

    ``corpus`` seeds the run when ``parse`` is not among the stages.  Any
    stage failure raises :class:`PipelineError` naming the stage.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    stages = [s for s in STAGE_ORDER if s in set(stages)]
    unknown = set(stages) - set(STAGE_ORDER)
    if unknown:
        raise ValueError(f"unknown stages: {sorted(unknown)}")

    manifest: dict = {
        "profile": profile.to_dict(),
        "config_hash": hashlib.sha256(
            json.dumps(profile.to_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest(),
        "stages": [],
    }
    current = Path(corpus) if corpus is not None else None
    chunks_path: Optional[Path] = None
    predictions_path = Path(predictions) if predictions is not None else None

    def record_stage(record: _StageRecord) -> None:
        manifest["stages"].append(
            {
                "name": record.name,
                "inputs": record.inputs,
                "outputs": record.outputs,
                "counts": record.counts,
            }
        )

    for stage in stages:
        record = _StageRecord(name=stage)
        try:
            if stage == "parse":
                if dump is None:
                    raise ValueError("parse stage requires a dump path")
                dump_path = Path(dump)
                pages = (
                    iter_pages_from_dir(dump_path)
                    if dump_path.is_dir()
                    else iter_pages_from_dump(dump_path)
                )
                listings = []
                page_count = 0
                for page in pages:
                    page_count += 1
                    listings.extend(parse_page(page, min_items=min_items))
                current = workdir / "corpus.jsonl"
                written = records.write_listings(current, listings)
                if dump_path.is_file():
                    record.inputs[str(dump_path)] = _sha256(dump_path)
                record.outputs[str(current)] = _sha256(current)
                record.counts = {"pages": page_count, "listings": written}

            elif stage == "label":
                if current is None:
                    raise ValueError("label stage has no input corpus")
                if kb is None or targets is None:
                    raise ValueError("label stage requires --kb and --targets")
                labeler = DistantSupervisionLabeler(
                    kb=records.load_type_kb(kb),
                    targets=records.load_targets(
                        targets, records.load_class_entity_types(class_types)
                    ),
                )
                record.inputs[str(current)] = _sha256(current)
                labeled = labeler.transform(records.read_listings(current))
                current = workdir / "labeled.jsonl"
                written = records.write_listings(current, labeled)
                record.outputs[str(current)] = _sha256(current)
                record.counts = {"listings": written}

            elif stage == "split":
                if current is None:
                    raise ValueError("split stage has no input corpus")
                record.inputs[str(current)] = _sha256(current)
                parts = split_corpus(
                    list(records.read_listings(current)), profile.split, split_seed
                )
                names = ("train", "validation", "test")
                for name, part in zip(names, parts):
                    path = workdir / f"{name}.jsonl"
                    written = records.write_listings(path, part)
                    record.outputs[str(path)] = _sha256(path)
                    record.counts[name] = written
                current = workdir / "train.jsonl"

            elif stage == "sample-negatives":
                if current is None:
                    raise ValueError("sample-negatives stage has no input corpus")
                record.inputs[str(current)] = _sha256(current)
                positives = list(records.read_listings(current))
                negatives = sample_negatives(positives, profile.sampler)
                current = workdir / "with_negatives.jsonl"
                written = records.write_listings(current, positives + negatives)
                record.outputs[str(current)] = _sha256(current)
                record.counts = {"positives": len(positives), "negatives": len(negatives)}

            elif stage == "encode":
                if current is None:
                    raise ValueError("encode stage has no input corpus")
                record.inputs[str(current)] = _sha256(current)
                encoder = ListingEncoder(
                    max_seq_len=profile.encoder.max_seq_len,
                    max_items_per_chunk=profile.encoder.max_items_per_chunk,
                    max_enum_depth=profile.encoder.max_enum_depth,
                    chunking_enabled=profile.encoder.chunking_enabled,
                    with_labels=True,
                    label_mode=profile.label_mode.value,
                )
                chunks = encoder.transform(records.read_listings(current))
                chunks_path = workdir / "chunks.jsonl"
                written = records.write_chunks(chunks_path, chunks)
                record.outputs[str(chunks_path)] = _sha256(chunks_path)
                record.counts = {"chunks": written}

            elif stage == "predict":
                if chunks_path is None:
                    raise ValueError("predict stage has no encoded chunks")
                record.inputs[str(chunks_path)] = _sha256(chunks_path)
                if predictor == "echo-gold":
                    predictions_path = workdir / "predictions.jsonl"
                    stub = []
                    for chunk in records.read_chunks(chunks_path):
                        if chunk.labels is None:
                            raise ValueError(
                                f"chunk {chunk.listing_id}/{chunk.chunk_index} has no gold labels"
                            )
                        stub.append(
                            PredictionRecord(
                                listing_id=chunk.listing_id,
                                chunk_index=chunk.chunk_index,
                                labels=chunk.labels,
                            )
                        )
                    written = records.write_predictions(predictions_path, stub)
                    record.counts = {"predictions": written}
                elif predictor == "external":
                    if predictions_path is None:
                        raise ValueError("external predictor requires a predictions path")
                    _wait_for_file(predictions_path, prediction_timeout)
                else:
                    raise ValueError(f"unknown predictor {predictor!r}")
                record.outputs[str(predictions_path)] = _sha256(predictions_path)

            elif stage == "aggregate":
                if chunks_path is None or predictions_path is None:
                    raise ValueError("aggregate stage requires chunks and predictions")
                record.inputs[str(chunks_path)] = _sha256(chunks_path)
                record.inputs[str(predictions_path)] = _sha256(predictions_path)
                listings = (
                    {l.id: l for l in records.read_listings(current)}
                    if current is not None
                    else None
                )
                mentions = decode_all(
                    records.read_chunks(chunks_path),
                    records.read_predictions(predictions_path),
                    listings,
                )
                mentions_path = workdir / "mentions.jsonl"
                written = records.write_mentions(mentions_path, mentions)
                record.outputs[str(mentions_path)] = _sha256(mentions_path)
                record.counts = {"mentions": written}

            elif stage == "score":
                if current is None:
                    raise ValueError("score stage has no gold corpus")
                mentions_path = workdir / "mentions.jsonl"
                record.inputs[str(current)] = _sha256(current)
                record.inputs[str(mentions_path)] = _sha256(mentions_path)
                gold = [
                    m
                    for listing in records.read_listings(current)
                    for m in gold_mentions(listing)
                ]
                pred = list(records.read_mentions(mentions_path))
                report = evaluate(gold, pred)
                report_path = workdir / "report.json"
                report_path.write_text(
                    json.dumps(report.to_dict(), indent=2, sort_keys=True), "utf-8"
                )
                record.outputs[str(report_path)] = _sha256(report_path)
                record.counts = {"gold": len(gold), "pred": len(pred)}

        except Exception as error:
            raise PipelineError(f"stage {stage} failed: {error}") from error
        record_stage(record)

    manifest_path = workdir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), "utf-8")
    return manifest
