"""Model and tokenizer construction, artifact save/load.

Three base-model forms are supported: ``tiny`` builds a small randomly
initialized encoder with a WordPiece tokenizer trained on the input chunks
(fast enough for CPU tests), a filesystem path loads a previously saved
artifact, and any other name is fetched as a pretrained checkpoint (needs
hub access) with the structural markers added as new vocabulary entries.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from transformers import (
    AutoModelForTokenClassification,
    AutoTokenizer,
    BertConfig,
    BertForTokenClassification,
    PreTrainedTokenizerFast,
)
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, trainers

from .wire import NONE, Chunk, is_special_token

logger = logging.getLogger(__name__)

ENTITY_TYPES = [
    "PERSON", "ORG", "LOC", "GPE", "FAC", "EVENT", "NORP", "LANGUAGE",
    "LAW", "PRODUCT", "SPECIES", "WORK_OF_ART", "OTHER",
]
TYPED_LABELS = [NONE] + ENTITY_TYPES
BINARY_LABELS = [NONE, "OTHER"]

BASE_SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
STRUCT_SPECIALS = ["[CXS]", "[CXE]", "[ROW]", "[COL]"]


@dataclass(frozen=True)
class TrainConfig:
    """Fine-tuning knobs; the defaults follow the list-page training recipe
    (roberta-base, 3 epochs, batch 64, learning rate 5e-5, no warmup or
    weight decay).  Pass ``base_model="tiny"`` for a small randomly
    initialized encoder that trains in seconds on CPU."""

    base_model: str = "roberta-base"
    epochs: int = 3
    batch_size: int = 64
    learning_rate: float = 5e-5
    warmup: int = 0
    weight_decay: float = 0.0
    label_mode: str = "TYPED"
    max_length: int = 512
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.label_mode not in ("TYPED", "BINARY"):
            raise ValueError(f"label_mode must be TYPED or BINARY, got {self.label_mode}")

    @property
    def labels(self) -> list[str]:
        return TYPED_LABELS if self.label_mode == "TYPED" else BINARY_LABELS

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in raw.items() if k in known})


def entry_tokens(chunks: Iterable[Chunk], max_default: int = 4) -> list[str]:
    """All ``[E<n>]`` markers seen in the chunks, plus the default depths."""
    found = {f"[E{d}]" for d in range(1, max_default + 1)}
    for chunk in chunks:
        for token in chunk.tokens:
            if is_special_token(token) and token.startswith("[E"):
                found.add(token)
    return sorted(found)


def build_tiny_tokenizer(chunks: Sequence[Chunk], vocab_size: int = 2000) -> PreTrainedTokenizerFast:
    """WordPiece tokenizer trained on the chunks' plain words."""
    wordpiece = Tokenizer(models.WordPiece(unk_token="[UNK]"))
    wordpiece.normalizer = normalizers.BertNormalizer(lowercase=False)
    wordpiece.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    trainer = trainers.WordPieceTrainer(vocab_size=vocab_size, special_tokens=BASE_SPECIALS)

    def lines():
        for chunk in chunks:
            words = [t for t in chunk.tokens if not is_special_token(t)]
            if words:
                yield " ".join(words)

    wordpiece.train_from_iterator(lines(), trainer)
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=wordpiece,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    tokenizer.add_special_tokens(
        {"additional_special_tokens": STRUCT_SPECIALS + entry_tokens(chunks)}
    )
    return tokenizer


def build_tiny_model(tokenizer, labels: Sequence[str]) -> BertForTokenClassification:
    config = BertConfig(
        vocab_size=len(tokenizer),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=128,
        max_position_embeddings=512,
        num_labels=len(labels),
        id2label=dict(enumerate(labels)),
        label2id={l: i for i, l in enumerate(labels)},
        pad_token_id=tokenizer.pad_token_id,
    )
    return BertForTokenClassification(config)


def resolve_model(
    config: TrainConfig, chunks: Sequence[Chunk], init_from: str | Path | None = None
):
    """(model, tokenizer) for training, per the configured base model."""
    source = str(init_from) if init_from is not None else config.base_model
    if source == "tiny":
        tokenizer = build_tiny_tokenizer(chunks)
        model = build_tiny_model(tokenizer, config.labels)
        return model, tokenizer
    if Path(source).exists():
        return load_artifact(source)
    logger.info("loading pretrained checkpoint %s", source)
    tokenizer = AutoTokenizer.from_pretrained(source, use_fast=True)
    tokenizer.add_special_tokens(
        {"additional_special_tokens": STRUCT_SPECIALS + entry_tokens(chunks)}
    )
    labels = config.labels
    model = AutoModelForTokenClassification.from_pretrained(
        source,
        num_labels=len(labels),
        id2label=dict(enumerate(labels)),
        label2id={l: i for i, l in enumerate(labels)},
    )
    model.resize_token_embeddings(len(tokenizer))
    return model, tokenizer


def save_artifact(model, tokenizer, out_dir: str | Path, train_log: dict | None = None) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    if train_log is not None:
        (out_dir / "train_log.json").write_text(
            json.dumps(train_log, indent=2, sort_keys=True), "utf-8"
        )
    return out_dir


def load_artifact(path: str | Path):
    path = Path(path)
    model = AutoModelForTokenClassification.from_pretrained(path)
    tokenizer = AutoTokenizer.from_pretrained(path, use_fast=True)
    return model, tokenizer


def model_labels(model) -> list[str]:
    id2label = model.config.id2label
    return [id2label[i] for i in range(len(id2label))]
