"""Transformer token-classification adapter for the listing-chunk wire format."""
from .align import (
    AlignedBatch,
    UnregisteredSpecialTokenError,
    align_chunks,
    collapse_first_subword,
    propagate_labels,
    training_label_ids,
)
from .cycle import EmptyNoisySetError, noisy_finetune_cycle
from .model import BINARY_LABELS, TYPED_LABELS, TrainConfig, load_artifact, save_artifact
from .predict import echo_gold, predict_chunks, predict_file
from .train import fine_tune
from .wire import Chunk, Prediction, read_chunks, read_predictions, write_chunks, write_predictions

__version__ = "0.1.0"
