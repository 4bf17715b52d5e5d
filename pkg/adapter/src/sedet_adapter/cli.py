"""Adapter CLI: train, predict, and the noisy fine-tuning cycle."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cycle import noisy_finetune_cycle
from .model import TrainConfig
from .predict import predict_file
from .train import fine_tune
from .wire import read_chunks

logger = logging.getLogger(__name__)


def _train_config(args: argparse.Namespace) -> TrainConfig:
    raw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text("utf-8"))
    overrides = {
        "base_model": args.base_model,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "label_mode": args.label_mode,
        "max_length": args.max_length,
        "seed": args.seed,
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig.from_dict(raw)


def _cmd_train(args: argparse.Namespace) -> int:
    config = _train_config(args)
    chunks = list(read_chunks(args.chunks))
    log = fine_tune(chunks, config, args.out, init_from=args.init_from)
    print(json.dumps({"epoch_losses": log["epoch_losses"], "chunks": log["chunks"]}))
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    predict_file(
        args.chunks,
        args.out,
        model_dir=args.model,
        stub=args.stub,
        batch_size=args.batch_size,
        max_length=args.max_length,
    )
    return 0


def _cmd_noisy_cycle(args: argparse.Namespace) -> int:
    config = _train_config(args)
    log = noisy_finetune_cycle(
        args.model,
        args.chunks,
        args.workdir,
        args.out,
        config=config,
        stub=args.stub,
        keep_empty=args.keep_empty_listings,
    )
    print(json.dumps({"epoch_losses": log["epoch_losses"], "chunks": log["chunks"]}))
    return 0


def _add_train_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file mirroring the training configuration")
    parser.add_argument("--base-model", default=None,
                        help='"tiny", an artifact path, or a pretrained checkpoint name')
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--label-mode", choices=["TYPED", "BINARY"], default=None)
    parser.add_argument("--max-length", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sedet-adapter",
        description="Transformer token classifier over the encoded-chunk wire format",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune on gold-labeled chunks")
    p.add_argument("--chunks", required=True)
    p.add_argument("--out", required=True, help="artifact output directory")
    p.add_argument("--init-from", help="existing artifact to continue from")
    _add_train_options(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="write prediction records for a chunk file")
    p.add_argument("--chunks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="artifact directory")
    p.add_argument("--stub", choices=["echo-gold"], help="skip the model, echo gold labels")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-length", type=int, default=512)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("noisy-cycle", help="predict on pages, filter, fine-tune one round")
    p.add_argument("--model", required=True, help="list-page model artifact")
    p.add_argument("--chunks", required=True, help="page chunks to label noisily")
    p.add_argument("--workdir", required=True)
    p.add_argument("--out", required=True, help="final model output directory")
    p.add_argument("--stub", choices=["echo-gold"])
    p.add_argument("--keep-empty-listings", action="store_true")
    _add_train_options(p)
    p.set_defaults(func=_cmd_noisy_cycle)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
