"""Command-line interface wiring the pipeline stages to files.

Every subcommand reads and writes the line-delimited record formats defined
in :mod:`sedet.io`, so stages can be run individually or chained through
``sedet run``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io as records
from .aggregate import (
    decode_all,
    extraction_stats,
    filter_multi_type_listings,
    gold_mentions,
    pick_first_entity_baseline,
    relabel_chunks,
)
from .distant import DistantSupervisionLabeler
from .encoding import ListingEncoder
from .negatives import SamplerConfig, sample_negatives
from .pipeline import PROFILES, RunProfile, run_pipeline, split_corpus
from .scoring import evaluate
from .types import iter_violations
from .wikitext import corpus_stats, iter_pages_from_dir, iter_pages_from_dump, parse_page

logger = logging.getLogger(__name__)


def _cmd_parse(args: argparse.Namespace) -> int:
    dump = Path(args.dump)
    pages = iter_pages_from_dir(dump) if dump.is_dir() else iter_pages_from_dump(dump)
    listings = []
    page_count = 0
    for page in pages:
        page_count += 1
        listings.extend(parse_page(page, min_items=args.min_items))
    for listing_id, violation in iter_violations(listings):
        logger.error("invalid listing %s: %s", listing_id, violation)
    written = records.write_listings(args.out, listings)
    logger.info("parsed %d pages into %d listings", page_count, written)
    return 0


def _cmd_label(args: argparse.Namespace) -> int:
    labeler = DistantSupervisionLabeler(
        kb=records.load_type_kb(args.kb),
        targets=records.load_targets(
            args.targets, records.load_class_entity_types(args.class_types)
        ),
    )
    labeled = labeler.transform(records.read_listings(args.corpus))
    written = records.write_listings(args.out, labeled)
    logger.info("labeled %d listings", written)
    return 0


def _cmd_encode(args: argparse.Namespace) -> int:
    encoder = ListingEncoder(
        max_seq_len=args.max_seq_len,
        max_items_per_chunk=args.max_items,
        chunking_enabled=not args.no_chunking,
        with_labels=not args.no_labels,
        label_mode=args.label_mode.upper(),
    )
    chunks = encoder.transform(records.read_listings(args.corpus))
    written = records.write_chunks(args.out, chunks)
    logger.info("encoded %d chunks", written)
    return 0


def _cmd_sample_negatives(args: argparse.Namespace) -> int:
    config = SamplerConfig(
        proportion=args.proportion,
        seed=args.seed,
        min_items=args.min_items,
        max_items=args.max_items,
    )
    positives = list(records.read_listings(args.positives))
    negatives = sample_negatives(positives, config)
    written = records.write_listings(args.out, negatives)
    logger.info("sampled %d negatives from %d positives", written, len(positives))
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    fractions = tuple(float(f) for f in args.fractions.split(","))
    listings = list(records.read_listings(args.corpus))
    parts = split_corpus(listings, fractions, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = ("train", "validation", "test")
    for name, part in zip(names, parts):
        written = records.write_listings(out_dir / f"{name}.jsonl", part)
        logger.info("%s: %d listings", name, written)
    return 0


def _cmd_aggregate(args: argparse.Namespace) -> int:
    listings = None
    if args.corpus:
        listings = {l.id: l for l in records.read_listings(args.corpus)}

    if args.baseline:
        if listings is None:
            raise SystemExit("--baseline requires --corpus")
        mentions = [m for l in listings.values() for m in pick_first_entity_baseline(l)]
        records.write_mentions(args.out, mentions)
        logger.info("baseline extracted %d mentions", len(mentions))
        return 0

    if not args.chunks or not args.preds:
        raise SystemExit("aggregate requires --chunks and --preds (or --baseline)")
    chunks = list(records.read_chunks(args.chunks))
    mentions = decode_all(chunks, records.read_predictions(args.preds), listings)

    if args.single_type_only:
        kept = filter_multi_type_listings(mentions)
        mentions = [m for listing_mentions in kept.values() for m in listing_mentions]
        if args.labeled_chunks_out:
            empty: list[str] = []
            if args.keep_empty_listings:
                with_mentions = {m.listing_id for m in mentions}
                empty = sorted({c.listing_id for c in chunks} - with_mentions)
            relabeled = relabel_chunks(chunks, kept, include_empty=empty)
            records.write_chunks(args.labeled_chunks_out, relabeled)
            logger.info("wrote %d relabeled chunks", len(relabeled))

    written = records.write_mentions(args.out, mentions)
    logger.info("aggregated %d mentions", written)
    return 0


def _read_gold_mentions(path: str):
    """Gold mentions from either a corpus file or a mentions file."""
    first = None
    for record in records.read_jsonl(path):
        first = record
        break
    if first is None:
        return []
    if "items" in first:
        return [m for l in records.read_listings(path) for m in gold_mentions(l)]
    return list(records.read_mentions(path))


def _cmd_score(args: argparse.Namespace) -> int:
    gold = _read_gold_mentions(args.gold)
    pred = list(records.read_mentions(args.pred))
    report = evaluate(gold, pred)
    print(report.format_text())
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True), "utf-8"
        )
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    if args.corpus:
        stats = corpus_stats(records.read_listings(args.corpus)).to_dict()
    else:
        stats = extraction_stats(records.read_mentions(args.mentions)).to_dict()
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    if args.config:
        raw = json.loads(Path(args.config).read_text("utf-8"))
        profile = RunProfile.from_dict(raw.get("profile", raw))
        options = raw.get("options", {})
    elif args.profile:
        profile = PROFILES[args.profile]
        options = {}
    else:
        raise SystemExit("run requires --config or --profile")

    stages = args.stages.split(",") if args.stages else list(options.get("stages", []))
    if not stages:
        raise SystemExit("run requires --stages or a stages list in the config")

    def option(name: str, flag_value):
        return flag_value if flag_value is not None else options.get(name)

    manifest = run_pipeline(
        profile,
        stages,
        args.workdir,
        dump=option("dump", args.dump),
        corpus=option("corpus", args.corpus),
        kb=option("kb", args.kb),
        targets=option("targets", args.targets),
        class_types=option("class_types", args.class_types),
        predictions=option("predictions", args.predictions),
        predictor=args.predictor or options.get("predictor", "external"),
        min_items=args.min_items,
        split_seed=args.split_seed,
        prediction_timeout=args.prediction_timeout,
    )
    print(json.dumps({"stages": [s["name"] for s in manifest["stages"]]}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sedet",
        description="Subject entity detection in enumerations and tables of wiki pages",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a wiki dump or page directory into listings")
    p.add_argument("--dump", required=True, help="XML dump (.xml/.xml.bz2) or directory of pages")
    p.add_argument("--out", required=True)
    p.add_argument("--min-items", type=int, default=3)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("label", help="distantly supervise list-page listings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kb", required=True, help="knowledge-base records (JSONL)")
    p.add_argument("--targets", required=True, help="page-to-class TSV")
    p.add_argument("--class-types", default=None, help="class-to-entity-type JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("encode", help="encode listings into model input chunks")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--max-items", type=int, default=20)
    p.add_argument("--no-chunking", action="store_true", help="one item per chunk")
    p.add_argument("--no-labels", action="store_true", help="omit gold labels")
    p.add_argument("--label-mode", choices=["typed", "binary"], default="typed")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("sample-negatives", help="assemble shuffled negative listings")
    p.add_argument("--positives", required=True)
    p.add_argument("--proportion", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-items", type=int, default=3)
    p.add_argument("--max-items", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample_negatives)

    p = sub.add_parser("split", help="page-level train/validation/test split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--fractions", default="0.6,0.2,0.2")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("aggregate", help="decode predictions into subject-entity mentions")
    p.add_argument("--chunks")
    p.add_argument("--preds")
    p.add_argument("--out", required=True)
    p.add_argument("--corpus", help="source corpus, enables entity linking")
    p.add_argument("--single-type-only", action="store_true",
                   help="drop listings with mixed predicted types")
    p.add_argument("--labeled-chunks-out",
                   help="with --single-type-only: write kept chunks relabeled from predictions")
    p.add_argument("--keep-empty-listings", action="store_true",
                   help="keep zero-mention listings in --labeled-chunks-out with all-NONE labels")
    p.add_argument("--baseline", choices=["first-entity"],
                   help="run the pick-first-entity baseline on --corpus instead of decoding")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("score", help="evaluate mentions under the four NER scenarios")
    p.add_argument("--gold", required=True, help="labeled corpus or gold mention records")
    p.add_argument("--pred", required=True, help="predicted mention records")
    p.add_argument("--report", help="write the report as JSON")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("stats", help="corpus or extraction statistics")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--corpus")
    group.add_argument("--mentions")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("run", help="run pipeline stages end to end")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--profile", choices=sorted(PROFILES), help="shipped profile name")
    p.add_argument("--stages", help="comma-separated stage list")
    p.add_argument("--workdir", required=True)
    p.add_argument("--dump")
    p.add_argument("--corpus")
    p.add_argument("--kb")
    p.add_argument("--targets")
    p.add_argument("--class-types")
    p.add_argument("--predictions")
    p.add_argument("--predictor", choices=["external", "echo-gold"])
    p.add_argument("--min-items", type=int, default=3)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--prediction-timeout", type=float, default=0.0)
    p.set_defaults(func=_cmd_run)

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
