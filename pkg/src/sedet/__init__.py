"""Subject entity detection in enumerations and tables of wiki pages.

The package covers the full pipeline around the (external) token
classification model: parsing wiki markup into listings, generating
distantly-supervised labels, encoding listings into special-token
sequences, sampling synthetic negatives, aggregating token predictions
into typed mentions, and scoring them under the four NER match scenarios.
"""
from .aggregate import (
    ExtractedMention,
    PredictionRecord,
    decode_mentions,
    extraction_stats,
    filter_multi_type_listings,
    gold_mentions,
    pick_first_entity_baseline,
)
from .distant import (
    DistantSupervisionLabeler,
    ListPageTarget,
    TypeKB,
    Verdict,
    gold_token_labels,
    label_entities,
    select_training_items,
)
from .encoding import (
    EncodedChunk,
    EncoderConfig,
    ListingEncoder,
    chunk_listing,
    encode_context,
    encode_item,
)
from .negatives import SamplerConfig, ShuffledListingSampler, sample_negatives
from .pipeline import PROFILES, RunProfile, run_pipeline, split_corpus
from .scoring import EvalReport, MatchCounts, Scenario, compute_metrics, evaluate, match_mentions
from .types import (
    EntityMention,
    EntityType,
    LabelMode,
    Listing,
    ListingContext,
    ListingItem,
    ListingKind,
    TokenLabel,
    validate_listing,
)
from .wikitext import RawPage, WikitextListingParser, corpus_stats, parse_page

__version__ = "0.1.0"

__all__ = [
    "EncodedChunk",
    "EncoderConfig",
    "EntityMention",
    "EntityType",
    "EvalReport",
    "ExtractedMention",
    "LabelMode",
    "ListPageTarget",
    "Listing",
    "ListingContext",
    "ListingEncoder",
    "ListingItem",
    "ListingKind",
    "MatchCounts",
    "PROFILES",
    "PredictionRecord",
    "RawPage",
    "RunProfile",
    "SamplerConfig",
    "Scenario",
    "ShuffledListingSampler",
    "TokenLabel",
    "TypeKB",
    "Verdict",
    "WikitextListingParser",
    "chunk_listing",
    "compute_metrics",
    "corpus_stats",
    "decode_mentions",
    "DistantSupervisionLabeler",
    "encode_context",
    "encode_item",
    "evaluate",
    "extraction_stats",
    "filter_multi_type_listings",
    "gold_mentions",
    "gold_token_labels",
    "label_entities",
    "match_mentions",
    "parse_page",
    "pick_first_entity_baseline",
    "run_pipeline",
    "sample_negatives",
    "select_training_items",
    "split_corpus",
    "validate_listing",
]
