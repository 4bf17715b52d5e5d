"""NER evaluation in the four SemEval-2013 scenarios.

Gold and predicted mentions are compared per listing item, which is where
the one-subject-entity assumption makes matching exact: an item holds at
most one gold mention and at most one prediction, so the only question per
pair is which match category it falls into.

=========  ==================================  =======================
scenario   COR                                 INC / PAR
=========  ==================================  =======================
Exact      identical boundary                  INC on partial overlap
Partial    identical boundary                  PAR on partial overlap
Ent-Type   any overlap and matching type       INC otherwise
Strict     identical boundary and type         INC on any other overlap
=========  ==================================  =======================

Unmatched gold mentions count as MIS, unmatched predictions as SPU.
Precision is (COR + 0.5*PAR) / (COR + INC + PAR + SPU) and recall is
(COR + 0.5*PAR) / (COR + INC + PAR + MIS).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from .aggregate import ExtractedMention
from .types import EntityType


class Scenario(str, Enum):
    PARTIAL = "Partial"
    EXACT = "Exact"
    ENT_TYPE = "EntType"
    STRICT = "Strict"


@dataclass(frozen=True)
class MatchCounts:
    """SemEval match categories; a commutative monoid under addition."""

    COR: int = 0
    INC: int = 0
    PAR: int = 0
    MIS: int = 0
    SPU: int = 0

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(
            COR=self.COR + other.COR,
            INC=self.INC + other.INC,
            PAR=self.PAR + other.PAR,
            MIS=self.MIS + other.MIS,
            SPU=self.SPU + other.SPU,
        )

    @property
    def possible(self) -> int:
        return self.COR + self.INC + self.PAR + self.MIS

    @property
    def actual(self) -> int:
        return self.COR + self.INC + self.PAR + self.SPU


def compute_metrics(counts: MatchCounts) -> tuple[float, float, float]:
    """(precision, recall, F1) with division by zero yielding 0."""
    matched = counts.COR + 0.5 * counts.PAR
    precision = matched / counts.actual if counts.actual else 0.0
    recall = matched / counts.possible if counts.possible else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _overlaps(a: ExtractedMention, b: ExtractedMention) -> bool:
    return a.start_word < b.end_word and b.start_word < a.end_word


def _same_span(a: ExtractedMention, b: ExtractedMention) -> bool:
    return a.start_word == b.start_word and a.end_word == b.end_word


def _categorize(gold: ExtractedMention, pred: ExtractedMention, scenario: Scenario) -> str:
    """Match category for an overlapping gold/pred pair."""
    exact = _same_span(gold, pred)
    typed = gold.label == pred.label
    if scenario is Scenario.EXACT:
        return "COR" if exact else "INC"
    if scenario is Scenario.PARTIAL:
        return "COR" if exact else "PAR"
    if scenario is Scenario.ENT_TYPE:
        return "COR" if typed else "INC"
    return "COR" if exact and typed else "INC"


def match_mentions(
    gold: Iterable[ExtractedMention],
    pred: Iterable[ExtractedMention],
    scenario: Scenario | str,
) -> MatchCounts:
    """Tally match categories for one scenario.

    Mentions pair up within their (listing, item); a pair is matched when
    the word spans overlap.  Duplicate mentions for one item are a contract
    violation and raise.
    """
    scenario = Scenario(scenario)
    golds: dict[tuple[str, int], ExtractedMention] = {}
    preds: dict[tuple[str, int], ExtractedMention] = {}
    for mention in gold:
        key = (mention.listing_id, mention.item_index)
        if key in golds:
            raise ValueError(f"duplicate gold mention for {key[0]} item {key[1]}")
        golds[key] = mention
    for mention in pred:
        key = (mention.listing_id, mention.item_index)
        if key in preds:
            raise ValueError(f"duplicate prediction for {key[0]} item {key[1]}")
        preds[key] = mention

    tally = {"COR": 0, "INC": 0, "PAR": 0, "MIS": 0, "SPU": 0}
    for key, gold_mention in golds.items():
        pred_mention = preds.get(key)
        if pred_mention is not None and _overlaps(gold_mention, pred_mention):
            tally[_categorize(gold_mention, pred_mention, scenario)] += 1
        else:
            tally["MIS"] += 1
    for key, pred_mention in preds.items():
        gold_mention = golds.get(key)
        if gold_mention is None or not _overlaps(gold_mention, pred_mention):
            tally["SPU"] += 1
    return MatchCounts(**tally)


@dataclass(frozen=True)
class ScenarioResult:
    counts: MatchCounts
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, counts: MatchCounts) -> "ScenarioResult":
        precision, recall, f1 = compute_metrics(counts)
        return cls(counts=counts, precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class EvalReport:
    """Per-scenario counts and metrics, with an optional per-type breakdown."""

    scenarios: dict[Scenario, ScenarioResult]
    per_type: Optional[dict[EntityType, dict[Scenario, ScenarioResult]]] = None

    def to_dict(self) -> dict:
        def result_dict(result: ScenarioResult) -> dict:
            counts = result.counts
            return {
                "COR": counts.COR,
                "INC": counts.INC,
                "PAR": counts.PAR,
                "MIS": counts.MIS,
                "SPU": counts.SPU,
                "precision": result.precision,
                "recall": result.recall,
                "f1": result.f1,
            }

        report = {
            "scenarios": {s.value: result_dict(r) for s, r in self.scenarios.items()}
        }
        if self.per_type is not None:
            report["per_type"] = {
                t.value: {s.value: result_dict(r) for s, r in by_scenario.items()}
                for t, by_scenario in self.per_type.items()
            }
        return report

    def format_text(self) -> str:
        lines = [f"{'scenario':<10} {'COR':>5} {'INC':>5} {'PAR':>5} {'MIS':>5} {'SPU':>5} "
                 f"{'P':>7} {'R':>7} {'F1':>7}"]
        for scenario in Scenario:
            result = self.scenarios[scenario]
            c = result.counts
            lines.append(
                f"{scenario.value:<10} {c.COR:>5} {c.INC:>5} {c.PAR:>5} {c.MIS:>5} {c.SPU:>5} "
                f"{result.precision:>7.3f} {result.recall:>7.3f} {result.f1:>7.3f}"
            )
        return "\n".join(lines)


def evaluate(
    gold: Sequence[ExtractedMention],
    pred: Sequence[ExtractedMention],
    per_type: bool = True,
) -> EvalReport:
    """Score predictions against gold under all four scenarios.

    The per-type breakdown restricts both sides to mentions of one entity
    type before matching.
    """
    scenarios = {
        scenario: ScenarioResult.from_counts(match_mentions(gold, pred, scenario))
        for scenario in Scenario
    }
    breakdown = None
    if per_type:
        types = sorted({m.label for m in gold} | {m.label for m in pred}, key=lambda t: t.value)
        breakdown = {}
        for entity_type in types:
            gold_t = [m for m in gold if m.label == entity_type]
            pred_t = [m for m in pred if m.label == entity_type]
            breakdown[entity_type] = {
                scenario: ScenarioResult.from_counts(match_mentions(gold_t, pred_t, scenario))
                for scenario in Scenario
            }
    return EvalReport(scenarios=scenarios, per_type=breakdown)
