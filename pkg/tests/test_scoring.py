import itertools

import numpy as np
import pytest

from sedet.aggregate import ExtractedMention
from sedet.scoring import (
    MatchCounts,
    Scenario,
    compute_metrics,
    evaluate,
    match_mentions,
)
from sedet.types import EntityType


def mention(listing_id, item_index, start, end, label):
    return ExtractedMention(
        listing_id=listing_id, item_index=item_index,
        start_word=start, end_word=end, surface="x", label=label,
    )


PERSON = EntityType.PERSON
ORG = EntityType.ORG


class TestMatchMentions:
    def test_identity_is_cor_everywhere(self):
        gold = [mention("l", 0, 1, 3, PERSON)]
        pred = [mention("l", 0, 1, 3, PERSON)]
        for scenario in Scenario:
            counts = match_mentions(gold, pred, scenario)
            assert counts == MatchCounts(COR=1)

    def test_contained_span_same_type(self):
        # pred strictly inside gold, same type
        gold = [mention("l", 0, 0, 4, PERSON)]
        pred = [mention("l", 0, 1, 3, PERSON)]
        assert match_mentions(gold, pred, Scenario.PARTIAL) == MatchCounts(PAR=1)
        assert match_mentions(gold, pred, Scenario.EXACT) == MatchCounts(INC=1)
        assert match_mentions(gold, pred, Scenario.ENT_TYPE) == MatchCounts(COR=1)
        assert match_mentions(gold, pred, Scenario.STRICT) == MatchCounts(INC=1)

    def test_no_overlap_spurious_and_missing(self):
        gold = [mention("l", 0, 0, 2, PERSON)]
        pred = [mention("l", 0, 3, 5, PERSON)]
        for scenario in Scenario:
            assert match_mentions(gold, pred, scenario) == MatchCounts(MIS=1, SPU=1)

    def test_pred_without_gold_item(self):
        pred = [mention("l", 4, 0, 2, PERSON)]
        for scenario in Scenario:
            assert match_mentions([], pred, scenario) == MatchCounts(SPU=1)

    def test_exact_span_wrong_type(self):
        gold = [mention("l", 0, 0, 2, PERSON)]
        pred = [mention("l", 0, 0, 2, ORG)]
        assert match_mentions(gold, pred, Scenario.PARTIAL) == MatchCounts(COR=1)
        assert match_mentions(gold, pred, Scenario.EXACT) == MatchCounts(COR=1)
        # SemEval counts a boundary match with the wrong type as incorrect
        assert match_mentions(gold, pred, Scenario.ENT_TYPE) == MatchCounts(INC=1)
        assert match_mentions(gold, pred, Scenario.STRICT) == MatchCounts(INC=1)

    def test_duplicate_prediction_raises(self):
        pred = [mention("l", 0, 0, 1, PERSON), mention("l", 0, 1, 2, ORG)]
        with pytest.raises(ValueError, match="duplicate"):
            match_mentions([], pred, Scenario.EXACT)

    def test_same_item_required_for_matching(self):
        gold = [mention("l", 0, 0, 2, PERSON)]
        pred = [mention("l", 1, 0, 2, PERSON)]
        assert match_mentions(gold, pred, Scenario.STRICT) == MatchCounts(MIS=1, SPU=1)


class TestComputeMetrics:
    def test_hand_fixture(self):
        counts = MatchCounts(COR=3, PAR=2, INC=0, MIS=1, SPU=1)
        precision, recall, f1 = compute_metrics(counts)
        assert precision == pytest.approx(4 / 6, abs=1e-9)
        assert recall == pytest.approx(4 / 6, abs=1e-9)
        assert f1 == pytest.approx(4 / 6, abs=1e-9)

    def test_all_zero(self):
        assert compute_metrics(MatchCounts()) == (0.0, 0.0, 0.0)

    def test_perfect_run(self):
        assert compute_metrics(MatchCounts(COR=17)) == (1.0, 1.0, 1.0)

    def test_monoid_addition(self):
        a = MatchCounts(COR=1, PAR=2)
        b = MatchCounts(INC=3, MIS=4, SPU=5)
        assert a + b == MatchCounts(COR=1, INC=3, PAR=2, MIS=4, SPU=5)
        assert (a + b).possible == 10
        assert (a + b).actual == 11


# ---------------------------------------------------------------------------
# brute-force oracle

def categorize_pair(gold, pred, scenario):
    same = (gold.start_word, gold.end_word) == (pred.start_word, pred.end_word)
    typed = gold.label == pred.label
    if scenario is Scenario.EXACT:
        return "COR" if same else "INC"
    if scenario is Scenario.PARTIAL:
        return "COR" if same else "PAR"
    if scenario is Scenario.ENT_TYPE:
        return "COR" if typed else "INC"
    return "COR" if same and typed else "INC"


def brute_force_match(gold, pred, scenario):
    """Enumerate every one-to-one assignment and keep the best.

    Valid pairs share a (listing, item) and overlap.  The best assignment
    maximizes COR + 0.5*PAR, breaking ties toward more matched pairs, which
    is the behavior of pairing every overlapping same-item pair.
    """
    valid = [
        (gi, pi)
        for gi, g in enumerate(gold)
        for pi, p in enumerate(pred)
        if (g.listing_id, g.item_index) == (p.listing_id, p.item_index)
        and g.start_word < p.end_word and p.start_word < g.end_word
    ]

    best = None
    for size in range(len(valid) + 1):
        for assignment in itertools.combinations(valid, size):
            gold_used = [gi for gi, _ in assignment]
            pred_used = [pi for _, pi in assignment]
            if len(set(gold_used)) != size or len(set(pred_used)) != size:
                continue
            tally = {"COR": 0, "INC": 0, "PAR": 0, "MIS": 0, "SPU": 0}
            for gi, pi in assignment:
                tally[categorize_pair(gold[gi], pred[pi], scenario)] += 1
            tally["MIS"] = len(gold) - size
            tally["SPU"] = len(pred) - size
            score = (tally["COR"] + 0.5 * tally["PAR"], size)
            if best is None or score > best[0]:
                best = (score, MatchCounts(**tally))
    return best[1]


def random_eval_sets(rng, n_items=8):
    gold, pred = [], []
    for item in range(n_items):
        listing_id = f"l{int(rng.integers(0, 3))}"
        key_taken = any(
            m.listing_id == listing_id and m.item_index == item for m in gold
        )
        if key_taken:
            continue
        has_gold = rng.random() < 0.7
        has_pred = rng.random() < 0.7
        if has_gold:
            start = int(rng.integers(0, 5))
            end = int(rng.integers(start + 1, 7))
            gold.append(mention(listing_id, item, start, end,
                                [PERSON, ORG][int(rng.integers(0, 2))]))
        if has_pred:
            start = int(rng.integers(0, 5))
            end = int(rng.integers(start + 1, 7))
            pred.append(mention(listing_id, item, start, end,
                                [PERSON, ORG][int(rng.integers(0, 2))]))
    return gold, pred


class TestAgainstBruteForce:
    def test_randomized_fixtures(self):
        rng = np.random.default_rng(17)
        for _ in range(250):
            gold, pred = random_eval_sets(rng)
            for scenario in Scenario:
                assert match_mentions(gold, pred, scenario) == brute_force_match(
                    gold, pred, scenario
                )

    def test_possible_and_actual_scenario_independent(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            gold, pred = random_eval_sets(rng)
            counts = {s: match_mentions(gold, pred, s) for s in Scenario}
            assert len({c.possible for c in counts.values()}) == 1
            assert len({c.actual for c in counts.values()}) == 1

    def test_strict_cor_monotonicity(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            gold, pred = random_eval_sets(rng)
            strict = match_mentions(gold, pred, Scenario.STRICT).COR
            assert strict <= match_mentions(gold, pred, Scenario.ENT_TYPE).COR
            assert strict <= match_mentions(gold, pred, Scenario.EXACT).COR

    def test_swap_symmetry_in_boundary_scenarios(self):
        rng = np.random.default_rng(27)
        for _ in range(100):
            gold, pred = random_eval_sets(rng)
            for scenario in (Scenario.PARTIAL, Scenario.EXACT):
                forward = match_mentions(gold, pred, scenario)
                backward = match_mentions(pred, gold, scenario)
                assert forward.MIS == backward.SPU
                assert forward.SPU == backward.MIS
                fp, fr, _ = compute_metrics(forward)
                bp, br, _ = compute_metrics(backward)
                assert fp == pytest.approx(br) and fr == pytest.approx(bp)


class TestEvaluate:
    def test_report_shape(self):
        gold = [mention("l", 0, 0, 2, PERSON), mention("l", 1, 0, 1, ORG)]
        pred = [mention("l", 0, 0, 2, PERSON)]
        report = evaluate(gold, pred)
        assert set(report.scenarios) == set(Scenario)
        strict = report.scenarios[Scenario.STRICT]
        assert strict.counts == MatchCounts(COR=1, MIS=1)
        assert strict.precision == 1.0
        assert strict.recall == 0.5
        assert PERSON in report.per_type
        assert report.per_type[PERSON][Scenario.STRICT].f1 == 1.0

    def test_text_format(self):
        report = evaluate([], [])
        text = report.format_text()
        assert "Partial" in text and "Strict" in text

    def test_to_dict_round_trip_values(self):
        gold = [mention("l", 0, 0, 2, PERSON)]
        report = evaluate(gold, gold).to_dict()
        assert report["scenarios"]["Strict"]["f1"] == 1.0
        assert report["scenarios"]["Strict"]["COR"] == 1
