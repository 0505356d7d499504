"""Entity extraction and scoring tests."""

from __future__ import annotations

import pytest

from gazner.errors import AlignmentError
from gazner.evaluation import Entity, evaluate, extract_entities, format_report


class TestExtract:
    def test_simple_spans(self):
        ents = extract_entities(["B-PER", "I-PER", "O", "B-LOC"])
        assert ents == [Entity("PER", 0, 2), Entity("LOC", 3, 4)]

    def test_span_runs_to_sentence_end(self):
        assert extract_entities(["O", "B-CW", "I-CW"]) == [Entity("CW", 1, 3)]

    def test_adjacent_mentions_stay_separate(self):
        ents = extract_entities(["B-PER", "B-PER", "I-PER"])
        assert ents == [Entity("PER", 0, 1), Entity("PER", 1, 3)]

    def test_orphan_continuation_repaired_not_dropped(self):
        assert extract_entities(["O", "I-GRP"]) == [Entity("GRP", 1, 2)]

    def test_type_switch_starts_new_span(self):
        ents = extract_entities(["B-PER", "I-LOC"])
        assert ents == [Entity("PER", 0, 1), Entity("LOC", 1, 2)]


class TestEvaluate:
    def test_perfect_prediction_scores_one(self):
        gold = [["B-PER", "I-PER", "O"], ["O", "B-LOC", "O"]]
        report = evaluate(gold, gold, mode="entity")
        assert report.macro_f1 == 1.0
        assert report.micro_f1 == 1.0
        assert report.per_class["PER"].f1 == 1.0
        assert report.per_class["LOC"].support == 1

    def test_boundary_mismatch_scores_zero_for_that_span(self):
        gold = [["B-PER", "I-PER", "O"]]
        pred = [["B-PER", "O", "O"]]
        report = evaluate(gold, pred, mode="entity")
        # The predicted span (PER, 0, 1) does not match gold (PER, 0, 2).
        assert report.per_class["PER"].precision == 0.0
        assert report.per_class["PER"].recall == 0.0
        assert report.per_class["PER"].f1 == 0.0

    def test_end_boundary_mismatch(self):
        gold = [["O", "B-LOC", "O"]]
        pred = [["O", "B-LOC", "I-LOC"]]
        report = evaluate(gold, pred, mode="entity")
        assert report.per_class["LOC"].f1 == 0.0

    def test_type_mismatch_counts_against_both_classes(self):
        gold = [["B-PER", "O"]]
        pred = [["B-LOC", "O"]]
        report = evaluate(gold, pred, mode="entity")
        assert report.per_class["PER"].recall == 0.0
        assert report.per_class["LOC"].precision == 0.0
        # Both classes have support somewhere, so both drag the macro.
        assert report.macro_f1 == 0.0

    def test_partial_credit_by_hand(self):
        gold = [["B-PER", "O", "B-PER", "I-PER"], ["B-LOC", "O"]]
        pred = [["B-PER", "O", "B-PER", "O"], ["B-LOC", "O"]]
        report = evaluate(gold, pred, mode="entity")
        per = report.per_class["PER"]
        assert per.precision == pytest.approx(1 / 2)
        assert per.recall == pytest.approx(1 / 2)
        assert per.f1 == pytest.approx(1 / 2)
        assert report.per_class["LOC"].f1 == 1.0
        # Macro averages PER and LOC only; the other types have no
        # gold or predicted spans here.
        assert report.macro_f1 == pytest.approx((0.5 + 1.0) / 2)
        # Pooled: 2 of 3 predicted spans correct, 2 of 3 gold found.
        assert report.micro_f1 == pytest.approx(2 / 3)

    def test_predicted_only_class_enters_macro(self):
        gold = [["B-PER", "O"]]
        pred = [["B-PER", "B-PROD"]]
        report = evaluate(gold, pred, mode="entity")
        assert report.per_class["PROD"].precision == 0.0
        assert report.macro_f1 == pytest.approx((1.0 + 0.0) / 2)

    def test_malformed_prediction_is_repaired(self):
        gold = [["B-PER", "I-PER"]]
        pred = [["I-PER", "I-PER"]]  # orphan start becomes B-PER
        report = evaluate(gold, pred, mode="entity")
        assert report.per_class["PER"].f1 == 1.0
        assert report.repaired_pred == 1
        assert report.repaired_gold == 0

    def test_token_mode_micro_equals_accuracy(self):
        gold = [["B-PER", "I-PER", "O", "O"], ["O", "B-LOC"]]
        pred = [["B-PER", "O", "O", "O"], ["O", "B-LOC"]]
        report = evaluate(gold, pred, mode="token")
        assert report.micro_f1 == pytest.approx(5 / 6)
        assert len(report.per_class) == 13

    def test_token_mode_per_label_scores(self):
        gold = [["B-PER", "O"]]
        pred = [["O", "O"]]
        report = evaluate(gold, pred, mode="token")
        assert report.per_class["B-PER"].recall == 0.0
        assert report.per_class["O"].recall == 1.0
        assert report.per_class["O"].precision == pytest.approx(1 / 2)

    def test_sentence_count_mismatch_rejected(self):
        with pytest.raises(AlignmentError):
            evaluate([["O"]], [["O"], ["O"]])

    def test_length_mismatch_rejected(self):
        with pytest.raises(AlignmentError):
            evaluate([["O", "O"]], [["O"]])

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            evaluate([["O"]], [["O"]], mode="span")


class TestFormatReport:
    def test_contains_summary_lines(self):
        gold = [["B-PER", "O"]]
        report = evaluate(gold, gold, mode="entity")
        text = format_report(report)
        assert "macro_f1: 1.0000" in text
        assert "micro_f1: 1.0000" in text
        assert "PER" in text
        assert "mode: entity" in text
