"""Tests for F1 scoring, edit-rate analysis, reports, and human agreement."""

from __future__ import annotations

import json
import random

import pytest

from qadkit.core import Document, HumanAnnotation, LanguagePair, SentencePair
from qadkit.errors import EvaluationError, ValidationError
from qadkit.evaluation import (
    EvalReport,
    PhenomenonScore,
    edit_rate_analysis,
    evaluate_system,
    human_overlap,
    phenomenon_f1,
    preference_summary,
    render_report,
    render_report_markdown,
    report_payload,
)
from qadkit.metrics import DEFAULT_METRIC_CONFIG
from qadkit.tagging import PhenomenonTag, TaggedSentence

from oracles import oracle_ter_counts


def tagged(doc_id: str, index: int, *tags: tuple, side: str = "reference") -> TaggedSentence:
    built = [PhenomenonTag(*tag) for tag in tags]
    built.sort(key=lambda tag: tag.sort_key)
    return TaggedSentence(doc_id=doc_id, sentence_index=index, side=side, tags=tuple(built))


class TestPhenomenonScore:
    def test_multiset_partial_recall(self) -> None:
        score = PhenomenonScore.from_counts("lexical_cohesion", 1, 2, 1)
        assert score.precision == 1.0
        assert score.recall == 0.5
        assert score.f1 == pytest.approx(2 / 3)
        assert not score.vacuous

    def test_vacuous_scores_one(self) -> None:
        score = PhenomenonScore.from_counts("pronouns", 0, 0, 0)
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)
        assert score.vacuous

    def test_ref_only_scores_zero(self) -> None:
        score = PhenomenonScore.from_counts("formality", 0, 3, 0)
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)
        assert not score.vacuous

    def test_hyp_only_has_undefined_recall(self) -> None:
        score = PhenomenonScore.from_counts("formality", 0, 0, 2)
        assert score.precision == 0.0
        assert score.recall is None
        assert score.f1 == 0.0


class TestPhenomenonF1:
    def test_matched_pronoun_unmatched_formality(self) -> None:
        reference = [tagged("d", 0, ("pronouns", 2, "sie"), ("formality", 1, "Sie"))]
        hypothesis = [tagged("d", 0, ("pronouns", 0, "sie"), side="hypothesis")]
        scores = {s.phenomenon: s for s in phenomenon_f1(reference, hypothesis)}
        assert scores["pronouns"].f1 == 1.0
        assert scores["formality"].precision == 0.0
        assert scores["formality"].recall == 0.0
        assert scores["formality"].f1 == 0.0
        assert scores["lexical_cohesion"].vacuous
        assert scores["verb_form"].vacuous

    def test_identical_tags_score_one_everywhere(self) -> None:
        reference = [
            tagged("d", 0, ("pronouns", 0, "ela"), ("lexical_cohesion", 2, "economia")),
            tagged("d", 1, ("verb_form", 1, "chegou")),
        ]
        hypothesis = [
            tagged("d", 0, ("pronouns", 1, "ela"), ("lexical_cohesion", 4, "economia"), side="hypothesis"),
            tagged("d", 1, ("verb_form", 0, "chegou"), side="hypothesis"),
        ]
        for score in phenomenon_f1(reference, hypothesis):
            assert score.f1 == 1.0

    def test_token_positions_are_ignored(self) -> None:
        reference = [tagged("d", 0, ("pronouns", 0, "ela"))]
        hypothesis = [tagged("d", 0, ("pronouns", 7, "ela"), side="hypothesis")]
        scores = {s.phenomenon: s for s in phenomenon_f1(reference, hypothesis)}
        assert scores["pronouns"].f1 == 1.0

    def test_lexeme_multiset_intersection(self) -> None:
        reference = [tagged("d", 0, ("lexical_cohesion", 1, "economia"), ("lexical_cohesion", 4, "economia"))]
        hypothesis = [tagged("d", 0, ("lexical_cohesion", 2, "economia"), side="hypothesis")]
        scores = {s.phenomenon: s for s in phenomenon_f1(reference, hypothesis)}
        cohesion = scores["lexical_cohesion"]
        assert cohesion.true_positives == 1
        assert cohesion.precision == 1.0
        assert cohesion.recall == 0.5
        assert cohesion.f1 == pytest.approx(2 / 3)

    def test_micro_pooling_not_macro_average(self) -> None:
        reference = [
            tagged("d", 0, ("pronouns", 0, "a")),
            tagged("d", 1, *[("pronouns", i, lex) for i, lex in enumerate("aabb")]),
        ]
        hypothesis = [
            tagged("d", 0, ("pronouns", 0, "a"), side="hypothesis"),
            tagged("d", 1, *[("pronouns", i, lex) for i, lex in enumerate("abcd")], side="hypothesis"),
        ]
        scores = {s.phenomenon: s for s in phenomenon_f1(reference, hypothesis)}
        assert scores["pronouns"].f1 == pytest.approx(0.6)
        assert scores["pronouns"].f1 != pytest.approx(0.75)

    def test_swapping_sides_exchanges_precision_and_recall(self) -> None:
        rng = random.Random(23)
        lexemes = ["a", "b", "c"]
        for _ in range(30):
            reference = [
                tagged("d", i, *[("pronouns", j, rng.choice(lexemes)) for j in range(rng.randint(0, 4))])
                for i in range(3)
            ]
            hypothesis = [
                tagged(
                    "d",
                    i,
                    *[("pronouns", j, rng.choice(lexemes)) for j in range(rng.randint(0, 4))],
                    side="hypothesis",
                )
                for i in range(3)
            ]
            forward = {s.phenomenon: s for s in phenomenon_f1(reference, hypothesis)}["pronouns"]
            backward = {s.phenomenon: s for s in phenomenon_f1(hypothesis, reference)}["pronouns"]
            if not forward.vacuous:
                assert forward.precision == (backward.recall if backward.recall is not None else 0.0) or (
                    forward.hyp_tag_count == 0
                )
                assert forward.f1 == pytest.approx(backward.f1)

    def test_coverage_mismatch_lists_missing_keys(self) -> None:
        reference = [tagged("d", 0), tagged("d", 1)]
        hypothesis = [tagged("d", 0, side="hypothesis")]
        with pytest.raises(EvaluationError, match=r"missing from hypothesis side: \[\('d', 1\)\]"):
            phenomenon_f1(reference, hypothesis)

    def test_duplicate_key_rejected(self) -> None:
        reference = [tagged("d", 0), tagged("d", 0)]
        with pytest.raises(EvaluationError, match="duplicate"):
            phenomenon_f1(reference, [tagged("d", 0, side="hypothesis")])

    def test_ambiguous_tags_excludable(self) -> None:
        reference = [tagged("d", 0, ("formality", 0, "Sie", True))]
        hypothesis = [tagged("d", 0, side="hypothesis")]
        with_ambiguous = {s.phenomenon: s for s in phenomenon_f1(reference, hypothesis)}
        without = {s.phenomenon: s for s in phenomenon_f1(reference, hypothesis, include_ambiguous=False)}
        assert with_ambiguous["formality"].f1 == 0.0
        assert without["formality"].vacuous
        assert without["formality"].f1 == 1.0


def small_corpus() -> tuple[list[Document], list[str]]:
    document = Document(
        doc_id="d",
        lang=LanguagePair("en", "pt"),
        pairs=(
            SentencePair(0, "She arrived early .", "Ela chegou cedo ."),
            SentencePair(1, "The economy grew .", "A economia cresceu ."),
        ),
    )
    return [document], [pair.reference for pair in document.pairs]


class TestEvaluateSystem:
    def test_perfect_system_scores_ceiling(self) -> None:
        documents, references = small_corpus()
        reference_tags = [tagged("d", 0, ("pronouns", 0, "ela")), tagged("d", 1)]
        hypothesis_tags = [
            tagged("d", 0, ("pronouns", 0, "ela"), side="hypothesis"),
            tagged("d", 1, side="hypothesis"),
        ]
        report = evaluate_system("identity", documents, references, reference_tags, hypothesis_tags)
        assert report.corpus_bleu == pytest.approx(100.0)
        assert report.corpus_chrf == pytest.approx(100.0)
        assert report.sentence_count == 2
        assert all(score.f1 == 1.0 for score in report.phenomena)
        assert [score.phenomenon for score in report.phenomena] == [
            "formality",
            "lexical_cohesion",
            "pronouns",
            "verb_form",
        ]

    def test_hypothesis_count_must_match(self) -> None:
        documents, _ = small_corpus()
        with pytest.raises(EvaluationError, match="2 corpus sentences"):
            evaluate_system("x", documents, ["only one"], [], [])

    def test_report_payload_shape_and_rendering(self) -> None:
        documents, references = small_corpus()
        reference_tags = [tagged("d", 0), tagged("d", 1)]
        hypothesis_tags = [tagged("d", 0, side="hypothesis"), tagged("d", 1, side="hypothesis")]
        report = evaluate_system("demo", documents, references, reference_tags, hypothesis_tags, context_window=5)
        payload = report_payload(report)
        assert sorted(payload) == ["edit_rate", "meta", "phenomena", "system", "translation"]
        assert payload["edit_rate"] is None
        assert payload["meta"]["context_window"] == 5
        rendered = render_report(report)
        assert rendered.endswith("\n")
        assert json.loads(rendered) == json.loads(json.dumps(payload, sort_keys=True))
        assert render_report(report) == rendered

    def test_markdown_rendering_mentions_each_phenomenon(self) -> None:
        documents, references = small_corpus()
        reference_tags = [tagged("d", 0), tagged("d", 1)]
        hypothesis_tags = [tagged("d", 0, side="hypothesis"), tagged("d", 1, side="hypothesis")]
        report = evaluate_system("demo", documents, references, reference_tags, hypothesis_tags)
        markdown = render_report_markdown(report)
        for phenomenon in ("formality", "lexical_cohesion", "pronouns", "verb_form"):
            assert f"| {phenomenon} |" in markdown
        assert "# Evaluation report: demo" in markdown

    def test_phenomena_order_enforced(self) -> None:
        scores = tuple(
            PhenomenonScore.from_counts(name, 0, 0, 0)
            for name in ("pronouns", "formality", "lexical_cohesion", "verb_form")
        )
        with pytest.raises(ValidationError, match="all phenomena in order"):
            EvalReport(
                system="x",
                corpus_bleu=0.0,
                corpus_chrf=0.0,
                phenomena=scores,
                sentence_count=1,
                bleu_signature="b",
                chrf_signature="c",
            )


class TestEditRateAnalysis:
    def test_identical_texts_give_zero_breakdown(self) -> None:
        tags = [tagged("d", 0, ("pronouns", 0, "ela"))]
        summary = edit_rate_analysis(["ela chegou cedo"], ["ela chegou cedo"], tags)
        assert summary.total_edits == 0
        assert summary.rate == 0.0
        assert summary.selected == 1

    def test_only_tagged_sentences_count(self) -> None:
        baselines = ["um dois tres quatro cinco", "a b c"]
        systems = ["um dois tres quatro seis", "x y z"]
        tags = [tagged("d", 0, ("pronouns", 0, "um")), tagged("d", 1)]
        summary = edit_rate_analysis(baselines, systems, tags)
        assert summary.selected == 1
        assert summary.substitutions == 1
        assert summary.rate == pytest.approx(0.2)

    def test_phenomenon_filter_selects_subset(self) -> None:
        baselines = ["a b", "c d", "e f"]
        systems = ["a x", "c x", "e x"]
        tags = [
            tagged("d", 0, ("pronouns", 0, "a")),
            tagged("d", 1, ("formality", 0, "c")),
            tagged("d", 2),
        ]
        pronouns_only = edit_rate_analysis(baselines, systems, tags, phenomena="pronouns")
        assert pronouns_only.selected == 1
        both = edit_rate_analysis(baselines, systems, tags, phenomena=["pronouns", "formality"])
        assert both.selected == 2
        everything = edit_rate_analysis(baselines, systems, tags)
        assert everything.selected == 2

    def test_union_of_filters_equals_unfiltered_selection(self) -> None:
        baselines = ["a b", "c d", "e f"]
        systems = ["a x", "c x", "e x"]
        tags = [
            tagged("d", 0, ("pronouns", 0, "a"), ("formality", 1, "b")),
            tagged("d", 1, ("formality", 0, "c")),
            tagged("d", 2, ("verb_form", 1, "f")),
        ]
        unfiltered = edit_rate_analysis(baselines, systems, tags)
        assert unfiltered.selected == 3

    def test_empty_selection_is_an_error(self) -> None:
        tags = [tagged("d", 0)]
        with pytest.raises(EvaluationError, match="no tagged sentences matched"):
            edit_rate_analysis(["a"], ["a"], tags, phenomena="pronouns")

    def test_ambiguous_tags_excludable_from_selection(self) -> None:
        tags = [tagged("d", 0, ("formality", 0, "Sie", True))]
        selected = edit_rate_analysis(["a b"], ["a b"], tags)
        assert selected.selected == 1
        with pytest.raises(EvaluationError, match="no tagged sentences"):
            edit_rate_analysis(["a b"], ["a b"], tags, include_ambiguous=False)

    def test_pooled_versus_per_sentence_aggregation(self) -> None:
        baselines = ["a b c d", "x y"]
        systems = ["a b c e", "p q"]
        tags = [tagged("d", 0, ("pronouns", 0, "a")), tagged("d", 1, ("pronouns", 0, "x"))]
        pooled = edit_rate_analysis(baselines, systems, tags, aggregation="pooled")
        per_sentence = edit_rate_analysis(baselines, systems, tags, aggregation="per_sentence")
        assert pooled.rate == pytest.approx(3 / 6)
        assert per_sentence.rate == pytest.approx((0.25 + 1.0) / 2)
        assert pooled.total_edits == per_sentence.total_edits == 3

    def test_parallel_length_mismatch(self) -> None:
        with pytest.raises(EvaluationError, match="parallel"):
            edit_rate_analysis(["a"], ["a", "b"], [tagged("d", 0)])

    def test_pooled_counts_match_per_sentence_oracle_sums(self) -> None:
        rng = random.Random(31)
        vocabulary = ["um", "dois", "tres", "quatro", "cinco", "seis"]
        for _ in range(20):
            count = rng.randint(1, 5)
            baselines = []
            systems = []
            tags = []
            for index in range(count):
                base = [rng.choice(vocabulary) for _ in range(rng.randint(1, 7))]
                mutated = [
                    token if rng.random() > 0.4 else rng.choice(vocabulary) for token in base
                ]
                if rng.random() < 0.3:
                    mutated.append(rng.choice(vocabulary))
                baselines.append(" ".join(base))
                systems.append(" ".join(mutated))
                tags.append(tagged("d", index, ("pronouns", 0, base[0])))
            summary = edit_rate_analysis(baselines, systems, tags)
            expected = [0, 0, 0, 0]
            for baseline, system in zip(baselines, systems):
                counts = oracle_ter_counts(
                    system.split(), baseline.split(), DEFAULT_METRIC_CONFIG.ter_max_shift_distance
                )
                expected = [have + got for have, got in zip(expected, counts)]
            assert [
                summary.insertions,
                summary.deletions,
                summary.substitutions,
                summary.shifts,
            ] == expected


class TestHumanOverlap:
    def annotation(
        self,
        index: int,
        phenomena: tuple[str, ...],
        doc_id: str = "d",
        preference: str = "qad",
    ) -> HumanAnnotation:
        return HumanAnnotation(
            doc_id=doc_id,
            sentence_index=index,
            phenomena=phenomena,
            semantic_difference=3,
            preference=preference,
        )

    def test_partial_agreement(self) -> None:
        auto = [tagged("d", 0, ("pronouns", 0, "sie"))]
        annotations = [self.annotation(0, ("pronouns", "formality"))]
        report = human_overlap(auto, annotations)
        assert report.overlap_of("pronouns") == 1.0
        assert report.overlap_of("formality") == 0.0
        assert report.overlap_of("verb_form") is None
        assert report.joined == 1

    def test_auto_superset_gives_full_overlap(self) -> None:
        auto = [
            tagged("d", 0, ("pronouns", 0, "a"), ("formality", 1, "b")),
            tagged("d", 1, ("pronouns", 0, "a"), ("verb_form", 1, "c")),
        ]
        annotations = [
            self.annotation(0, ("pronouns",)),
            self.annotation(1, ("verb_form",)),
        ]
        report = human_overlap(auto, annotations)
        assert report.overlap_of("pronouns") == 1.0
        assert report.overlap_of("verb_form") == 1.0

    def test_six_of_ten_agreement(self) -> None:
        auto = [
            tagged("d", i, ("pronouns", 0, "x")) if i < 6 else tagged("d", i)
            for i in range(10)
        ]
        annotations = [self.annotation(i, ("pronouns",)) for i in range(10)]
        report = human_overlap(auto, annotations)
        assert report.overlap_of("pronouns") == pytest.approx(0.6)

    def test_unjoined_annotations_are_skipped_and_counted(self) -> None:
        auto = [tagged("d", 0, ("pronouns", 0, "x"))]
        annotations = [self.annotation(0, ("pronouns",)), self.annotation(9, ("pronouns",))]
        report = human_overlap(auto, annotations)
        assert report.joined == 1
        assert report.skipped == 1
        assert report.overlap_of("pronouns") == 1.0

    def test_ambiguous_auto_tags_excludable(self) -> None:
        auto = [tagged("d", 0, ("formality", 0, "Sie", True))]
        annotations = [self.annotation(0, ("formality",))]
        assert human_overlap(auto, annotations).overlap_of("formality") == 1.0
        assert human_overlap(auto, annotations, include_ambiguous=False).overlap_of("formality") == 0.0


class TestPreferenceSummary:
    def test_unanimous_qad_at_difference_five(self) -> None:
        annotations = [
            HumanAnnotation("d", i, ("pronouns",), 5, "qad") for i in range(4)
        ]
        summary = preference_summary(annotations)
        bucket = summary.bucket(5)
        assert (bucket.greedy, bucket.qad, bucket.tie) == (0, 4, 0)
        assert all(
            (b.greedy, b.qad, b.tie) == (0, 0, 0) for b in summary.buckets if b.semantic_difference != 5
        )

    def test_no_correctness_judgments_means_empty_table(self) -> None:
        annotations = [HumanAnnotation("d", 0, (), 2, "tie")]
        summary = preference_summary(annotations)
        assert summary.correctness == ()

    def test_mixed_fixture_hand_tally(self) -> None:
        annotations = [
            HumanAnnotation("d", 0, ("pronouns",), 1, "tie", {"pronouns": True}, {"pronouns": True}),
            HumanAnnotation("d", 1, ("pronouns",), 4, "qad", {"pronouns": False}, {"pronouns": True}),
            HumanAnnotation("d", 2, ("formality",), 4, "qad", {"formality": False}, {"formality": True}),
            HumanAnnotation("d", 3, ("formality",), 2, "greedy", {"formality": True}, {"formality": False}),
            HumanAnnotation("d", 4, ("pronouns",), 4, "greedy", {}, {"pronouns": True}),
        ]
        summary = preference_summary(annotations)
        assert summary.annotation_count == 5
        four = summary.bucket(4)
        assert (four.greedy, four.qad, four.tie) == (1, 2, 0)
        rates = {entry.phenomenon: entry for entry in summary.correctness}
        assert rates["pronouns"].judged_greedy == 2
        assert rates["pronouns"].judged_qad == 3
        assert rates["pronouns"].greedy_rate == pytest.approx(0.5)
        assert rates["pronouns"].qad_rate == pytest.approx(1.0)
        assert rates["formality"].greedy_rate == pytest.approx(0.5)
        assert rates["formality"].qad_rate == pytest.approx(0.5)

    def test_empty_annotations_rejected(self) -> None:
        with pytest.raises(EvaluationError, match="at least one annotation"):
            preference_summary([])
