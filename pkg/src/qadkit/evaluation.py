"""System evaluation: per-phenomenon F1, corpus scores, edit-rate analysis,
and agreement with human annotations.

Tag matching is lexeme-based: reference and hypothesis tokenizations are
unaligned, so tags are compared as multisets of lexemes per sentence and
phenomenon, then micro-pooled over the corpus.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import PHENOMENA, Document, HumanAnnotation
from .errors import EvaluationError, ValidationError
from .metrics import (
    DEFAULT_METRIC_CONFIG,
    EditRateBreakdown,
    MetricConfig,
    bleu_signature,
    chrf_signature,
    corpus_bleu,
    corpus_chrf,
    ter_edit_rate,
)
from .tagging import TaggedSentence

AGGREGATIONS = ("pooled", "per_sentence")


@dataclass(frozen=True)
class PhenomenonScore:
    """Micro-averaged precision/recall/F1 for one phenomenon.

    A phenomenon absent from both sides scores a vacuous 1.0 so language-pair
    averages are not dragged down by phenomena a corpus never exercises.
    With reference tags absent but hypothesis tags present, recall is
    undefined (None) and F1 is 0.
    """

    phenomenon: str
    true_positives: int
    ref_tag_count: int
    hyp_tag_count: int
    precision: float
    recall: float | None
    f1: float
    vacuous: bool

    def __post_init__(self) -> None:
        if self.phenomenon not in PHENOMENA:
            raise ValidationError(f"unknown phenomenon {self.phenomenon!r}")
        if min(self.true_positives, self.ref_tag_count, self.hyp_tag_count) < 0:
            raise ValidationError("tag counts must be nonnegative")

    @classmethod
    def from_counts(cls, phenomenon: str, true_positives: int, ref_tags: int, hyp_tags: int) -> PhenomenonScore:
        if ref_tags == 0 and hyp_tags == 0:
            return cls(phenomenon, 0, 0, 0, precision=1.0, recall=1.0, f1=1.0, vacuous=True)
        precision = true_positives / hyp_tags if hyp_tags > 0 else 0.0
        recall = true_positives / ref_tags if ref_tags > 0 else None
        if recall is None or precision + recall == 0.0:
            f1 = 0.0
        else:
            f1 = 2.0 * precision * recall / (precision + recall)
        return cls(phenomenon, true_positives, ref_tags, hyp_tags, precision, recall, f1, vacuous=False)


def _tag_index(
    sentences: Iterable[TaggedSentence], include_ambiguous: bool
) -> dict[tuple[str, int], dict[str, Counter[str]]]:
    index: dict[tuple[str, int], dict[str, Counter[str]]] = {}
    for sentence in sentences:
        key = (sentence.doc_id, sentence.sentence_index)
        if key in index:
            raise EvaluationError(f"duplicate tagged sentence for {key}")
        by_phenomenon: dict[str, Counter[str]] = {}
        for tag in sentence.tags:
            if tag.ambiguous and not include_ambiguous:
                continue
            by_phenomenon.setdefault(tag.phenomenon, Counter())[tag.lexeme] += 1
        index[key] = by_phenomenon
    return index


def phenomenon_f1(
    reference_tags: Sequence[TaggedSentence],
    hypothesis_tags: Sequence[TaggedSentence],
    include_ambiguous: bool = True,
) -> tuple[PhenomenonScore, ...]:
    """Micro-averaged F1 per phenomenon over lexeme multisets.

    Both sides must cover the same (doc_id, sentence_index) keys.  Token
    positions are ignored; per sentence and phenomenon, the true-positive
    count is the multiset intersection of lexemes.
    """
    reference_index = _tag_index(reference_tags, include_ambiguous)
    hypothesis_index = _tag_index(hypothesis_tags, include_ambiguous)
    if reference_index.keys() != hypothesis_index.keys():
        missing = sorted(reference_index.keys() - hypothesis_index.keys())
        extra = sorted(hypothesis_index.keys() - reference_index.keys())
        parts = []
        if missing:
            parts.append(f"missing from hypothesis side: {missing}")
        if extra:
            parts.append(f"missing from reference side: {extra}")
        raise EvaluationError(f"tag coverage mismatch; {'; '.join(parts)}")

    true_positives = {phenomenon: 0 for phenomenon in PHENOMENA}
    ref_counts = {phenomenon: 0 for phenomenon in PHENOMENA}
    hyp_counts = {phenomenon: 0 for phenomenon in PHENOMENA}
    for key, reference_side in reference_index.items():
        hypothesis_side = hypothesis_index[key]
        for phenomenon in PHENOMENA:
            ref_lexemes = reference_side.get(phenomenon, Counter())
            hyp_lexemes = hypothesis_side.get(phenomenon, Counter())
            ref_counts[phenomenon] += sum(ref_lexemes.values())
            hyp_counts[phenomenon] += sum(hyp_lexemes.values())
            true_positives[phenomenon] += sum((ref_lexemes & hyp_lexemes).values())

    return tuple(
        PhenomenonScore.from_counts(
            phenomenon, true_positives[phenomenon], ref_counts[phenomenon], hyp_counts[phenomenon]
        )
        for phenomenon in PHENOMENA
    )


# ---------------------------------------------------------------------------
# Edit-rate analysis on tagged subsets


@dataclass(frozen=True)
class EditRateSummary:
    """Aggregated edit operations over the tagged sentence subset."""

    selected: int
    insertions: int
    deletions: int
    substitutions: int
    shifts: int
    reference_length: int
    rate: float
    aggregation: str

    @property
    def total_edits(self) -> int:
        return self.insertions + self.deletions + self.substitutions + self.shifts


def edit_rate_analysis(
    baseline_texts: Sequence[str],
    system_texts: Sequence[str],
    tags: Sequence[TaggedSentence],
    phenomena: str | Sequence[str] | None = None,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
    aggregation: str = "pooled",
    include_ambiguous: bool = True,
) -> EditRateSummary:
    """Edit operations turning each tagged system sentence into the baseline.

    Only sentences whose tags (reference side) match the phenomenon filter
    are scored.  Pooled aggregation divides summed edits by summed baseline
    length; per_sentence averages the per-sentence rates instead.  Counts
    are summed either way.
    """
    if aggregation not in AGGREGATIONS:
        raise ValidationError(f"aggregation must be one of {AGGREGATIONS}, got {aggregation!r}")
    if not (len(baseline_texts) == len(system_texts) == len(tags)):
        raise EvaluationError(
            f"parallel inputs expected: {len(baseline_texts)} baseline, "
            f"{len(system_texts)} system, {len(tags)} tagged sentences"
        )
    if phenomena is None:
        wanted = set(PHENOMENA)
    else:
        wanted = {phenomena} if isinstance(phenomena, str) else set(phenomena)
        for name in wanted:
            if name not in PHENOMENA:
                raise ValidationError(f"unknown phenomenon {name!r}")

    breakdowns: list[EditRateBreakdown] = []
    for baseline, system, tagged in zip(baseline_texts, system_texts, tags):
        if any(tag.phenomenon in wanted and (include_ambiguous or not tag.ambiguous) for tag in tagged.tags):
            breakdowns.append(ter_edit_rate(system, baseline, config))
    if not breakdowns:
        names = ", ".join(sorted(wanted))
        raise EvaluationError(f"no tagged sentences matched the phenomenon filter ({names})")

    insertions = sum(b.insertions for b in breakdowns)
    deletions = sum(b.deletions for b in breakdowns)
    substitutions = sum(b.substitutions for b in breakdowns)
    shifts = sum(b.shifts for b in breakdowns)
    reference_length = sum(b.reference_length for b in breakdowns)
    if aggregation == "pooled":
        rate = (insertions + deletions + substitutions + shifts) / reference_length
    else:
        rate = math.fsum(b.rate for b in breakdowns) / len(breakdowns)
    return EditRateSummary(
        selected=len(breakdowns),
        insertions=insertions,
        deletions=deletions,
        substitutions=substitutions,
        shifts=shifts,
        reference_length=reference_length,
        rate=rate,
        aggregation=aggregation,
    )


# ---------------------------------------------------------------------------
# Whole-system report


@dataclass(frozen=True)
class EvalReport:
    """Translation scores plus per-phenomenon F1 for one system."""

    system: str
    corpus_bleu: float
    corpus_chrf: float
    phenomena: tuple[PhenomenonScore, ...]
    sentence_count: int
    bleu_signature: str
    chrf_signature: str
    edit_rate: EditRateSummary | None = None
    context_window: int | None = None
    include_ambiguous: bool = True

    def __post_init__(self) -> None:
        if tuple(score.phenomenon for score in self.phenomena) != PHENOMENA:
            raise ValidationError(f"report must cover all phenomena in order {PHENOMENA}")


def evaluate_system(
    system: str,
    documents: Sequence[Document],
    hypotheses: Sequence[str],
    reference_tags: Sequence[TaggedSentence],
    hypothesis_tags: Sequence[TaggedSentence],
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
    include_ambiguous: bool = True,
    edit_rate: EditRateSummary | None = None,
    context_window: int | None = None,
) -> EvalReport:
    """Bundle corpus BLEU/ChrF with per-phenomenon F1 into one report.

    The hypothesis list is parallel to the corpus sentences in document
    order.  Tag coverage is validated by phenomenon_f1.
    """
    references = [pair.reference for document in documents for pair in document.pairs]
    if len(hypotheses) != len(references):
        raise EvaluationError(f"got {len(hypotheses)} hypotheses for {len(references)} corpus sentences")
    scores = phenomenon_f1(reference_tags, hypothesis_tags, include_ambiguous)
    return EvalReport(
        system=system,
        corpus_bleu=corpus_bleu(hypotheses, references, config),
        corpus_chrf=corpus_chrf(hypotheses, references, config),
        phenomena=scores,
        sentence_count=len(references),
        bleu_signature=bleu_signature(config),
        chrf_signature=chrf_signature(config),
        edit_rate=edit_rate,
        context_window=context_window,
        include_ambiguous=include_ambiguous,
    )


def report_payload(report: EvalReport) -> dict:
    """The report as plain data with the stable top-level key set."""
    phenomena = {
        score.phenomenon: {
            "true_positives": score.true_positives,
            "ref_tags": score.ref_tag_count,
            "hyp_tags": score.hyp_tag_count,
            "precision": score.precision,
            "recall": score.recall,
            "f1": score.f1,
            "vacuous": score.vacuous,
        }
        for score in report.phenomena
    }
    edit_rate = None
    if report.edit_rate is not None:
        edit_rate = {
            "aggregation": report.edit_rate.aggregation,
            "selected": report.edit_rate.selected,
            "insertions": report.edit_rate.insertions,
            "deletions": report.edit_rate.deletions,
            "substitutions": report.edit_rate.substitutions,
            "shifts": report.edit_rate.shifts,
            "reference_length": report.edit_rate.reference_length,
            "rate": report.edit_rate.rate,
        }
    return {
        "system": report.system,
        "translation": {
            "bleu": report.corpus_bleu,
            "chrf": report.corpus_chrf,
            "sentences": report.sentence_count,
        },
        "phenomena": phenomena,
        "edit_rate": edit_rate,
        "meta": {
            "bleu_signature": report.bleu_signature,
            "chrf_signature": report.chrf_signature,
            "context_window": report.context_window,
            "include_ambiguous": report.include_ambiguous,
        },
    }


def render_report(report: EvalReport) -> str:
    """Canonical JSON rendering: sorted keys, two-space indent, one trailing newline."""
    return json.dumps(report_payload(report), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def render_report_markdown(report: EvalReport) -> str:
    """Human-readable rendering of the same report."""
    lines = [
        f"# Evaluation report: {report.system}",
        "",
        "## Translation",
        "",
        "| metric | score |",
        "| --- | --- |",
        f"| BLEU | {_fmt(report.corpus_bleu)} |",
        f"| ChrF | {_fmt(report.corpus_chrf)} |",
        f"| sentences | {report.sentence_count} |",
        "",
        "## Discourse phenomena",
        "",
        "| phenomenon | precision | recall | f1 | tp | ref tags | hyp tags | vacuous |",
        "| --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for score in report.phenomena:
        lines.append(
            f"| {score.phenomenon} | {_fmt(score.precision)} | {_fmt(score.recall)} | {_fmt(score.f1)} "
            f"| {score.true_positives} | {score.ref_tag_count} | {score.hyp_tag_count} "
            f"| {'yes' if score.vacuous else 'no'} |"
        )
    if report.edit_rate is not None:
        summary = report.edit_rate
        lines += [
            "",
            "## Edit rate on tagged sentences",
            "",
            "| selected | ins | del | sub | shift | ref len | rate | aggregation |",
            "| --- | --- | --- | --- | --- | --- | --- | --- |",
            f"| {summary.selected} | {summary.insertions} | {summary.deletions} | {summary.substitutions} "
            f"| {summary.shifts} | {summary.reference_length} | {_fmt(summary.rate)} | {summary.aggregation} |",
        ]
    lines += [
        "",
        "## Meta",
        "",
        f"- BLEU signature: `{report.bleu_signature}`",
        f"- ChrF signature: `{report.chrf_signature}`",
        f"- context window: {report.context_window if report.context_window is not None else '-'}",
        f"- ambiguous tags included: {'yes' if report.include_ambiguous else 'no'}",
        "",
    ]
    return "\n".join(lines)


def _payload_section(payload: dict, key: str) -> dict:
    section = payload.get(key)
    if not isinstance(section, dict):
        raise EvaluationError(f"report payload is missing the {key!r} section")
    return section


def report_from_payload(payload: dict) -> EvalReport:
    """Rebuild an EvalReport from its report_payload form.

    Round-trips with report_payload, so a stored report file can be
    re-rendered without recomputing anything.
    """
    if not isinstance(payload, dict):
        raise EvaluationError("report payload must be a JSON object")
    translation = _payload_section(payload, "translation")
    phenomena_section = _payload_section(payload, "phenomena")
    meta = _payload_section(payload, "meta")
    try:
        scores = tuple(
            PhenomenonScore(
                phenomenon=name,
                true_positives=phenomena_section[name]["true_positives"],
                ref_tag_count=phenomena_section[name]["ref_tags"],
                hyp_tag_count=phenomena_section[name]["hyp_tags"],
                precision=phenomena_section[name]["precision"],
                recall=phenomena_section[name]["recall"],
                f1=phenomena_section[name]["f1"],
                vacuous=phenomena_section[name]["vacuous"],
            )
            for name in PHENOMENA
        )
        edit_rate = None
        if payload.get("edit_rate") is not None:
            raw = payload["edit_rate"]
            edit_rate = EditRateSummary(
                selected=raw["selected"],
                insertions=raw["insertions"],
                deletions=raw["deletions"],
                substitutions=raw["substitutions"],
                shifts=raw["shifts"],
                reference_length=raw["reference_length"],
                rate=raw["rate"],
                aggregation=raw["aggregation"],
            )
        return EvalReport(
            system=payload["system"],
            corpus_bleu=translation["bleu"],
            corpus_chrf=translation["chrf"],
            phenomena=scores,
            sentence_count=translation["sentences"],
            bleu_signature=meta["bleu_signature"],
            chrf_signature=meta["chrf_signature"],
            edit_rate=edit_rate,
            context_window=meta["context_window"],
            include_ambiguous=meta["include_ambiguous"],
        )
    except (KeyError, TypeError) as exc:
        raise EvaluationError(f"malformed report payload: {exc}") from exc


# ---------------------------------------------------------------------------
# Human-annotation agreement


@dataclass(frozen=True)
class PhenomenonOverlap:
    """Sentence-level agreement between human and automatic tags."""

    phenomenon: str
    human_count: int
    auto_count: int
    both_count: int
    overlap: float | None


@dataclass(frozen=True)
class OverlapReport:
    """Per-phenomenon human/auto tag agreement over joined sentences."""

    joined: int
    skipped: int
    phenomena: tuple[PhenomenonOverlap, ...]

    def overlap_of(self, phenomenon: str) -> float | None:
        for entry in self.phenomena:
            if entry.phenomenon == phenomenon:
                return entry.overlap
        raise ValidationError(f"unknown phenomenon {phenomenon!r}")


def human_overlap(
    auto_tagged: Sequence[TaggedSentence],
    annotations: Sequence[HumanAnnotation],
    include_ambiguous: bool = True,
) -> OverlapReport:
    """Per phenomenon: |sentences tagged by both| / |sentences tagged by human|.

    Annotations without a matching auto-tagged sentence are skipped and
    counted.  A phenomenon no human tagged has no defined overlap (None),
    never a zero.
    """
    auto_index: dict[tuple[str, int], set[str]] = {}
    for sentence in auto_tagged:
        present = auto_index.setdefault((sentence.doc_id, sentence.sentence_index), set())
        for tag in sentence.tags:
            if tag.ambiguous and not include_ambiguous:
                continue
            present.add(tag.phenomenon)

    joined = 0
    skipped = 0
    human_counts = {phenomenon: 0 for phenomenon in PHENOMENA}
    auto_counts = {phenomenon: 0 for phenomenon in PHENOMENA}
    both_counts = {phenomenon: 0 for phenomenon in PHENOMENA}
    for annotation in annotations:
        key = (annotation.doc_id, annotation.sentence_index)
        if key not in auto_index:
            skipped += 1
            continue
        joined += 1
        auto_present = auto_index[key]
        for phenomenon in PHENOMENA:
            in_human = phenomenon in annotation.phenomena
            in_auto = phenomenon in auto_present
            human_counts[phenomenon] += in_human
            auto_counts[phenomenon] += in_auto
            both_counts[phenomenon] += in_human and in_auto

    entries = tuple(
        PhenomenonOverlap(
            phenomenon=phenomenon,
            human_count=human_counts[phenomenon],
            auto_count=auto_counts[phenomenon],
            both_count=both_counts[phenomenon],
            overlap=(both_counts[phenomenon] / human_counts[phenomenon]) if human_counts[phenomenon] else None,
        )
        for phenomenon in PHENOMENA
    )
    return OverlapReport(joined=joined, skipped=skipped, phenomena=entries)


# ---------------------------------------------------------------------------
# Preference statistics


@dataclass(frozen=True)
class PreferenceBucket:
    """Preference counts among annotations at one semantic-difference level."""

    semantic_difference: int
    greedy: int
    qad: int
    tie: int


@dataclass(frozen=True)
class CorrectnessRate:
    """How often each system handled one phenomenon correctly, per annotators."""

    phenomenon: str
    judged_greedy: int
    judged_qad: int
    greedy_rate: float | None
    qad_rate: float | None


@dataclass(frozen=True)
class PreferenceSummary:
    """Preference-versus-difference table plus per-phenomenon correctness."""

    annotation_count: int
    buckets: tuple[PreferenceBucket, ...]
    correctness: tuple[CorrectnessRate, ...]

    def bucket(self, semantic_difference: int) -> PreferenceBucket:
        for entry in self.buckets:
            if entry.semantic_difference == semantic_difference:
                return entry
        raise ValidationError(f"semantic difference must be 1-5, got {semantic_difference}")


def preference_summary(annotations: Sequence[HumanAnnotation]) -> PreferenceSummary:
    """Tally preferences per semantic-difference bucket and correctness rates."""
    if not annotations:
        raise EvaluationError("preference summary needs at least one annotation")
    tallies: dict[int, dict[str, int]] = {
        difference: {"greedy": 0, "qad": 0, "tie": 0} for difference in range(1, 6)
    }
    judged: dict[str, dict[str, list[bool]]] = {
        phenomenon: {"greedy": [], "qad": []} for phenomenon in PHENOMENA
    }
    for annotation in annotations:
        tallies[annotation.semantic_difference][annotation.preference] += 1
        for phenomenon, correct in annotation.correct_greedy.items():
            judged[phenomenon]["greedy"].append(correct)
        for phenomenon, correct in annotation.correct_qad.items():
            judged[phenomenon]["qad"].append(correct)

    buckets = tuple(
        PreferenceBucket(
            semantic_difference=difference,
            greedy=tallies[difference]["greedy"],
            qad=tallies[difference]["qad"],
            tie=tallies[difference]["tie"],
        )
        for difference in range(1, 6)
    )
    correctness = []
    for phenomenon in PHENOMENA:
        greedy_judgments = judged[phenomenon]["greedy"]
        qad_judgments = judged[phenomenon]["qad"]
        if not greedy_judgments and not qad_judgments:
            continue
        correctness.append(
            CorrectnessRate(
                phenomenon=phenomenon,
                judged_greedy=len(greedy_judgments),
                judged_qad=len(qad_judgments),
                greedy_rate=(sum(greedy_judgments) / len(greedy_judgments)) if greedy_judgments else None,
                qad_rate=(sum(qad_judgments) / len(qad_judgments)) if qad_judgments else None,
            )
        )
    return PreferenceSummary(
        annotation_count=len(annotations),
        buckets=buckets,
        correctness=tuple(correctness),
    )
