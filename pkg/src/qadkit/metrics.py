"""Lexical translation metrics: BLEU, ChrF, and a TER-style edit rate.

BLEU and ChrF follow the WMT-standard formulations: the 13a tokenizer,
modified n-gram precision with clipping, exponential smoothing of zero
precisions, brevity penalty, and for ChrF character n-grams with whitespace
removed and an F-beta over order-averaged precision/recall.  Case is never
folded (mixed-case scoring).  The edit rate is classic TER: a greedy search
over block shifts wrapped around minimum edit distance, normalized by the
length of the baseline.

All functions are pure and safe to call from multiple threads.
"""

from __future__ import annotations

import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from ._version import __version__
from .errors import MetricError, MetricWarning, ValidationError

BLEU_SMOOTHINGS = ("exp", "none")
BLEU_TOKENIZERS = ("thirteen_a",)

# Stand-in for log(0) so a zero precision annihilates the geometric mean
# without raising; the standard trick used by WMT scorers.
_LOG_ZERO = -9999999999.0


@dataclass(frozen=True)
class MetricConfig:
    """Knobs for every metric; the defaults reproduce the WMT configurations."""

    bleu_max_ngram: int = 4
    bleu_smoothing: str = "exp"
    bleu_tokenizer: str = "thirteen_a"
    chrf_char_ngram: int = 6
    chrf_word_ngram: int = 0
    chrf_beta: float = 2.0
    chrf_whitespace: bool = False
    ter_max_shift_distance: int = 10

    def __post_init__(self) -> None:
        if self.bleu_max_ngram < 1:
            raise ValidationError(f"bleu_max_ngram must be >= 1, got {self.bleu_max_ngram}")
        if self.bleu_smoothing not in BLEU_SMOOTHINGS:
            raise ValidationError(f"bleu_smoothing must be one of {BLEU_SMOOTHINGS}, got {self.bleu_smoothing!r}")
        if self.bleu_tokenizer not in BLEU_TOKENIZERS:
            raise ValidationError(f"bleu_tokenizer must be one of {BLEU_TOKENIZERS}, got {self.bleu_tokenizer!r}")
        if self.chrf_char_ngram < 1:
            raise ValidationError(f"chrf_char_ngram must be >= 1, got {self.chrf_char_ngram}")
        if self.chrf_word_ngram < 0:
            raise ValidationError(f"chrf_word_ngram must be >= 0, got {self.chrf_word_ngram}")
        if not self.chrf_beta > 0:
            raise ValidationError(f"chrf_beta must be > 0, got {self.chrf_beta}")
        if self.ter_max_shift_distance < 0:
            raise ValidationError(f"ter_max_shift_distance must be >= 0, got {self.ter_max_shift_distance}")


DEFAULT_METRIC_CONFIG = MetricConfig()


def bleu_signature(config: MetricConfig = DEFAULT_METRIC_CONFIG, *, sentence_level: bool = False) -> str:
    eff = "yes" if sentence_level else "no"
    return f"nrefs:1|case:mixed|eff:{eff}|tok:13a|smooth:{config.bleu_smoothing}|version:{__version__}"


def chrf_signature(config: MetricConfig = DEFAULT_METRIC_CONFIG) -> str:
    space = "yes" if config.chrf_whitespace else "no"
    return (
        f"nrefs:1|case:mixed|eff:yes|nc:{config.chrf_char_ngram}|"
        f"nw:{config.chrf_word_ngram}|space:{space}|version:{__version__}"
    )


# ---------------------------------------------------------------------------
# Tokenization

_13A_PUNCT = re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])")
_13A_PERIOD_BEFORE = re.compile(r"([^0-9])([\.,])")
_13A_PERIOD_AFTER = re.compile(r"([\.,])([^0-9])")
_13A_DASH = re.compile(r"([0-9])(-)")


def tokenize_13a(text: str) -> list[str]:
    """International WMT tokenization: unescape entities, pad punctuation.

    Case is preserved.  Periods and commas stay attached between digits
    (so "1.5" is one token) and dashes split only after digits.
    """
    norm = text
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")
    norm = f" {norm} "
    norm = _13A_PUNCT.sub(r" \1 ", norm)
    norm = _13A_PERIOD_BEFORE.sub(r"\1 \2 ", norm)
    norm = _13A_PERIOD_AFTER.sub(r" \1 \2", norm)
    norm = _13A_DASH.sub(r"\1 \2 ", norm)
    return norm.split()


@lru_cache(maxsize=65536)
def _tokens(text: str) -> tuple[str, ...]:
    return tuple(tokenize_13a(text))


# ---------------------------------------------------------------------------
# BLEU


@lru_cache(maxsize=65536)
def _word_ngrams(text: str, max_order: int) -> Counter:
    # Cached counters are shared; treat as read-only.
    tokens = _tokens(text)
    counts: Counter = Counter()
    for order in range(1, max_order + 1):
        for start in range(len(tokens) - order + 1):
            counts[tokens[start : start + order]] += 1
    return counts


def _bleu_pair_stats(hypothesis: str, reference: str, max_order: int) -> tuple[list[int], list[int], int, int]:
    """Clipped n-gram matches and totals per order for one sentence pair."""
    hyp_ngrams = _word_ngrams(hypothesis, max_order)
    ref_ngrams = _word_ngrams(reference, max_order)
    correct = [0] * max_order
    total = [0] * max_order
    for ngram, count in hyp_ngrams.items():
        order = len(ngram)
        total[order - 1] += count
        ref_count = ref_ngrams.get(ngram, 0)
        if ref_count:
            correct[order - 1] += min(count, ref_count)
    return correct, total, len(_tokens(hypothesis)), len(_tokens(reference))


def _safe_log(value: float) -> float:
    return math.log(value) if value > 0.0 else _LOG_ZERO

def _bleu_from_stats(
    correct: Sequence[int],
    total: Sequence[int],
    hyp_len: int,
    ref_len: int,
    config: MetricConfig,
    *,
    effective_order: bool,
) -> float:
    max_order = config.bleu_max_ngram
    precisions = [0.0] * max_order
    smooth_scale = 1.0
    effective = max_order
    for order in range(1, max_order + 1):
        if total[order - 1] == 0:
            break
        if effective_order:
            effective = order
        if correct[order - 1] == 0:
            if config.bleu_smoothing == "exp":
                smooth_scale *= 2.0
                precisions[order - 1] = 100.0 / (smooth_scale * total[order - 1])
        else:
            precisions[order - 1] = 100.0 * correct[order - 1] / total[order - 1]

    if hyp_len < ref_len:
        brevity_penalty = math.exp(1 - ref_len / hyp_len) if hyp_len > 0 else 0.0
    else:
        brevity_penalty = 1.0
    log_sum = sum(_safe_log(p) for p in precisions[:effective])
    return brevity_penalty * math.exp(log_sum / effective)


def sentence_bleu(hypothesis: str, reference: str, config: MetricConfig = DEFAULT_METRIC_CONFIG) -> float:
    """BLEU for a single pair, with effective-order smoothing for utility use.

    An empty reference cannot be scored; it yields 0.0 with a MetricWarning.
    """
    correct, total, hyp_len, ref_len = _bleu_pair_stats(hypothesis, reference, config.bleu_max_ngram)
    if ref_len == 0:
        warnings.warn("empty reference scored as BLEU 0", MetricWarning, stacklevel=2)
        return 0.0
    return _bleu_from_stats(correct, total, hyp_len, ref_len, config, effective_order=True)


def corpus_bleu(
    hypotheses: Sequence[str],
    references: Sequence[str],
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> float:
    """Corpus BLEU with statistics pooled before the geometric mean (eff:no)."""
    if len(hypotheses) != len(references):
        raise MetricError(f"got {len(hypotheses)} hypotheses for {len(references)} references")
    if not hypotheses:
        raise MetricError("corpus_bleu needs at least one sentence pair")
    max_order = config.bleu_max_ngram
    correct = [0] * max_order
    total = [0] * max_order
    hyp_len = 0
    ref_len = 0
    for hypothesis, reference in zip(hypotheses, references):
        pair_correct, pair_total, pair_hyp_len, pair_ref_len = _bleu_pair_stats(hypothesis, reference, max_order)
        for order in range(max_order):
            correct[order] += pair_correct[order]
            total[order] += pair_total[order]
        hyp_len += pair_hyp_len
        ref_len += pair_ref_len
    if ref_len == 0:
        warnings.warn("all references empty; corpus BLEU scored as 0", MetricWarning, stacklevel=2)
        return 0.0
    return _bleu_from_stats(correct, total, hyp_len, ref_len, config, effective_order=False)


# ---------------------------------------------------------------------------
# ChrF

_WHITESPACE = re.compile(r"\s+")


@lru_cache(maxsize=65536)
def _char_ngrams(text: str, order: int, keep_whitespace: bool) -> Counter:
    # Cached counters are shared; treat as read-only.
    prepared = text.strip() if keep_whitespace else _WHITESPACE.sub("", text)
    counts: Counter = Counter()
    for start in range(len(prepared) - order + 1):
        counts[prepared[start : start + order]] += 1
    return counts


def _chrf_pair_stats(hypothesis: str, reference: str, config: MetricConfig) -> list[int]:
    """Per order: [hypothesis n-grams, reference n-grams, matches] triples."""
    stats: list[int] = []
    for order in range(1, config.chrf_char_ngram + 1):
        hyp_counts = _char_ngrams(hypothesis, order, config.chrf_whitespace)
        ref_counts = _char_ngrams(reference, order, config.chrf_whitespace)
        matches = sum((hyp_counts & ref_counts).values())
        stats.extend((sum(hyp_counts.values()), sum(ref_counts.values()), matches))
    for order in range(1, config.chrf_word_ngram + 1):
        hyp_words = _word_ngram_counts_for_chrf(hypothesis, order)
        ref_words = _word_ngram_counts_for_chrf(reference, order)
        matches = sum((hyp_words & ref_words).values())
        stats.extend((sum(hyp_words.values()), sum(ref_words.values()), matches))
    return stats


@lru_cache(maxsize=65536)
def _word_ngram_counts_for_chrf(text: str, order: int) -> Counter:
    tokens = tuple(text.split())
    counts: Counter = Counter()
    for start in range(len(tokens) - order + 1):
        counts[tokens[start : start + order]] += 1
    return counts


def _chrf_from_stats(stats: Sequence[int], config: MetricConfig) -> float:
    avg_precision = 0.0
    avg_recall = 0.0
    effective_orders = 0
    for base in range(0, len(stats), 3):
        hyp_total, ref_total, matches = stats[base], stats[base + 1], stats[base + 2]
        # An order counts only when both sides produced n-grams at it.
        if hyp_total > 0 and ref_total > 0:
            avg_precision += matches / hyp_total
            avg_recall += matches / ref_total
            effective_orders += 1
    if effective_orders == 0:
        return 0.0
    avg_precision /= effective_orders
    avg_recall /= effective_orders
    if avg_precision + avg_recall == 0.0:
        return 0.0
    beta_square = config.chrf_beta**2
    fbeta = (1 + beta_square) * avg_precision * avg_recall / (beta_square * avg_precision + avg_recall)
    return 100.0 * fbeta


def chrf(hypothesis: str, reference: str, config: MetricConfig = DEFAULT_METRIC_CONFIG) -> float:
    """Character n-gram F-beta for one pair, on the 0-100 scale."""
    if not hypothesis.strip() and not reference.strip():
        warnings.warn("both strings empty; ChrF scored as 0", MetricWarning, stacklevel=2)
        return 0.0
    return _chrf_from_stats(_chrf_pair_stats(hypothesis, reference, config), config)


def corpus_chrf(
    hypotheses: Sequence[str],
    references: Sequence[str],
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> float:
    """Corpus ChrF: n-gram statistics summed over pairs, then one F-beta."""
    if len(hypotheses) != len(references):
        raise MetricError(f"got {len(hypotheses)} hypotheses for {len(references)} references")
    if not hypotheses:
        raise MetricError("corpus_chrf needs at least one sentence pair")
    totals: list[int] | None = None
    for hypothesis, reference in zip(hypotheses, references):
        stats = _chrf_pair_stats(hypothesis, reference, config)
        if totals is None:
            totals = list(stats)
        else:
            for position, value in enumerate(stats):
                totals[position] += value
    assert totals is not None
    return _chrf_from_stats(totals, config)


# ---------------------------------------------------------------------------
# TER-style edit rate


@dataclass(frozen=True)
class EditRateBreakdown:
    """Edit operations needed to turn a hypothesis into the baseline."""

    insertions: int
    deletions: int
    substitutions: int
    shifts: int
    reference_length: int
    rate: float

    @property
    def total_edits(self) -> int:
        return self.insertions + self.deletions + self.substitutions + self.shifts


def _edit_distance(source: Sequence[str], target: Sequence[str]) -> int:
    if not source:
        return len(target)
    if not target:
        return len(source)
    previous = list(range(len(target) + 1))
    for row, source_token in enumerate(source, start=1):
        current = [row] + [0] * len(target)
        for col, target_token in enumerate(target, start=1):
            cost = 0 if source_token == target_token else 1
            current[col] = min(previous[col - 1] + cost, previous[col] + 1, current[col - 1] + 1)
        previous = current
    return previous[-1]


def _edit_ops(source: Sequence[str], target: Sequence[str]) -> tuple[int, int, int]:
    """Insertions, deletions, substitutions of a minimal source->target edit.

    Minimal alignments are not unique; the backtrace prefers the diagonal,
    then deletion, then insertion on ties, which pins the breakdown.
    """
    rows = len(source) + 1
    cols = len(target) + 1
    dp = [[0] * cols for _ in range(rows)]
    for row in range(1, rows):
        dp[row][0] = row
    for col in range(1, cols):
        dp[0][col] = col
    for row in range(1, rows):
        for col in range(1, cols):
            cost = 0 if source[row - 1] == target[col - 1] else 1
            dp[row][col] = min(dp[row - 1][col - 1] + cost, dp[row - 1][col] + 1, dp[row][col - 1] + 1)

    insertions = deletions = substitutions = 0
    row, col = len(source), len(target)
    while row > 0 or col > 0:
        if row > 0 and col > 0:
            cost = 0 if source[row - 1] == target[col - 1] else 1
            if dp[row][col] == dp[row - 1][col - 1] + cost:
                substitutions += cost
                row -= 1
                col -= 1
                continue
        if row > 0 and dp[row][col] == dp[row - 1][col] + 1:
            deletions += 1
            row -= 1
            continue
        insertions += 1
        col -= 1
    return insertions, deletions, substitutions


def _reference_blocks(reference: Sequence[str]) -> set[tuple[str, ...]]:
    blocks: set[tuple[str, ...]] = set()
    for length in range(1, len(reference) + 1):
        for start in range(len(reference) - length + 1):
            blocks.add(tuple(reference[start : start + length]))
    return blocks


def _best_shift(
    hypothesis: list[str],
    reference: Sequence[str],
    current_distance: int,
    allowed_blocks: set[tuple[str, ...]],
    max_distance: int,
) -> tuple[int, list[str]] | None:
    """The block shift that most reduces edit distance, or None.

    Only blocks occurring verbatim in the reference may move, and at most
    max_distance positions.  Ties go to the smallest (block length, source
    position, target position), so the search is fully deterministic.
    """
    best_key: tuple[int, int, int, int] | None = None
    best_sequence: list[str] | None = None
    size = len(hypothesis)
    for length in range(1, size + 1):
        for start in range(0, size - length + 1):
            block = tuple(hypothesis[start : start + length])
            if block not in allowed_blocks:
                continue
            remainder = hypothesis[:start] + hypothesis[start + length :]
            for destination in range(0, len(remainder) + 1):
                if destination == start or abs(destination - start) > max_distance:
                    continue
                candidate = remainder[:destination] + list(block) + remainder[destination:]
                distance = _edit_distance(candidate, reference)
                if distance >= current_distance:
                    continue
                key = (distance, length, start, destination)
                if best_key is None or key < best_key:
                    best_key = key
                    best_sequence = candidate
    if best_sequence is None:
        return None
    assert best_key is not None
    return best_key[0], best_sequence


def ter_edit_rate(
    hypothesis: str,
    baseline: str,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> EditRateBreakdown:
    """Minimum insertions+deletions+substitutions+shifts turning the
    hypothesis into the baseline, normalized by baseline token count."""
    hyp_tokens = list(_tokens(hypothesis))
    ref_tokens = list(_tokens(baseline))
    if not ref_tokens:
        raise MetricError("edit rate is undefined against an empty baseline")

    allowed_blocks = _reference_blocks(ref_tokens)
    shifts = 0
    current = hyp_tokens
    distance = _edit_distance(current, ref_tokens)
    while distance > 0:
        found = _best_shift(current, ref_tokens, distance, allowed_blocks, config.ter_max_shift_distance)
        if found is None:
            break
        distance, current = found
        shifts += 1

    insertions, deletions, substitutions = _edit_ops(current, ref_tokens)
    total = insertions + deletions + substitutions + shifts
    return EditRateBreakdown(
        insertions=insertions,
        deletions=deletions,
        substitutions=substitutions,
        shifts=shifts,
        reference_length=len(ref_tokens),
        rate=total / len(ref_tokens),
    )
