"""Independent brute-force oracles for cross-checking the package.

Everything here is written in the most literal style possible: explicit
loops, list-consumption matching instead of Counter arithmetic, product-form
geometric means instead of log sums, full DP matrices instead of rolling
rows.  Nothing is imported from the package, so agreement between the two
routes is evidence, not tautology.

BLEU/TER oracles operate on pre-split token lists; tokenizer behavior is
pinned separately by hand-derived frozen cases in the metric tests.
"""

from __future__ import annotations

import math


# ---------------------------------------------------------------------------
# BLEU


def _ngram_list(tokens: list[str], order: int) -> list[tuple[str, ...]]:
    grams = []
    for start in range(len(tokens) - order + 1):
        grams.append(tuple(tokens[start : start + order]))
    return grams


def _clipped_matches(hyp_tokens: list[str], ref_tokens: list[str], order: int) -> tuple[int, int]:
    hyp_grams = _ngram_list(hyp_tokens, order)
    remaining = _ngram_list(ref_tokens, order)
    matches = 0
    for gram in hyp_grams:
        if gram in remaining:
            remaining.remove(gram)
            matches += 1
    return matches, len(hyp_grams)


def _brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    if hyp_len == 0:
        return 0.0
    return math.exp(1.0 - ref_len / hyp_len)


def _geometric_mean(values: list[float]) -> float:
    product = 1.0
    for value in values:
        product *= value
    if product <= 0.0:
        return 0.0
    return product ** (1.0 / len(values))


def oracle_sentence_bleu(hyp_tokens: list[str], ref_tokens: list[str]) -> float:
    """Effective-order BLEU with exponential smoothing, scale 0-100."""
    precisions: list[float] = []
    smooth = 1.0
    for order in (1, 2, 3, 4):
        matches, total = _clipped_matches(hyp_tokens, ref_tokens, order)
        if total == 0:
            break
        if matches == 0:
            smooth = smooth * 2.0
            precisions.append(100.0 / (smooth * total))
        else:
            precisions.append(100.0 * matches / total)
    if not precisions:
        return 0.0
    return _brevity_penalty(len(hyp_tokens), len(ref_tokens)) * _geometric_mean(precisions)


def oracle_corpus_bleu(pairs: list[tuple[list[str], list[str]]]) -> float:
    """Pooled-statistics BLEU over fixed orders 1..4 (no effective-order)."""
    matches = [0, 0, 0, 0]
    totals = [0, 0, 0, 0]
    hyp_len = 0
    ref_len = 0
    for hyp_tokens, ref_tokens in pairs:
        for order in (1, 2, 3, 4):
            m, t = _clipped_matches(hyp_tokens, ref_tokens, order)
            matches[order - 1] += m
            totals[order - 1] += t
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
    precisions = []
    smooth = 1.0
    for order in (1, 2, 3, 4):
        if totals[order - 1] == 0:
            precisions.append(0.0)
            continue
        if matches[order - 1] == 0:
            smooth = smooth * 2.0
            precisions.append(100.0 / (smooth * totals[order - 1]))
        else:
            precisions.append(100.0 * matches[order - 1] / totals[order - 1])
    return _brevity_penalty(hyp_len, ref_len) * _geometric_mean(precisions)


# ---------------------------------------------------------------------------
# ChrF


def _char_ngram_list(text: str, order: int) -> list[str]:
    squeezed = "".join(text.split())
    return [squeezed[start : start + order] for start in range(len(squeezed) - order + 1)]


def _pair_chrf_stats(hyp: str, ref: str, max_order: int) -> list[list[int]]:
    stats = []
    for order in range(1, max_order + 1):
        hyp_grams = _char_ngram_list(hyp, order)
        remaining = _char_ngram_list(ref, order)
        ref_total = len(remaining)
        matched = 0
        for gram in hyp_grams:
            if gram in remaining:
                remaining.remove(gram)
                matched += 1
        stats.append([len(hyp_grams), ref_total, matched])
    return stats


def _chrf_from_stats(stats: list[list[int]], beta: float) -> float:
    precisions = []
    recalls = []
    for hyp_total, ref_total, matched in stats:
        if hyp_total > 0 and ref_total > 0:
            precisions.append(matched / hyp_total)
            recalls.append(matched / ref_total)
    if not precisions:
        return 0.0
    avg_p = sum(precisions) / len(precisions)
    avg_r = sum(recalls) / len(recalls)
    if avg_p + avg_r == 0.0:
        return 0.0
    beta_sq = beta * beta
    return 100.0 * (1.0 + beta_sq) * avg_p * avg_r / (beta_sq * avg_p + avg_r)


def oracle_chrf(hyp: str, ref: str, max_order: int = 6, beta: float = 2.0) -> float:
    return _chrf_from_stats(_pair_chrf_stats(hyp, ref, max_order), beta)


def oracle_corpus_chrf(pairs: list[tuple[str, str]], max_order: int = 6, beta: float = 2.0) -> float:
    totals = [[0, 0, 0] for _ in range(max_order)]
    for hyp, ref in pairs:
        for position, triple in enumerate(_pair_chrf_stats(hyp, ref, max_order)):
            totals[position][0] += triple[0]
            totals[position][1] += triple[1]
            totals[position][2] += triple[2]
    return _chrf_from_stats(totals, beta)


# ---------------------------------------------------------------------------
# TER


def oracle_edit_distance(a: list[str], b: list[str]) -> int:
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for row in range(rows):
        table[row][0] = row
    for col in range(cols):
        table[0][col] = col
    for row in range(1, rows):
        for col in range(1, cols):
            if a[row - 1] == b[col - 1]:
                diag = table[row - 1][col - 1]
            else:
                diag = table[row - 1][col - 1] + 1
            table[row][col] = min(diag, table[row - 1][col] + 1, table[row][col - 1] + 1)
    return table[rows - 1][cols - 1]


def oracle_edit_ops(a: list[str], b: list[str]) -> tuple[int, int, int]:
    """(insertions, deletions, substitutions); backtrace prefers the
    diagonal, then deletion, then insertion on cost ties (the pinned
    convention shared with the implementation's documented contract)."""
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for row in range(rows):
        table[row][0] = row
    for col in range(cols):
        table[0][col] = col
    for row in range(1, rows):
        for col in range(1, cols):
            if a[row - 1] == b[col - 1]:
                diag = table[row - 1][col - 1]
            else:
                diag = table[row - 1][col - 1] + 1
            table[row][col] = min(diag, table[row - 1][col] + 1, table[row][col - 1] + 1)

    insertions = 0
    deletions = 0
    substitutions = 0
    row = len(a)
    col = len(b)
    while row > 0 or col > 0:
        took_diagonal = False
        if row > 0 and col > 0:
            step = 0 if a[row - 1] == b[col - 1] else 1
            if table[row][col] == table[row - 1][col - 1] + step:
                substitutions += step
                row -= 1
                col -= 1
                took_diagonal = True
        if took_diagonal:
            continue
        if row > 0 and table[row][col] == table[row - 1][col] + 1:
            deletions += 1
            row -= 1
            continue
        insertions += 1
        col -= 1
    return insertions, deletions, substitutions


def _block_occurs(block: list[str], reference: list[str]) -> bool:
    size = len(block)
    for start in range(len(reference) - size + 1):
        if reference[start : start + size] == block:
            return True
    return False


def oracle_ter_counts(
    hyp_tokens: list[str],
    ref_tokens: list[str],
    max_shift_distance: int = 10,
) -> tuple[int, int, int, int]:
    """(insertions, deletions, substitutions, shifts) of greedy TER."""
    sequence = list(hyp_tokens)
    shifts = 0
    while True:
        base = oracle_edit_distance(sequence, ref_tokens)
        if base == 0:
            break
        candidates = []
        for length in range(1, len(sequence) + 1):
            for start in range(len(sequence) - length + 1):
                block = sequence[start : start + length]
                if not _block_occurs(block, ref_tokens):
                    continue
                rest = sequence[:start] + sequence[start + length :]
                for destination in range(len(rest) + 1):
                    if destination == start:
                        continue
                    if abs(destination - start) > max_shift_distance:
                        continue
                    moved = rest[:destination] + block + rest[destination:]
                    distance = oracle_edit_distance(moved, ref_tokens)
                    if distance < base:
                        candidates.append((distance, length, start, destination, moved))
        if not candidates:
            break
        candidates.sort(key=lambda item: (item[0], item[1], item[2], item[3]))
        sequence = candidates[0][4]
        shifts += 1
    insertions, deletions, substitutions = oracle_edit_ops(sequence, ref_tokens)
    return insertions, deletions, substitutions, shifts


# ---------------------------------------------------------------------------
# Selection


def oracle_mbr(texts, utility, include_self: bool):
    """(chosen index, expected utilities) by exhaustive matrix enumeration.

    Rows are reduced with math.fsum (exact summation), so ties between
    identical candidates are exact and independent of which self-index was
    skipped; any correct implementation must reproduce these values bit for
    bit.
    """
    size = len(texts)
    matrix = [[utility(texts[i], texts[j]) for j in range(size)] for i in range(size)]
    expected = []
    for i in range(size):
        values = []
        for j in range(size):
            if include_self or j != i:
                values.append(matrix[i][j])
        if values:
            expected.append(math.fsum(values) / len(values))
        else:
            expected.append(0.0)
    best = 0
    for i in range(1, size):
        if expected[i] > expected[best]:
            best = i
    return best, expected


def oracle_nucleus(items: list[tuple[object, float]], p: float) -> list[tuple[object, float]]:
    """Smallest probability-descending prefix with cumulative mass >= p."""
    order = sorted(range(len(items)), key=lambda i: (-items[i][1], i))
    kept = []
    cumulative = 0.0
    for position in order:
        kept.append(position)
        cumulative += items[position][1]
        if cumulative >= p:
            break
    kept.sort()
    if len(kept) == len(items):
        return list(items)
    mass = sum(items[i][1] for i in kept)
    return [(items[i][0], items[i][1] / mass) for i in kept]


# ---------------------------------------------------------------------------
# Lexical cohesion


def oracle_cohesion_devices(content_tokens: list[str], groups: list[set[str]]) -> int:
    """A token is a device when any earlier token repeats it or shares a
    synonym group with it; count by quadratic scan."""

    def same_group(a: str, b: str) -> bool:
        for group in groups:
            if a in group and b in group:
                return True
        return False

    devices = 0
    for position in range(len(content_tokens)):
        for earlier in range(position):
            token = content_tokens[position]
            other = content_tokens[earlier]
            if other == token or same_group(other, token):
                devices += 1
                break
    return devices
