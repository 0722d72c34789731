"""Lexicon- and alignment-driven tagging of discourse phenomena.

Target-side tokens (whitespace tokenization of the raw text) are tagged with
four phenomena: lexical_cohesion via document-scoped repetition of aligned
source-target pairs, and pronouns / formality / verb_form via per-language
lexicons.  Lexicons are editable TOML files; the shipped ones are illustrative
starter lists, and nothing here depends on their completeness.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ._toml import load_toml
from .core import PHENOMENA, Document, _dump_line, _field, _iter_records
from .errors import TaggingError, ValidationError

MATCH_MODES = ("exact", "case_sensitive_exact", "suffix")
SIDES = ("reference", "hypothesis")

# Phenomenon names, shared with core.PHENOMENA.
LEXICAL_COHESION = "lexical_cohesion"
PRONOUNS = "pronouns"
FORMALITY = "formality"
VERB_FORM = "verb_form"


@dataclass(frozen=True)
class LexiconEntry:
    """One surface form (or suffix) with its matching mode."""

    form: str
    mode: str

    def __post_init__(self) -> None:
        if not self.form:
            raise ValidationError("lexicon entry form must be nonempty")
        if self.mode not in MATCH_MODES:
            raise ValidationError(f"match mode must be one of {MATCH_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class Lexicon:
    """Per-language marker lists for the lexicon-driven phenomena."""

    language: str
    pronouns: tuple[LexiconEntry, ...]
    formality_markers: tuple[LexiconEntry, ...]
    verb_form_markers: tuple[LexiconEntry, ...]

    def __post_init__(self) -> None:
        if not (2 <= len(self.language) <= 3 and self.language.isalpha() and self.language.islower()):
            raise ValidationError(f"lexicon language must be a lowercase ISO code, got {self.language!r}")
        total = 0
        for name, entries in (
            ("pronouns", self.pronouns),
            ("formality", self.formality_markers),
            ("verb_form", self.verb_form_markers),
        ):
            seen: set[tuple[str, str]] = set()
            for entry in entries:
                key = (entry.form, entry.mode)
                if key in seen:
                    raise ValidationError(f"duplicate {name} entry {key} in lexicon {self.language!r}")
                seen.add(key)
            total += len(entries)
        if total == 0:
            raise ValidationError(f"lexicon {self.language!r} has no entries at all")


def load_lexicon(path: str | Path) -> Lexicon:
    """Read a lexicon TOML file with [[pronouns]]/[[formality]]/[[verb_form]] entries."""
    data = load_toml(path)
    language = data.get("language")
    if not isinstance(language, str):
        raise ValidationError(f"{path}: lexicon needs a string 'language' key")

    def entries(key: str) -> tuple[LexiconEntry, ...]:
        raw = data.get(key, [])
        if not isinstance(raw, list):
            raise ValidationError(f"{path}: {key} must be an array of tables")
        out = []
        for item in raw:
            if not isinstance(item, dict) or "form" not in item or "mode" not in item:
                raise ValidationError(f"{path}: each {key} entry needs 'form' and 'mode'")
            out.append(LexiconEntry(form=str(item["form"]), mode=str(item["mode"])))
        return tuple(out)

    try:
        return Lexicon(
            language=language,
            pronouns=entries("pronouns"),
            formality_markers=entries("formality"),
            verb_form_markers=entries("verb_form"),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _lexicon_dir():
    return resources.files("qadkit") / "data" / "lexicons"


def shipped_lexicon_languages() -> list[str]:
    return sorted(p.name.removesuffix(".toml") for p in _lexicon_dir().iterdir() if p.name.endswith(".toml"))


def shipped_lexicon(language: str) -> Lexicon:
    """Load one of the bundled illustrative starter lexicons."""
    candidate = _lexicon_dir() / f"{language}.toml"
    if not candidate.is_file():
        raise ValidationError(
            f"no shipped lexicon for {language!r}; available: {', '.join(shipped_lexicon_languages())}"
        )
    with resources.as_file(candidate) as path:
        return load_lexicon(path)


@dataclass(frozen=True)
class PhenomenonTag:
    """One phenomenon attached to one target-side token."""

    phenomenon: str
    token_index: int
    lexeme: str
    ambiguous: bool = False

    def __post_init__(self) -> None:
        if self.phenomenon not in PHENOMENA:
            raise ValidationError(f"unknown phenomenon {self.phenomenon!r}")
        if self.token_index < 0:
            raise ValidationError(f"token_index must be nonnegative, got {self.token_index}")

    @property
    def sort_key(self) -> tuple[int, str]:
        return (self.token_index, self.phenomenon)


@dataclass(frozen=True)
class TaggedSentence:
    """All tags for one sentence on one side of the parallel text."""

    doc_id: str
    sentence_index: int
    side: str
    tags: tuple[PhenomenonTag, ...]

    def __post_init__(self) -> None:
        if self.side not in SIDES:
            raise ValidationError(f"side must be one of {SIDES}, got {self.side!r}")
        keys = [tag.sort_key for tag in self.tags]
        if keys != sorted(keys):
            raise ValidationError(
                f"tags for ({self.doc_id!r}, {self.sentence_index}) must be sorted by (token_index, phenomenon)"
            )


# ---------------------------------------------------------------------------
# Lexicon matching


def _match_entry(entry: LexiconEntry, token: str, token_index: int) -> tuple[str, bool] | None:
    """(lexeme, ambiguous) when the entry matches the token, else None."""
    if entry.mode == "exact":
        if token.lower() == entry.form.lower():
            return token.lower(), False
        return None
    if entry.mode == "suffix":
        if token.lower().endswith(entry.form.lower()):
            return token.lower(), False
        return None
    # case_sensitive_exact: verbatim, except that a sentence-initial token is
    # additionally tried in decapitalized form when the entry is lowercase.
    # Any case-sensitive match at token 0 is flagged ambiguous, because
    # sentence-initial capitalization can mimic or mask the marked form.
    if token == entry.form:
        return token, token_index == 0
    if token_index == 0 and entry.form and entry.form[0].islower():
        decapitalized = token[0].lower() + token[1:] if token else token
        if decapitalized == entry.form:
            return token, True
    return None


def tag_lexicon_phenomena(tokens: Sequence[str], lexicon: Lexicon) -> list[PhenomenonTag]:
    """Tag pronouns, formality markers, and verb forms in one sentence.

    A token can carry several phenomena but at most one tag per phenomenon;
    the first matching lexicon entry wins.
    """
    tags: list[PhenomenonTag] = []
    lists = (
        (PRONOUNS, lexicon.pronouns),
        (FORMALITY, lexicon.formality_markers),
        (VERB_FORM, lexicon.verb_form_markers),
    )
    for token_index, token in enumerate(tokens):
        for phenomenon, entries in lists:
            for entry in entries:
                matched = _match_entry(entry, token, token_index)
                if matched is not None:
                    lexeme, ambiguous = matched
                    tags.append(
                        PhenomenonTag(
                            phenomenon=phenomenon,
                            token_index=token_index,
                            lexeme=lexeme,
                            ambiguous=ambiguous,
                        )
                    )
                    break
    tags.sort(key=lambda tag: tag.sort_key)
    return tags


# ---------------------------------------------------------------------------
# Alignment-based repetition


def tag_lexical_repetition(
    target_tokens: Sequence[Sequence[str]],
    source_tokens: Sequence[Sequence[str]],
    links: Sequence[Iterable[tuple[int, int]]],
    threshold: int = 3,
) -> list[list[PhenomenonTag]]:
    """Tag target tokens of aligned pairs repeated more than `threshold` times.

    Pair counts are lowercased (source form, target form) occurrences summed
    over the whole document; the inequality is strict, so a pair aligned
    exactly `threshold` times yields no tags.
    """
    if threshold < 1:
        raise ValidationError(f"repetition threshold must be >= 1, got {threshold}")
    if not (len(target_tokens) == len(source_tokens) == len(links)):
        raise TaggingError(
            f"parallel inputs expected: {len(target_tokens)} target sentences, "
            f"{len(source_tokens)} source sentences, {len(links)} alignment sets"
        )

    pair_counts: Counter[tuple[str, str]] = Counter()
    resolved: list[list[tuple[int, int, str, str]]] = []
    for sentence_index, sentence_links in enumerate(links):
        rows = []
        for s, t in sentence_links:
            try:
                source_form = source_tokens[sentence_index][s]
                target_form = target_tokens[sentence_index][t]
            except IndexError:
                raise TaggingError(
                    f"alignment link ({s},{t}) out of bounds in sentence {sentence_index}"
                ) from None
            pair = (source_form.lower(), target_form.lower())
            pair_counts[pair] += 1
            rows.append((s, t, *pair))
        resolved.append(rows)

    tags_per_sentence: list[list[PhenomenonTag]] = []
    for rows in resolved:
        tagged_positions: set[int] = set()
        tags: list[PhenomenonTag] = []
        for _, t, source_lower, target_lower in rows:
            if pair_counts[(source_lower, target_lower)] > threshold and t not in tagged_positions:
                tagged_positions.add(t)
                tags.append(PhenomenonTag(phenomenon=LEXICAL_COHESION, token_index=t, lexeme=target_lower))
        tags.sort(key=lambda tag: tag.sort_key)
        tags_per_sentence.append(tags)
    return tags_per_sentence


def fallback_alignment(source_tokens: Sequence[str], target_tokens: Sequence[str]) -> tuple[tuple[int, int], ...]:
    """Deterministic stand-in aligner for when no alignment file exists.

    Identical lowercase tokens are matched greedily (closest relative
    position first); every remaining target token is mapped to the source
    position proportional to its own.
    """
    if not source_tokens or not target_tokens:
        return ()
    used: set[int] = set()
    links: list[tuple[int, int]] = []
    source_lower = [token.lower() for token in source_tokens]
    for t, token in enumerate(target_tokens):
        wanted = token.lower()
        best: int | None = None
        best_distance = 0.0
        for s, candidate in enumerate(source_lower):
            if candidate != wanted or s in used:
                continue
            distance = abs(s / len(source_tokens) - t / len(target_tokens))
            if best is None or distance < best_distance:
                best = s
                best_distance = distance
        if best is not None:
            used.add(best)
            links.append((best, t))
        else:
            if len(target_tokens) == 1:
                position = 0
            else:
                position = round(t * (len(source_tokens) - 1) / (len(target_tokens) - 1))
            links.append((position, t))
    return tuple(links)


# ---------------------------------------------------------------------------
# Whole-document tagging


def tag_document(
    document: Document,
    side_texts: Sequence[str],
    side: str,
    lexicon: Lexicon,
    alignments: Mapping[int, Iterable[tuple[int, int]]] | None = None,
    threshold: int = 3,
) -> list[TaggedSentence]:
    """Union of repetition tags and lexicon tags for one document side.

    side_texts must be parallel to the document's sentences: references for
    side="reference", system outputs for side="hypothesis".  When alignments
    (keyed by sentence index) are missing for a sentence, the fallback
    aligner fills in.  Tagging is document-scoped: nothing outside this
    document influences the result.
    """
    if side not in SIDES:
        raise ValidationError(f"side must be one of {SIDES}, got {side!r}")
    if len(side_texts) != len(document.pairs):
        raise TaggingError(
            f"document {document.doc_id!r} has {len(document.pairs)} sentences "
            f"but {len(side_texts)} texts were supplied"
        )
    if lexicon.language != document.lang.target:
        raise TaggingError(
            f"lexicon is for {lexicon.language!r} but document {document.doc_id!r} "
            f"targets {document.lang.target!r}"
        )

    target_tokens = [text.split() for text in side_texts]
    source_tokens = [pair.source.split() for pair in document.pairs]
    links: list[Iterable[tuple[int, int]]] = []
    for position, pair in enumerate(document.pairs):
        given = alignments.get(position) if alignments is not None else None
        if given is None:
            links.append(fallback_alignment(source_tokens[position], target_tokens[position]))
        else:
            links.append(given)

    repetition = tag_lexical_repetition(target_tokens, source_tokens, links, threshold)
    tagged: list[TaggedSentence] = []
    for position, pair in enumerate(document.pairs):
        merged = repetition[position] + tag_lexicon_phenomena(target_tokens[position], lexicon)
        merged.sort(key=lambda tag: tag.sort_key)
        tagged.append(
            TaggedSentence(doc_id=document.doc_id, sentence_index=pair.index, side=side, tags=tuple(merged))
        )
    return tagged


# ---------------------------------------------------------------------------
# Tag file IO


def load_tag_file(path: str | Path) -> list[TaggedSentence]:
    sentences = []
    seen: set[tuple[str, int, str]] = set()
    for number, record in _iter_records(path):
        where = f"{path}:{number}"
        doc_id = _field(record, "doc_id", str, where)
        index = _field(record, "index", int, where)
        side = _field(record, "side", str, where)
        key = (doc_id, index, side)
        if key in seen:
            raise ValidationError(f"{where}: duplicate tagged sentence for {key}")
        seen.add(key)
        raw = _field(record, "tags", list, where)
        tags = []
        for item in raw:
            if not isinstance(item, dict):
                raise ValidationError(f"{where}: each tag must be an object")
            tags.append(
                PhenomenonTag(
                    phenomenon=_field(item, "phenomenon", str, where),
                    token_index=_field(item, "token", int, where),
                    lexeme=_field(item, "lexeme", str, where),
                    ambiguous=bool(item.get("ambiguous", False)),
                )
            )
        try:
            sentences.append(TaggedSentence(doc_id=doc_id, sentence_index=index, side=side, tags=tuple(tags)))
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
    return sentences


def serialize_tag_file(sentences: Iterable[TaggedSentence]) -> str:
    return "".join(
        _dump_line(
            {
                "doc_id": s.doc_id,
                "index": s.sentence_index,
                "side": s.side,
                "tags": [
                    {
                        "phenomenon": t.phenomenon,
                        "token": t.token_index,
                        "lexeme": t.lexeme,
                        "ambiguous": t.ambiguous,
                    }
                    for t in s.tags
                ],
            }
        )
        for s in sentences
    )
