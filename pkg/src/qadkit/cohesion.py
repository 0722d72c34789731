"""Lexical-cohesion scoring and the utility registry for candidate selection.

The cohesion ratio counts cohesion devices (repetitions plus synonym-group
matches) over content words.  The registry exposes every available utility
(lexical overlap metrics, cohesion-based utilities, remote quality scorers)
to the decoder under one name-indexed contract.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterator

from ._toml import load_toml
from .decoding import UtilityFunction
from .errors import MetricError, ValidationError
from .metrics import MetricConfig, chrf, sentence_bleu

_EDGE_PUNCTUATION = re.compile(r"^\W+|\W+$", re.UNICODE)


@dataclass(frozen=True)
class ContentWordFilter:
    """Stopword-based splitter of content words from function words."""

    language: str
    stopwords: frozenset[str]

    def __post_init__(self) -> None:
        for word in self.stopwords:
            if word != word.lower():
                raise ValidationError(f"stopword {word!r} must be lowercase")
            if not word:
                raise ValidationError("stopwords must be nonempty")

    def content_words(self, text: str) -> list[str]:
        """Lowercased tokens with edge punctuation stripped, stopwords removed."""
        words = []
        for token in text.split():
            stripped = _EDGE_PUNCTUATION.sub("", token).lower()
            if stripped and stripped not in self.stopwords:
                words.append(stripped)
        return words


@dataclass(frozen=True)
class SynonymLexicon:
    """Disjoint groups of lowercase forms treated as mutually cohesive."""

    language: str
    groups: tuple[frozenset[str], ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for group in self.groups:
            if not group:
                raise ValidationError("synonym groups must be nonempty")
            for form in group:
                if form != form.lower():
                    raise ValidationError(f"synonym form {form!r} must be lowercase")
                if form in seen:
                    raise ValidationError(f"synonym form {form!r} appears in two groups; groups must be disjoint")
                seen.add(form)

    def group_of(self, form: str) -> frozenset[str] | None:
        for group in self.groups:
            if form in group:
                return group
        return None


def load_stopwords(path: str | Path, language: str) -> ContentWordFilter:
    """Read a stopword file with one lowercase token per line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read stopword file {path}: {exc}") from exc
    words = frozenset(line.strip() for line in text.splitlines() if line.strip())
    return ContentWordFilter(language=language, stopwords=words)


def load_synonyms(path: str | Path) -> SynonymLexicon:
    """Read a synonym lexicon TOML file: a `groups` list of string arrays."""
    data = load_toml(path)
    language = data.get("language")
    if not isinstance(language, str):
        raise ValidationError(f"{path}: synonym lexicon needs a string 'language' key")
    raw = data.get("groups")
    if not isinstance(raw, list):
        raise ValidationError(f"{path}: synonym lexicon needs a 'groups' list of string arrays")
    groups = []
    for group in raw:
        if not isinstance(group, list) or not all(isinstance(form, str) for form in group):
            raise ValidationError(f"{path}: each synonym group must be an array of strings")
        groups.append(frozenset(group))
    try:
        return SynonymLexicon(language=language, groups=tuple(groups))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def shipped_stopword_languages() -> list[str]:
    folder = resources.files("qadkit") / "data" / "stopwords"
    return sorted(p.name.removesuffix(".txt") for p in folder.iterdir() if p.name.endswith(".txt"))


def shipped_content_filter(language: str) -> ContentWordFilter:
    """Load one of the bundled illustrative stopword lists."""
    candidate = resources.files("qadkit") / "data" / "stopwords" / f"{language}.txt"
    if not candidate.is_file():
        raise ValidationError(
            f"no shipped stopword list for {language!r}; "
            f"available: {', '.join(shipped_stopword_languages())}"
        )
    with resources.as_file(candidate) as path:
        return load_stopwords(path, language)


def lexical_cohesion_ratio(
    text: str,
    content_filter: ContentWordFilter,
    synonym_lexicon: SynonymLexicon | None = None,
) -> float:
    """Share of content words that are cohesion devices, in [0, 1].

    A content word is a device when an earlier content word has the same
    lowercase form or shares a synonym group with it.  The first occurrence
    is never a device.  Returns 0.0 when the text has no content words.
    """
    content = content_filter.content_words(text)
    if not content:
        return 0.0
    seen: set[str] = set()
    devices = 0
    for token in content:
        if token in seen:
            devices += 1
        else:
            group = synonym_lexicon.group_of(token) if synonym_lexicon is not None else None
            if group is not None and not seen.isdisjoint(group):
                devices += 1
        seen.add(token)
    return devices / len(content)


class UtilityRegistry:
    """Immutable name-to-utility mapping with helpful lookup failures."""

    def __init__(self, functions: dict[str, UtilityFunction]):
        self._functions = dict(functions)

    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self._functions))

    def get(self, name: str) -> UtilityFunction:
        try:
            return self._functions[name]
        except KeyError:
            raise MetricError(
                f"unknown utility {name!r}; available: {', '.join(self.names())}"
            ) from None

    def __contains__(self, name: object) -> bool:
        return name in self._functions

    def __iter__(self) -> Iterator[str]:
        return iter(self.names())

    def __len__(self) -> int:
        return len(self._functions)


def register_utilities(
    metric_config: MetricConfig,
    content_filter: ContentWordFilter,
    synonym_lexicon: SynonymLexicon | None = None,
    external_scorer: UtilityFunction | None = None,
) -> UtilityRegistry:
    """Build the utility registry for one run configuration.

    Provides `bleu` and `chrf` over the given metric configuration, `lc`
    scoring u(h, y) = 1 - |LC(h) - LC(y)| so candidates are rewarded for
    matching the pseudo-reference's cohesion level, and `lc_raw` scoring
    u(h, y) = LC(h) regardless of y.  An external scorer (a remote quality
    model wrapped as a utility) is registered under its own `external:<name>`
    name when supplied.
    """

    def bleu_utility(hypothesis: str, pseudo_reference: str, source: str | None, context: str | None) -> float:
        return sentence_bleu(hypothesis, pseudo_reference, metric_config)

    def chrf_utility(hypothesis: str, pseudo_reference: str, source: str | None, context: str | None) -> float:
        return chrf(hypothesis, pseudo_reference, metric_config)

    def lc_utility(hypothesis: str, pseudo_reference: str, source: str | None, context: str | None) -> float:
        own = lexical_cohesion_ratio(hypothesis, content_filter, synonym_lexicon)
        target = lexical_cohesion_ratio(pseudo_reference, content_filter, synonym_lexicon)
        return 1.0 - abs(own - target)

    def lc_raw_utility(hypothesis: str, pseudo_reference: str, source: str | None, context: str | None) -> float:
        return lexical_cohesion_ratio(hypothesis, content_filter, synonym_lexicon)

    functions = {
        "bleu": UtilityFunction(name="bleu", evaluate=bleu_utility),
        "chrf": UtilityFunction(name="chrf", evaluate=chrf_utility),
        "lc": UtilityFunction(name="lc", evaluate=lc_utility),
        "lc_raw": UtilityFunction(name="lc_raw", evaluate=lc_raw_utility),
    }
    if external_scorer is not None:
        if not external_scorer.name.startswith("external:"):
            raise ValidationError(
                f"external scorer must be named 'external:<name>', got {external_scorer.name!r}"
            )
        functions[external_scorer.name] = external_scorer
    return UtilityRegistry(functions)
