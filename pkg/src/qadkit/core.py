"""Domain types and file ingestion for translation experiments.

Everything here is an immutable value type plus loaders/serializers for the
JSON Lines formats that tie an experiment together: parallel corpora, candidate
pools, word alignments, and human annotations.  The join key across all files
is (doc_id, sentence index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ParseError, ValidationError

PHENOMENA = ("formality", "lexical_cohesion", "pronouns", "verb_form")
PREFERENCES = ("greedy", "qad", "tie")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


@dataclass(frozen=True)
class LanguagePair:
    """A translation direction such as en->pt."""

    source: str
    target: str

    def __post_init__(self) -> None:
        for code in (self.source, self.target):
            _require(
                2 <= len(code) <= 3 and code.isascii() and code.isalpha() and code == code.lower(),
                f"language code must be lowercase ASCII of length 2-3, got {code!r}",
            )
        _require(self.source != self.target, f"source and target language must differ, got {self.source!r} twice")

    def __str__(self) -> str:
        return f"{self.source}-{self.target}"


@dataclass(frozen=True)
class SentencePair:
    """One source sentence and its reference translation."""

    index: int
    source: str
    reference: str

    def __post_init__(self) -> None:
        _require(self.index >= 0, f"sentence index must be nonnegative, got {self.index}")
        _require(bool(self.source.strip()), f"source must be nonempty at index {self.index}")


@dataclass(frozen=True)
class Document:
    """An ordered run of sentence pairs sharing a document boundary.

    Repetition counts and context windows are computed within this boundary,
    never across documents.
    """

    doc_id: str
    lang: LanguagePair
    pairs: tuple[SentencePair, ...]

    def __post_init__(self) -> None:
        _require(bool(self.doc_id), "doc_id must be nonempty")
        _require(len(self.pairs) > 0, f"document {self.doc_id!r} has no sentence pairs")
        for position, pair in enumerate(self.pairs):
            _require(
                pair.index == position,
                f"document {self.doc_id!r}: sentence indices must be contiguous from 0, "
                f"got {pair.index} at position {position}",
            )

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class Candidate:
    """A sampled hypothesis with optional model and QE scores."""

    text: str
    model_logprob: float | None = None
    qe_score: float | None = None

    def __post_init__(self) -> None:
        if self.model_logprob is not None:
            lp = float(self.model_logprob)
            _require(lp == lp and lp <= 0.0, f"model_logprob must be a finite value <= 0, got {self.model_logprob!r}")
            _require(lp != float("-inf"), "model_logprob must be finite")
            object.__setattr__(self, "model_logprob", lp)
        if self.qe_score is not None:
            qe = float(self.qe_score)
            _require(qe == qe and abs(qe) != float("inf"), f"qe_score must be finite, got {self.qe_score!r}")
            object.__setattr__(self, "qe_score", qe)


@dataclass(frozen=True)
class CandidatePool:
    """The hypothesis set for one sentence, in generation order.

    Ordering is load-bearing: every tie in selection is broken by the smallest
    candidate index, so the order must be exactly as generated.  Duplicate
    texts are kept because they encode probability mass.
    """

    doc_id: str
    sentence_index: int
    candidates: tuple[Candidate, ...]

    def __post_init__(self) -> None:
        _require(
            len(self.candidates) > 0,
            f"pool for ({self.doc_id!r}, {self.sentence_index}) has no candidates",
        )

    def __len__(self) -> int:
        return len(self.candidates)

    def texts(self) -> tuple[str, ...]:
        return tuple(c.text for c in self.candidates)


@dataclass(frozen=True)
class AlignmentSet:
    """Source-to-target word alignment links for one sentence.

    Indices refer to whitespace tokens of the raw sentence texts; alignments
    are produced externally and only bounds-checked by validate_experiment.
    """

    doc_id: str
    sentence_index: int
    links: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen: set[tuple[int, int]] = set()
        for link in self.links:
            s, t = link
            _require(s >= 0 and t >= 0, f"alignment link {link} has a negative index")
            _require(link not in seen, f"duplicate alignment link {link} for ({self.doc_id!r}, {self.sentence_index})")
            seen.add(link)


@dataclass(frozen=True)
class HumanAnnotation:
    """One annotator judgment of a greedy/QAD output pair."""

    doc_id: str
    sentence_index: int
    phenomena: tuple[str, ...]
    semantic_difference: int
    preference: str
    correct_greedy: dict[str, bool] = field(default_factory=dict)
    correct_qad: dict[str, bool] = field(default_factory=dict)
    comment: str | None = None

    def __post_init__(self) -> None:
        for name in self.phenomena:
            _require(name in PHENOMENA, f"unknown phenomenon {name!r}; expected one of {PHENOMENA}")
        _require(len(set(self.phenomena)) == len(self.phenomena), "phenomena must not repeat")
        _require(
            1 <= self.semantic_difference <= 5,
            f"semantic_difference must be in [1, 5], got {self.semantic_difference}",
        )
        _require(self.preference in PREFERENCES, f"preference must be one of {PREFERENCES}, got {self.preference!r}")
        for label, table in (("correct_greedy", self.correct_greedy), ("correct_qad", self.correct_qad)):
            for name in table:
                _require(
                    name in self.phenomena,
                    f"{label} contains {name!r} which is not in the annotation's phenomena set",
                )


@dataclass(frozen=True)
class ValidationReport:
    """Findings from cross-checking an experiment's input files."""

    findings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


# ---------------------------------------------------------------------------
# JSON Lines plumbing


def _iter_records(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (line number, parsed object) for each line of a JSONL file."""
    text = Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            raise ParseError("blank line is not a record", path=str(path), line=number)
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON ({exc.msg})", path=str(path), line=number) from exc
        if not isinstance(record, dict):
            raise ParseError("record must be a JSON object", path=str(path), line=number)
        yield number, record


def _field(record: dict[str, Any], name: str, kind: type | tuple[type, ...], where: str) -> Any:
    if name not in record:
        raise ValidationError(f"{where}: missing field {name!r}")
    value = record[name]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
        raise ValidationError(f"{where}: field {name!r} has wrong type {type(value).__name__}")
    return value


def _dump_line(record: dict[str, Any]) -> str:
    # Canonical form: insertion-ordered keys, no ASCII escaping, compact separators.
    return json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n"


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(_dump_line(record))


# ---------------------------------------------------------------------------
# Corpus


def load_corpus(path: str | Path) -> list[Document]:
    """Load a parallel corpus, grouping lines into documents by doc_id.

    Lines of one document must be contiguous in the file; a doc_id that
    reappears after another document has started is rejected as a duplicate.
    """
    documents: list[Document] = []
    finished: set[str] = set()
    current_id: str | None = None
    current_lang: LanguagePair | None = None
    current_pairs: list[SentencePair] = []

    def close_current() -> None:
        nonlocal current_id, current_lang, current_pairs
        if current_id is None:
            return
        assert current_lang is not None
        documents.append(Document(doc_id=current_id, lang=current_lang, pairs=tuple(current_pairs)))
        finished.add(current_id)
        current_id, current_lang, current_pairs = None, None, []

    for number, record in _iter_records(path):
        where = f"{path}:{number}"
        doc_id = _field(record, "doc_id", str, where)
        index = _field(record, "index", int, where)
        lang = LanguagePair(
            source=_field(record, "src_lang", str, where),
            target=_field(record, "tgt_lang", str, where),
        )
        pair = SentencePair(
            index=index,
            source=_field(record, "source", str, where),
            reference=_field(record, "reference", str, where),
        )
        if doc_id != current_id:
            if doc_id in finished:
                raise ValidationError(f"{where}: duplicate doc_id {doc_id!r}")
            close_current()
            current_id, current_lang = doc_id, lang
        elif lang != current_lang:
            raise ValidationError(f"{where}: document {doc_id!r} mixes language pairs {current_lang} and {lang}")
        current_pairs.append(pair)
    close_current()
    return documents


def serialize_corpus(documents: Iterable[Document]) -> str:
    lines = []
    for doc in documents:
        for pair in doc.pairs:
            lines.append(
                _dump_line(
                    {
                        "doc_id": doc.doc_id,
                        "index": pair.index,
                        "src_lang": doc.lang.source,
                        "tgt_lang": doc.lang.target,
                        "source": pair.source,
                        "reference": pair.reference,
                    }
                )
            )
    return "".join(lines)


# ---------------------------------------------------------------------------
# Candidate pools


def load_candidate_pools(path: str | Path) -> list[CandidatePool]:
    pools: list[CandidatePool] = []
    seen: set[tuple[str, int]] = set()
    for number, record in _iter_records(path):
        where = f"{path}:{number}"
        doc_id = _field(record, "doc_id", str, where)
        index = _field(record, "index", int, where)
        key = (doc_id, index)
        _require(key not in seen, f"{where}: duplicate pool for ({doc_id!r}, {index})")
        seen.add(key)
        raw = _field(record, "candidates", list, where)
        candidates = []
        for position, item in enumerate(raw):
            if not isinstance(item, dict):
                raise ValidationError(f"{where}: candidate {position} must be an object")
            text = _field(item, "text", str, f"{where} candidate {position}")
            logprob = item.get("logprob")
            qe = item.get("qe")
            if logprob is not None and not isinstance(logprob, (int, float)):
                raise ValidationError(f"{where}: candidate {position} logprob has wrong type")
            if qe is not None and not isinstance(qe, (int, float)):
                raise ValidationError(f"{where}: candidate {position} qe has wrong type")
            try:
                candidates.append(Candidate(text=text, model_logprob=logprob, qe_score=qe))
            except ValidationError as exc:
                raise ValidationError(f"{where}: candidate {position}: {exc}") from exc
        _require(candidates != [], f"{where}: pool for ({doc_id!r}, {index}) has no candidates")
        pools.append(CandidatePool(doc_id=doc_id, sentence_index=index, candidates=tuple(candidates)))
    return pools


def serialize_candidate_pools(pools: Iterable[CandidatePool]) -> str:
    lines = []
    for pool in pools:
        lines.append(
            _dump_line(
                {
                    "doc_id": pool.doc_id,
                    "index": pool.sentence_index,
                    "candidates": [
                        {"text": c.text, "logprob": c.model_logprob, "qe": c.qe_score} for c in pool.candidates
                    ],
                }
            )
        )
    return "".join(lines)


# ---------------------------------------------------------------------------
# Alignments


def load_alignments(path: str | Path) -> list[AlignmentSet]:
    alignments: list[AlignmentSet] = []
    seen: set[tuple[str, int]] = set()
    for number, record in _iter_records(path):
        where = f"{path}:{number}"
        doc_id = _field(record, "doc_id", str, where)
        index = _field(record, "index", int, where)
        key = (doc_id, index)
        _require(key not in seen, f"{where}: duplicate alignment for ({doc_id!r}, {index})")
        seen.add(key)
        raw = _field(record, "links", list, where)
        links = []
        for item in raw:
            if not (isinstance(item, list) and len(item) == 2 and all(isinstance(v, int) for v in item)):
                raise ValidationError(f"{where}: alignment link must be a pair of integers, got {item!r}")
            links.append((item[0], item[1]))
        try:
            alignments.append(AlignmentSet(doc_id=doc_id, sentence_index=index, links=tuple(links)))
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
    return alignments


def serialize_alignments(alignments: Iterable[AlignmentSet]) -> str:
    return "".join(
        _dump_line(
            {
                "doc_id": a.doc_id,
                "index": a.sentence_index,
                "links": [[s, t] for s, t in a.links],
            }
        )
        for a in alignments
    )


def alignment_index(alignments: Iterable[AlignmentSet]) -> dict[tuple[str, int], AlignmentSet]:
    return {(a.doc_id, a.sentence_index): a for a in alignments}


# ---------------------------------------------------------------------------
# Human annotations


def load_annotations(path: str | Path) -> list[HumanAnnotation]:
    annotations: list[HumanAnnotation] = []
    seen: set[tuple[str, int]] = set()
    for number, record in _iter_records(path):
        where = f"{path}:{number}"
        doc_id = _field(record, "doc_id", str, where)
        index = _field(record, "index", int, where)
        key = (doc_id, index)
        _require(key not in seen, f"{where}: duplicate annotation for ({doc_id!r}, {index})")
        seen.add(key)
        phenomena = _field(record, "phenomena", list, where)
        for name in phenomena:
            if not isinstance(name, str):
                raise ValidationError(f"{where}: phenomena entries must be strings")
        correct_greedy = record.get("correct_greedy") or {}
        correct_qad = record.get("correct_qad") or {}
        for label, table in (("correct_greedy", correct_greedy), ("correct_qad", correct_qad)):
            if not isinstance(table, dict) or not all(isinstance(v, bool) for v in table.values()):
                raise ValidationError(f"{where}: {label} must map phenomenon names to booleans")
        comment = record.get("comment")
        if comment is not None and not isinstance(comment, str):
            raise ValidationError(f"{where}: comment must be a string")
        semantic_difference = _field(record, "semantic_difference", int, where)
        preference = _field(record, "preference", str, where)
        try:
            annotations.append(
                HumanAnnotation(
                    doc_id=doc_id,
                    sentence_index=index,
                    phenomena=tuple(phenomena),
                    semantic_difference=semantic_difference,
                    preference=preference,
                    correct_greedy=dict(correct_greedy),
                    correct_qad=dict(correct_qad),
                    comment=comment,
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
    return annotations


def serialize_annotations(annotations: Iterable[HumanAnnotation]) -> str:
    lines = []
    for a in annotations:
        record: dict[str, Any] = {
            "doc_id": a.doc_id,
            "index": a.sentence_index,
            "phenomena": list(a.phenomena),
            "correct_greedy": {k: a.correct_greedy[k] for k in sorted(a.correct_greedy)},
            "correct_qad": {k: a.correct_qad[k] for k in sorted(a.correct_qad)},
            "semantic_difference": a.semantic_difference,
            "preference": a.preference,
        }
        if a.comment is not None:
            record["comment"] = a.comment
        lines.append(_dump_line(record))
    return "".join(lines)


# ---------------------------------------------------------------------------
# Cross-file validation


def validate_experiment(
    corpus: list[Document],
    pools: list[CandidatePool],
    alignments: list[AlignmentSet] | None = None,
) -> ValidationReport:
    """Cross-check that pools and alignments resolve against the corpus.

    Report-only: an empty findings list means the experiment is runnable.
    Alignment indices are checked against whitespace tokens of the raw texts.
    """
    findings: list[str] = []
    sentences: dict[tuple[str, int], SentencePair] = {}
    for doc in corpus:
        for pair in doc.pairs:
            sentences[(doc.doc_id, pair.index)] = pair

    pooled = {(p.doc_id, p.sentence_index) for p in pools}
    for doc in corpus:
        for pair in doc.pairs:
            if (doc.doc_id, pair.index) not in pooled:
                findings.append(f"missing pool: doc_id={doc.doc_id!r} index={pair.index}")
    for pool in pools:
        if (pool.doc_id, pool.sentence_index) not in sentences:
            findings.append(f"dangling pool: doc_id={pool.doc_id!r} index={pool.sentence_index}")

    for alignment in alignments or []:
        key = (alignment.doc_id, alignment.sentence_index)
        pair = sentences.get(key)
        if pair is None:
            continue
        source_len = len(pair.source.split())
        target_len = len(pair.reference.split())
        for s, t in alignment.links:
            if s >= source_len or t >= target_len:
                findings.append(
                    f"alignment overflow: doc_id={alignment.doc_id!r} index={alignment.sentence_index} "
                    f"link=({s},{t}) bounds=({source_len},{target_len})"
                )
    return ValidationReport(findings=tuple(findings))
