"""Quality-aware decoding and discourse evaluation toolkit.

Selects translation candidates by expected utility (or model score, or QE
rerank), tags discourse phenomena with lexicons and word alignments, and
scores systems with BLEU/ChrF, per-phenomenon F1, edit-rate analysis, and
human-annotation overlap.  The command-line entry point lives in
qadkit.cli; everything here is the library surface.
"""

from __future__ import annotations

from .cohesion import (
    ContentWordFilter,
    SynonymLexicon,
    UtilityRegistry,
    lexical_cohesion_ratio,
    load_stopwords,
    load_synonyms,
    register_utilities,
    shipped_content_filter,
    shipped_stopword_languages,
)
from .config import RunConfig, load_run_config, resolve_run_config
from .core import (
    PHENOMENA,
    AlignmentSet,
    Candidate,
    CandidatePool,
    Document,
    HumanAnnotation,
    LanguagePair,
    SentencePair,
    alignment_index,
    load_alignments,
    load_annotations,
    load_candidate_pools,
    load_corpus,
    serialize_candidate_pools,
    serialize_corpus,
)
from .decoding import (
    SELECTION_METHODS,
    Confusion,
    NoiseModel,
    SamplerConfig,
    Selection,
    SelectionResult,
    UtilityFunction,
    ZERO_NOISE,
    expected_utilities,
    load_noise_model,
    load_selections,
    map_select,
    mbr_select,
    nucleus_truncate,
    rerank_select,
    serialize_selections,
    synth_pool,
)
from .errors import (
    DecodingError,
    EvaluationError,
    MetricError,
    MetricWarning,
    ParseError,
    QadkitError,
    ScorerError,
    ScorerProtocolError,
    TaggingError,
    ValidationError,
)
from .evaluation import (
    AGGREGATIONS,
    EditRateSummary,
    EvalReport,
    OverlapReport,
    PhenomenonOverlap,
    PhenomenonScore,
    PreferenceSummary,
    edit_rate_analysis,
    evaluate_system,
    human_overlap,
    phenomenon_f1,
    preference_summary,
    render_report,
    render_report_markdown,
    report_from_payload,
    report_payload,
)
from .metrics import (
    DEFAULT_METRIC_CONFIG,
    EditRateBreakdown,
    MetricConfig,
    bleu_signature,
    chrf,
    chrf_signature,
    corpus_bleu,
    corpus_chrf,
    sentence_bleu,
    ter_edit_rate,
    tokenize_13a,
)
from .mock_scorer import MockScorer
from .scorer import (
    SCORER_MODES,
    ScoreCache,
    ScoreItem,
    ScorerEndpoint,
    cache_key,
    cached_utility,
    score_batch,
    score_batch_cached,
)
from .tagging import (
    MATCH_MODES,
    Lexicon,
    LexiconEntry,
    PhenomenonTag,
    TaggedSentence,
    fallback_alignment,
    load_lexicon,
    load_tag_file,
    serialize_tag_file,
    shipped_lexicon,
    shipped_lexicon_languages,
    tag_document,
    tag_lexical_repetition,
    tag_lexicon_phenomena,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AGGREGATIONS",
    "AlignmentSet",
    "Candidate",
    "CandidatePool",
    "Confusion",
    "ContentWordFilter",
    "DEFAULT_METRIC_CONFIG",
    "DecodingError",
    "Document",
    "EditRateBreakdown",
    "EditRateSummary",
    "EvalReport",
    "EvaluationError",
    "HumanAnnotation",
    "LanguagePair",
    "Lexicon",
    "LexiconEntry",
    "MATCH_MODES",
    "MetricConfig",
    "MetricError",
    "MetricWarning",
    "MockScorer",
    "NoiseModel",
    "OverlapReport",
    "PHENOMENA",
    "ParseError",
    "PhenomenonOverlap",
    "PhenomenonScore",
    "PhenomenonTag",
    "PreferenceSummary",
    "QadkitError",
    "RunConfig",
    "SCORER_MODES",
    "SELECTION_METHODS",
    "SamplerConfig",
    "ScoreCache",
    "ScoreItem",
    "ScorerEndpoint",
    "ScorerError",
    "ScorerProtocolError",
    "Selection",
    "SelectionResult",
    "SentencePair",
    "SynonymLexicon",
    "TaggedSentence",
    "TaggingError",
    "UtilityFunction",
    "UtilityRegistry",
    "ValidationError",
    "ZERO_NOISE",
    "alignment_index",
    "bleu_signature",
    "cache_key",
    "cached_utility",
    "chrf",
    "chrf_signature",
    "corpus_bleu",
    "corpus_chrf",
    "edit_rate_analysis",
    "evaluate_system",
    "expected_utilities",
    "fallback_alignment",
    "human_overlap",
    "lexical_cohesion_ratio",
    "load_alignments",
    "load_annotations",
    "load_candidate_pools",
    "load_corpus",
    "load_lexicon",
    "load_noise_model",
    "load_run_config",
    "load_selections",
    "load_stopwords",
    "load_synonyms",
    "load_tag_file",
    "map_select",
    "mbr_select",
    "nucleus_truncate",
    "phenomenon_f1",
    "preference_summary",
    "register_utilities",
    "render_report",
    "render_report_markdown",
    "rerank_select",
    "report_from_payload",
    "report_payload",
    "resolve_run_config",
    "score_batch",
    "score_batch_cached",
    "sentence_bleu",
    "serialize_candidate_pools",
    "serialize_corpus",
    "serialize_selections",
    "serialize_tag_file",
    "shipped_content_filter",
    "shipped_lexicon",
    "shipped_lexicon_languages",
    "shipped_stopword_languages",
    "synth_pool",
    "tag_document",
    "tag_lexical_repetition",
    "tag_lexicon_phenomena",
    "ter_edit_rate",
    "tokenize_13a",
]
