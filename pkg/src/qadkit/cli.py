"""Command-line interface wiring the pipeline end to end.

Subcommands: tag, synth, decode, evaluate, edit-rate, overlap, report.
Exit codes: 0 success, 1 internal error, 2 usage or validation failure.
Every subcommand is deterministic for fixed inputs, flags, and seed.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Sequence

import click

from . import __version__
from .cohesion import load_synonyms, register_utilities, shipped_content_filter
from .config import resolve_run_config
from .core import (
    Document,
    alignment_index,
    load_alignments,
    load_annotations,
    load_candidate_pools,
    load_corpus,
    serialize_candidate_pools,
)
from .decoding import (
    SELECTION_METHODS,
    SamplerConfig,
    Selection,
    ZERO_NOISE,
    load_noise_model,
    load_selections,
    map_select,
    mbr_select,
    rerank_select,
    serialize_selections,
    synth_pool,
)
from .errors import QadkitError
from .evaluation import (
    AGGREGATIONS,
    edit_rate_analysis,
    evaluate_system,
    human_overlap,
    render_report,
    render_report_markdown,
    report_from_payload,
)
from .metrics import DEFAULT_METRIC_CONFIG
from .scorer import SCORER_MODES, ScoreCache, ScorerEndpoint, cached_utility
from .tagging import load_lexicon, load_tag_file, serialize_tag_file, tag_document

SCORER_URL_ENV = "QADKIT_SCORER_URL"
CACHE_PATH_ENV = "QADKIT_CACHE_PATH"

_SIDES = ("reference", "hypothesis")

_in_path = click.Path(exists=True, dir_okay=False, path_type=Path)
_out_path = click.Path(dir_okay=False, writable=True, path_type=Path)


class CliError(click.ClickException):
    """A usage or validation failure; exits with code 2."""

    exit_code = 2


@contextmanager
def _domain_errors() -> Iterator[None]:
    try:
        yield
    except QadkitError as exc:
        raise CliError(str(exc)) from exc


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _canonical_json(payload: dict) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _selection_texts(path: Path) -> dict[tuple[str, int], str]:
    return {(s.doc_id, s.sentence_index): s.text for s in load_selections(path)}


def _corpus_order_texts(
    documents: Sequence[Document], texts: dict[tuple[str, int], str], label: str
) -> list[str]:
    ordered = []
    for document in documents:
        for pair in document.pairs:
            key = (document.doc_id, pair.index)
            if key not in texts:
                raise CliError(f"{label} file has no entry for ({key[0]!r}, {key[1]})")
            ordered.append(texts[key])
    total = sum(len(document.pairs) for document in documents)
    if len(texts) != total:
        raise CliError(f"{label} file has {len(texts)} entries for {total} corpus sentences")
    return ordered


def _require_side(sentences, side: str, label: str) -> None:
    for sentence in sentences:
        if sentence.side != side:
            raise CliError(
                f"{label} file must contain {side}-side tags, found side "
                f"{sentence.side!r} for ({sentence.doc_id!r}, {sentence.sentence_index})"
            )


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="qadkit")
def main() -> None:
    """Quality-aware decoding and discourse evaluation toolkit."""


@main.command()
@click.option("--corpus", type=_in_path, required=True, help="Parallel corpus JSONL file.")
@click.option("--lexicon", type=_in_path, required=True, help="Target-language lexicon TOML file.")
@click.option(
    "--alignments",
    type=_in_path,
    default=None,
    help="Word alignments JSONL; links must index the tagged side. Sentences without an entry use the fallback aligner.",
)
@click.option(
    "--side",
    type=click.Choice(_SIDES),
    default="reference",
    show_default=True,
    help="Which side of each sentence to tag.",
)
@click.option(
    "--hypotheses",
    type=_in_path,
    default=None,
    help="Selections JSONL with system outputs; required with --side hypothesis.",
)
@click.option("--threshold", type=int, default=None, help="Repetition threshold override (tags need count > threshold).")
@click.option("--config", "config_path", type=_in_path, default=None, help="Run configuration TOML file.")
@click.option("--out", type=_out_path, required=True, help="Output tag JSONL file.")
def tag(
    corpus: Path,
    lexicon: Path,
    alignments: Path | None,
    side: str,
    hypotheses: Path | None,
    threshold: int | None,
    config_path: Path | None,
    out: Path,
) -> None:
    """Tag discourse phenomena on one side of a parallel corpus."""
    with _domain_errors():
        config = resolve_run_config(config_path, repetition_threshold=threshold)
        documents = load_corpus(corpus)
        target_lexicon = load_lexicon(lexicon)
        aligned = alignment_index(load_alignments(alignments)) if alignments is not None else {}
        hypothesis_texts: list[str] = []
        if side == "hypothesis":
            if hypotheses is None:
                raise CliError("--hypotheses is required with --side hypothesis")
            hypothesis_texts = _corpus_order_texts(documents, _selection_texts(hypotheses), "--hypotheses")
        tagged = []
        offset = 0
        for document in documents:
            if side == "reference":
                texts = [pair.reference for pair in document.pairs]
            else:
                texts = hypothesis_texts[offset : offset + len(document.pairs)]
                offset += len(document.pairs)
            links = {
                pair.index: aligned[(document.doc_id, pair.index)].links
                for pair in document.pairs
                if (document.doc_id, pair.index) in aligned
            }
            tagged.extend(
                tag_document(document, texts, side, target_lexicon, links or None, config.repetition_threshold)
            )
        _write_text(out, serialize_tag_file(tagged))


@main.command()
@click.option("--corpus", type=_in_path, required=True, help="Parallel corpus JSONL file.")
@click.option("--noise", type=_in_path, default=None, help="Noise model TOML file; omit for noise-free pools.")
@click.option("--samples", type=int, default=None, help="Candidates per pool (config num_samples).")
@click.option("--nucleus-p", type=float, default=None, help="Nucleus truncation mass (config nucleus_p).")
@click.option("--seed", type=int, default=None, help="Sampling seed (config seed).")
@click.option("--config", "config_path", type=_in_path, default=None, help="Run configuration TOML file.")
@click.option("--out", type=_out_path, required=True, help="Output candidate-pool JSONL file.")
def synth(
    corpus: Path,
    noise: Path | None,
    samples: int | None,
    nucleus_p: float | None,
    seed: int | None,
    config_path: Path | None,
    out: Path,
) -> None:
    """Generate synthetic candidate pools by perturbing the references."""
    with _domain_errors():
        config = resolve_run_config(config_path, num_samples=samples, nucleus_p=nucleus_p, seed=seed)
        noise_model = load_noise_model(noise) if noise is not None else ZERO_NOISE
        sampler = SamplerConfig(num_samples=config.num_samples, nucleus_p=config.nucleus_p, seed=config.seed)
        pools = [
            synth_pool(pair.reference, sampler, noise_model, doc_id=document.doc_id, sentence_index=pair.index)
            for document in load_corpus(corpus)
            for pair in document.pairs
        ]
        _write_text(out, serialize_candidate_pools(pools))


@main.command()
@click.option("--pools", type=_in_path, required=True, help="Candidate-pool JSONL file.")
@click.option(
    "--method",
    type=click.Choice(SELECTION_METHODS),
    required=True,
    help="map: highest model log-probability; mbr: highest expected utility; rerank: highest QE score.",
)
@click.option("--utility", type=str, default=None, help="Utility for --method mbr (config utility).")
@click.option(
    "--include-self/--no-include-self",
    default=None,
    help="Count a candidate as its own pseudo-reference in expected utility (config include_self).",
)
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker cap for utility evaluation.")
@click.option(
    "--lc-language",
    type=str,
    default="en",
    show_default=True,
    help="Shipped stopword list for the lc utilities.",
)
@click.option("--synonyms", type=_in_path, default=None, help="Synonym lexicon TOML for the lc utilities.")
@click.option(
    "--scorer-url",
    type=str,
    default=None,
    envvar=SCORER_URL_ENV,
    help=f"External scorer base URL (env {SCORER_URL_ENV}); required for external:<name> utilities.",
)
@click.option(
    "--scorer-mode",
    type=click.Choice(SCORER_MODES),
    default="reference_based",
    show_default=True,
    help="Whether the external scorer receives the pseudo-reference.",
)
@click.option(
    "--cache",
    "cache_path",
    type=_out_path,
    default=None,
    envvar=CACHE_PATH_ENV,
    help=f"Score cache JSONL path (env {CACHE_PATH_ENV}).",
)
@click.option("--config", "config_path", type=_in_path, default=None, help="Run configuration TOML file.")
@click.option("--out", type=_out_path, required=True, help="Output selections JSONL file.")
def decode(
    pools: Path,
    method: str,
    utility: str | None,
    include_self: bool | None,
    jobs: int,
    lc_language: str,
    synonyms: Path | None,
    scorer_url: str | None,
    scorer_mode: str,
    cache_path: Path | None,
    config_path: Path | None,
    out: Path,
) -> None:
    """Select one candidate per pool."""
    with _domain_errors():
        if jobs < 1:
            raise CliError(f"--jobs must be >= 1, got {jobs}")
        config = resolve_run_config(config_path, utility=utility, include_self=include_self)
        candidate_pools = load_candidate_pools(pools)
        if method == "mbr":
            external = None
            if config.utility.startswith("external:"):
                if scorer_url is None:
                    raise CliError(
                        f"--scorer-url (or {SCORER_URL_ENV}) is required for utility {config.utility!r}"
                    )
                endpoint = ScorerEndpoint(
                    name=config.utility.removeprefix("external:"), base_url=scorer_url, mode=scorer_mode
                )
                cache = ScoreCache(cache_path) if cache_path is not None else None
                external = cached_utility(endpoint, cache)
            registry = register_utilities(
                DEFAULT_METRIC_CONFIG,
                shipped_content_filter(lc_language),
                load_synonyms(synonyms) if synonyms is not None else None,
                external,
            )
            utility_fn = registry.get(config.utility)
            results = [
                mbr_select(pool, utility_fn, config.include_self, jobs=jobs) for pool in candidate_pools
            ]
        elif method == "map":
            results = [map_select(pool) for pool in candidate_pools]
        else:
            results = [rerank_select(pool) for pool in candidate_pools]
        selections = [
            Selection(
                doc_id=pool.doc_id,
                sentence_index=pool.sentence_index,
                method=method,
                chosen_index=result.chosen_index,
                text=result.chosen_text,
            )
            for pool, result in zip(candidate_pools, results)
        ]
        _write_text(out, serialize_selections(selections))


@main.command()
@click.option("--corpus", type=_in_path, required=True, help="Parallel corpus JSONL file.")
@click.option("--hypotheses", type=_in_path, required=True, help="Selections JSONL with system outputs.")
@click.option("--ref-tags", type=_in_path, required=True, help="Reference-side tag JSONL file.")
@click.option("--hyp-tags", type=_in_path, required=True, help="Hypothesis-side tag JSONL file.")
@click.option("--system", type=str, default="system", show_default=True, help="System name for the report.")
@click.option(
    "--include-ambiguous/--no-include-ambiguous",
    default=True,
    show_default=True,
    help="Count tags whose match was ambiguous.",
)
@click.option(
    "--baseline",
    type=_in_path,
    default=None,
    help="Baseline selections JSONL; adds an edit-rate section over tagged sentences.",
)
@click.option(
    "--phenomenon",
    "phenomena",
    type=str,
    multiple=True,
    help="Restrict the edit-rate selection to these phenomena (repeatable).",
)
@click.option(
    "--aggregation",
    type=click.Choice(AGGREGATIONS),
    default=None,
    help="Edit-rate aggregation (config aggregation).",
)
@click.option("--config", "config_path", type=_in_path, default=None, help="Run configuration TOML file.")
@click.option("--out", type=_out_path, required=True, help="Output report JSON file.")
def evaluate(
    corpus: Path,
    hypotheses: Path,
    ref_tags: Path,
    hyp_tags: Path,
    system: str,
    include_ambiguous: bool,
    baseline: Path | None,
    phenomena: tuple[str, ...],
    aggregation: str | None,
    config_path: Path | None,
    out: Path,
) -> None:
    """Score a system against the corpus references and reference tags."""
    with _domain_errors():
        config = resolve_run_config(config_path, aggregation=aggregation)
        documents = load_corpus(corpus)
        hyp_texts = _corpus_order_texts(documents, _selection_texts(hypotheses), "--hypotheses")
        reference_tags = load_tag_file(ref_tags)
        hypothesis_tags = load_tag_file(hyp_tags)
        _require_side(reference_tags, "reference", "--ref-tags")
        _require_side(hypothesis_tags, "hypothesis", "--hyp-tags")
        edit_rate = None
        if baseline is not None:
            baseline_texts = _corpus_order_texts(documents, _selection_texts(baseline), "--baseline")
            tags_by_key = {(s.doc_id, s.sentence_index): s for s in reference_tags}
            ordered_tags = []
            for document in documents:
                for pair in document.pairs:
                    key = (document.doc_id, pair.index)
                    if key not in tags_by_key:
                        raise CliError(f"--ref-tags file has no entry for ({key[0]!r}, {key[1]})")
                    ordered_tags.append(tags_by_key[key])
            edit_rate = edit_rate_analysis(
                baseline_texts,
                hyp_texts,
                ordered_tags,
                phenomena or None,
                DEFAULT_METRIC_CONFIG,
                config.aggregation,
                include_ambiguous,
            )
        elif phenomena:
            raise CliError("--phenomenon requires --baseline")
        report = evaluate_system(
            system,
            documents,
            hyp_texts,
            reference_tags,
            hypothesis_tags,
            DEFAULT_METRIC_CONFIG,
            include_ambiguous,
            edit_rate,
            config.context_window,
        )
        _write_text(out, render_report(report))


@main.command("edit-rate")
@click.option("--baseline", type=_in_path, required=True, help="Baseline selections JSONL file.")
@click.option("--system", "system_path", type=_in_path, required=True, help="System selections JSONL file.")
@click.option("--tags", type=_in_path, required=True, help="Reference-side tag JSONL file; defines the sentence set.")
@click.option(
    "--phenomenon",
    "phenomena",
    type=str,
    multiple=True,
    help="Restrict the selection to these phenomena (repeatable).",
)
@click.option(
    "--aggregation",
    type=click.Choice(AGGREGATIONS),
    default=None,
    help="Edit-rate aggregation (config aggregation).",
)
@click.option(
    "--include-ambiguous/--no-include-ambiguous",
    default=True,
    show_default=True,
    help="Count tags whose match was ambiguous.",
)
@click.option("--config", "config_path", type=_in_path, default=None, help="Run configuration TOML file.")
@click.option("--out", type=_out_path, required=True, help="Output summary JSON file.")
def edit_rate(
    baseline: Path,
    system_path: Path,
    tags: Path,
    phenomena: tuple[str, ...],
    aggregation: str | None,
    include_ambiguous: bool,
    config_path: Path | None,
    out: Path,
) -> None:
    """Edit operations turning tagged system sentences into the baseline."""
    with _domain_errors():
        config = resolve_run_config(config_path, aggregation=aggregation)
        tagged = load_tag_file(tags)
        baseline_by_key = _selection_texts(baseline)
        system_by_key = _selection_texts(system_path)
        baseline_texts = []
        system_texts = []
        for sentence in tagged:
            key = (sentence.doc_id, sentence.sentence_index)
            if key not in baseline_by_key:
                raise CliError(f"--baseline file has no entry for ({key[0]!r}, {key[1]})")
            if key not in system_by_key:
                raise CliError(f"--system file has no entry for ({key[0]!r}, {key[1]})")
            baseline_texts.append(baseline_by_key[key])
            system_texts.append(system_by_key[key])
        summary = edit_rate_analysis(
            baseline_texts,
            system_texts,
            tagged,
            phenomena or None,
            DEFAULT_METRIC_CONFIG,
            config.aggregation,
            include_ambiguous,
        )
        payload = {
            "aggregation": summary.aggregation,
            "selected": summary.selected,
            "insertions": summary.insertions,
            "deletions": summary.deletions,
            "substitutions": summary.substitutions,
            "shifts": summary.shifts,
            "reference_length": summary.reference_length,
            "rate": summary.rate,
        }
        _write_text(out, _canonical_json(payload))


@main.command()
@click.option("--tags", type=_in_path, required=True, help="Automatic tag JSONL file.")
@click.option("--annotations", type=_in_path, required=True, help="Human annotations JSONL file.")
@click.option(
    "--include-ambiguous/--no-include-ambiguous",
    default=True,
    show_default=True,
    help="Count tags whose match was ambiguous.",
)
@click.option("--out", type=_out_path, required=True, help="Output overlap JSON file.")
def overlap(tags: Path, annotations: Path, include_ambiguous: bool, out: Path) -> None:
    """Per-phenomenon agreement between automatic tags and human annotations."""
    with _domain_errors():
        report = human_overlap(load_tag_file(tags), load_annotations(annotations), include_ambiguous)
        payload = {
            "joined": report.joined,
            "skipped": report.skipped,
            "phenomena": {
                entry.phenomenon: {
                    "human": entry.human_count,
                    "auto": entry.auto_count,
                    "both": entry.both_count,
                    "overlap": entry.overlap,
                }
                for entry in report.phenomena
            },
        }
        _write_text(out, _canonical_json(payload))


@main.command()
@click.argument("report_file", type=_in_path)
@click.option("--markdown", is_flag=True, default=False, help="Render as a markdown table instead of JSON.")
@click.option("--out", type=_out_path, default=None, help="Output file; defaults to stdout.")
def report(report_file: Path, markdown: bool, out: Path | None) -> None:
    """Re-render a stored evaluation report."""
    with _domain_errors():
        try:
            payload = json.loads(report_file.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CliError(f"{report_file}: not valid JSON: {exc}") from exc
        rebuilt = report_from_payload(payload)
        text = render_report_markdown(rebuilt) if markdown else render_report(rebuilt)
        if out is None:
            click.echo(text, nl=False)
        else:
            _write_text(out, text)


if __name__ == "__main__":
    main()
