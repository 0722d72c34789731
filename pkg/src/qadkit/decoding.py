"""Candidate selection over pools: MAP, MBR, and QE reranking.

mbr_select treats every other candidate in the pool as a pseudo-reference
and picks the hypothesis with the highest expected utility.  The utility is
pluggable; see the registry in the cohesion module.  Also here: nucleus
(top-p) truncation and a synthetic pool generator that stands in for LLM
sampling in desk-scale experiments.

Every tie, everywhere, goes to the smallest candidate index.  Generation
order is the only canonical order available, so it must be preserved by
anything that touches pools.
"""

from __future__ import annotations

import hashlib
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

from ._toml import load_toml
from .core import Candidate, CandidatePool, _field, _iter_records, _dump_line
from .errors import DecodingError, ValidationError

T = TypeVar("T")

SELECTION_METHODS = ("map", "mbr", "rerank")


@dataclass(frozen=True)
class UtilityFunction:
    """A named similarity u(hypothesis, pseudo-reference); higher is better.

    evaluate may also receive the source text and a document context string;
    lexical utilities ignore both.  It must be pure and return finite values.
    """

    name: str
    evaluate: Callable[..., float]

    def __call__(
        self,
        hypothesis: str,
        pseudo_reference: str,
        source: str | None = None,
        context: str | None = None,
    ) -> float:
        return self.evaluate(hypothesis, pseudo_reference, source, context)


@dataclass(frozen=True)
class SelectionResult:
    """The winning candidate of one selection method over one pool."""

    method: str
    chosen_index: int
    chosen_text: str
    expected_utilities: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.method not in SELECTION_METHODS:
            raise ValidationError(f"method must be one of {SELECTION_METHODS}, got {self.method!r}")
        if self.chosen_index < 0:
            raise ValidationError(f"chosen_index must be nonnegative, got {self.chosen_index}")


def _smallest_argmax(values: Sequence[float]) -> int:
    best = 0
    for index in range(1, len(values)):
        if values[index] > values[best]:
            best = index
    return best


def map_select(pool: CandidatePool) -> SelectionResult:
    """The candidate with maximal model log-probability (ties: smallest index)."""
    logprobs = []
    for index, candidate in enumerate(pool.candidates):
        if candidate.model_logprob is None:
            raise DecodingError(
                f"map_select needs model_logprob on every candidate; candidate {index} of "
                f"({pool.doc_id!r}, {pool.sentence_index}) has none"
            )
        logprobs.append(candidate.model_logprob)
    chosen = _smallest_argmax(logprobs)
    return SelectionResult(method="map", chosen_index=chosen, chosen_text=pool.candidates[chosen].text)


def rerank_select(pool: CandidatePool) -> SelectionResult:
    """The candidate with maximal QE score (ties: smallest index)."""
    scores = []
    for index, candidate in enumerate(pool.candidates):
        if candidate.qe_score is None:
            raise DecodingError(
                f"rerank_select needs qe_score on every candidate; candidate {index} of "
                f"({pool.doc_id!r}, {pool.sentence_index}) has none"
            )
        scores.append(candidate.qe_score)
    chosen = _smallest_argmax(scores)
    return SelectionResult(method="rerank", chosen_index=chosen, chosen_text=pool.candidates[chosen].text)


def expected_utilities(
    pool: CandidatePool,
    utility: UtilityFunction,
    include_self: bool = False,
    *,
    source: str | None = None,
    context: str | None = None,
    jobs: int = 1,
) -> list[float]:
    """Mean utility of each candidate against the pool as pseudo-references.

    Rows are reduced with exact summation (math.fsum), so the result is
    independent of evaluation scheduling and identical candidate texts get
    exactly equal expectations.  A pool of one candidate with include_self
    false has no pseudo-references; its expectation is defined as 0.
    """
    texts = pool.texts()

    def row(i: int) -> float:
        values = []
        for j, pseudo_reference in enumerate(texts):
            if not include_self and j == i:
                continue
            try:
                value = utility(texts[i], pseudo_reference, source, context)
            except DecodingError:
                raise
            except Exception as exc:
                raise DecodingError(f"utility {utility.name!r} failed on pair (i={i}, j={j}): {exc}") from exc
            if not math.isfinite(value):
                raise DecodingError(f"utility {utility.name!r} returned non-finite {value!r} on pair (i={i}, j={j})")
            values.append(value)
        if not values:
            return 0.0
        return math.fsum(values) / len(values)

    if jobs <= 1 or len(texts) == 1:
        return [row(i) for i in range(len(texts))]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(row, range(len(texts))))


def mbr_select(
    pool: CandidatePool,
    utility: UtilityFunction,
    include_self: bool = False,
    *,
    source: str | None = None,
    context: str | None = None,
    jobs: int = 1,
) -> SelectionResult:
    """Smallest argmax of expected utility over the pool."""
    values = expected_utilities(pool, utility, include_self, source=source, context=context, jobs=jobs)
    chosen = _smallest_argmax(values)
    return SelectionResult(
        method="mbr",
        chosen_index=chosen,
        chosen_text=pool.candidates[chosen].text,
        expected_utilities=tuple(values),
    )


# ---------------------------------------------------------------------------
# Nucleus truncation


def nucleus_truncate(distribution: Sequence[tuple[T, float]], p: float) -> list[tuple[T, float]]:
    """Keep the smallest probability-descending prefix with mass >= p.

    Probability ties keep original item order.  The kept items are returned
    in their original order with probabilities renormalized to sum to 1.
    """
    if not 0.0 < p <= 1.0:
        raise ValidationError(f"nucleus p must be in (0, 1], got {p}")
    if not distribution:
        raise ValidationError("distribution must be nonempty")
    probabilities = [prob for _, prob in distribution]
    for prob in probabilities:
        if not (math.isfinite(prob) and prob >= 0.0):
            raise ValidationError(f"probabilities must be finite and nonnegative, got {prob!r}")
    if abs(math.fsum(probabilities) - 1.0) > 1e-9:
        raise ValidationError(f"probabilities must sum to 1, got {math.fsum(probabilities)!r}")

    by_mass = sorted(range(len(distribution)), key=lambda i: (-probabilities[i], i))
    kept: list[int] = []
    cumulative = 0.0
    for position in by_mass:
        kept.append(position)
        cumulative += probabilities[position]
        if cumulative >= p:
            break
    kept.sort()
    if len(kept) == len(distribution):
        return [(item, prob) for item, prob in distribution]
    mass = sum(probabilities[i] for i in kept)
    return [(distribution[i][0], probabilities[i] / mass) for i in kept]


# ---------------------------------------------------------------------------
# Synthetic pools


@dataclass(frozen=True)
class SamplerConfig:
    num_samples: int = 50
    nucleus_p: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValidationError(f"num_samples must be >= 1, got {self.num_samples}")
        if not 0.0 < self.nucleus_p <= 1.0:
            raise ValidationError(f"nucleus_p must be in (0, 1], got {self.nucleus_p}")


@dataclass(frozen=True)
class Confusion:
    """Replace a surface form with an alternative at some probability."""

    form: str
    alternative: str
    prob: float


@dataclass(frozen=True)
class NoiseModel:
    """Token-level perturbations used by the synthetic pool generator.

    Per token the outcome distribution is: keep, swap (when the token equals
    a confusion form), drop, duplicate.  The distribution passes through
    nucleus truncation before sampling, so outcomes below the nucleus are
    genuinely unreachable; that interplay is intended and observable.
    """

    drop: float = 0.0
    duplicate: float = 0.0
    confusions: tuple[Confusion, ...] = ()

    def __post_init__(self) -> None:
        for label, prob in (("drop", self.drop), ("duplicate", self.duplicate)):
            if not 0.0 <= prob <= 1.0:
                raise ValidationError(f"noise {label} probability must be in [0, 1], got {prob}")
        seen: set[str] = set()
        for confusion in self.confusions:
            if not confusion.form:
                raise ValidationError("confusion form must be nonempty")
            if confusion.form in seen:
                raise ValidationError(f"duplicate confusion form {confusion.form!r}")
            seen.add(confusion.form)
            if not 0.0 <= confusion.prob <= 1.0:
                raise ValidationError(f"confusion prob must be in [0, 1], got {confusion.prob}")
            if self.drop + self.duplicate + confusion.prob > 1.0:
                raise ValidationError(
                    f"drop + duplicate + confusion prob exceeds 1 for form {confusion.form!r}"
                )
        if self.drop + self.duplicate > 1.0:
            raise ValidationError("drop + duplicate probability exceeds 1")

    def swap_for(self, token: str) -> Confusion | None:
        for confusion in self.confusions:
            if confusion.form == token:
                return confusion
        return None


ZERO_NOISE = NoiseModel()


def load_noise_model(path: str | Path) -> NoiseModel:
    data = load_toml(path)
    confusions = []
    raw = data.get("confusions", [])
    if not isinstance(raw, list):
        raise ValidationError(f"{path}: confusions must be an array of tables")
    for entry in raw:
        if not isinstance(entry, dict):
            raise ValidationError(f"{path}: each confusion must be a table")
        try:
            confusions.append(
                Confusion(
                    form=str(entry["form"]),
                    alternative=str(entry["alternative"]),
                    prob=float(entry["prob"]),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"{path}: confusion entry missing key {exc}") from exc
    try:
        return NoiseModel(
            drop=float(data.get("drop", 0.0)),
            duplicate=float(data.get("duplicate", 0.0)),
            confusions=tuple(confusions),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _derive_seed(seed: int, doc_id: str, sentence_index: int) -> int:
    material = f"{seed}\x1f{doc_id}\x1f{sentence_index}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def _token_outcomes(token: str, noise: NoiseModel) -> list[tuple[tuple[str, ...], float]]:
    # Outcome order matters twice: keep-first wins probability ties in the
    # greedy pass, and nucleus truncation breaks ties by original order.
    swap = noise.swap_for(token)
    swap_prob = swap.prob if swap else 0.0
    keep_prob = 1.0 - noise.drop - noise.duplicate - swap_prob
    outcomes: list[tuple[tuple[str, ...], float]] = [((token,), keep_prob)]
    if swap is not None:
        outcomes.append(((swap.alternative,), swap_prob))
    if noise.drop > 0.0:
        outcomes.append(((), noise.drop))
    if noise.duplicate > 0.0:
        outcomes.append(((token, token), noise.duplicate))
    return outcomes


def synth_pool(
    reference: str,
    sampler: SamplerConfig = SamplerConfig(),
    noise: NoiseModel = ZERO_NOISE,
    *,
    doc_id: str = "synthetic",
    sentence_index: int = 0,
) -> CandidatePool:
    """A pool of num_samples candidates perturbed from the reference.

    Candidate 0 is always the unperturbed greedy pass (per-token argmax of
    the truncated outcome distribution); the rest are sampled.  Deterministic
    given (seed, doc_id, sentence_index), independent of generation order
    across sentences.  Each candidate carries the log-probability of its own
    sampling path, so map_select works on synthetic pools.
    """
    tokens = reference.split()
    truncated = [nucleus_truncate(_token_outcomes(token, noise), sampler.nucleus_p) for token in tokens]

    def greedy() -> tuple[str, float]:
        pieces: list[str] = []
        logprob = 0.0
        for outcomes in truncated:
            best = 0
            for index in range(1, len(outcomes)):
                if outcomes[index][1] > outcomes[best][1]:
                    best = index
            pieces.extend(outcomes[best][0])
            logprob += math.log(outcomes[best][1]) if outcomes[best][1] < 1.0 else 0.0
        return " ".join(pieces), logprob

    def sample(rng: random.Random) -> tuple[str, float]:
        pieces = []
        logprob = 0.0
        for outcomes in truncated:
            roll = rng.random()
            cumulative = 0.0
            picked = outcomes[-1]
            for outcome in outcomes:
                cumulative += outcome[1]
                if roll < cumulative:
                    picked = outcome
                    break
            pieces.extend(picked[0])
            logprob += math.log(picked[1]) if picked[1] < 1.0 else 0.0
        return " ".join(pieces), logprob

    rng = random.Random(_derive_seed(sampler.seed, doc_id, sentence_index))
    candidates = []
    text, logprob = greedy()
    candidates.append(Candidate(text=text, model_logprob=min(logprob, 0.0)))
    for _ in range(sampler.num_samples - 1):
        text, logprob = sample(rng)
        candidates.append(Candidate(text=text, model_logprob=min(logprob, 0.0)))
    return CandidatePool(doc_id=doc_id, sentence_index=sentence_index, candidates=tuple(candidates))


# ---------------------------------------------------------------------------
# Selection results file


@dataclass(frozen=True)
class Selection:
    """One line of a selections file: the chosen text for one sentence."""

    doc_id: str
    sentence_index: int
    method: str
    chosen_index: int
    text: str


def load_selections(path: str | Path) -> list[Selection]:
    selections = []
    seen: set[tuple[str, int]] = set()
    for number, record in _iter_records(path):
        where = f"{path}:{number}"
        doc_id = _field(record, "doc_id", str, where)
        index = _field(record, "index", int, where)
        if (doc_id, index) in seen:
            raise ValidationError(f"{where}: duplicate selection for ({doc_id!r}, {index})")
        seen.add((doc_id, index))
        method = _field(record, "method", str, where)
        if method not in SELECTION_METHODS:
            raise ValidationError(f"{where}: method must be one of {SELECTION_METHODS}, got {method!r}")
        selections.append(
            Selection(
                doc_id=doc_id,
                sentence_index=index,
                method=method,
                chosen_index=_field(record, "chosen_index", int, where),
                text=_field(record, "text", str, where),
            )
        )
    return selections


def serialize_selections(selections: Iterable[Selection]) -> str:
    return "".join(
        _dump_line(
            {
                "doc_id": s.doc_id,
                "index": s.sentence_index,
                "method": s.method,
                "chosen_index": s.chosen_index,
                "text": s.text,
            }
        )
        for s in selections
    )
