"""Client for external neural-metric scoring services.

The wire protocol is a minimal JSON POST: `{base_url}/score` receives
`{"items": [{"src": str|null, "hyp": str, "ref": str|null}]}` and returns
`{"scores": [float]}`.  The client batches, retries transient failures with
exponential backoff, and can write scores through a persistent on-disk cache
so reruns never repeat network work.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import requests

from .decoding import UtilityFunction
from .errors import ScorerError, ScorerProtocolError, ValidationError

SCORER_MODES = ("reference_based", "reference_free")

_BACKOFF_INITIAL_SECONDS = 0.1


@dataclass(frozen=True)
class ScorerEndpoint:
    """One remote scorer: its address, mode, and transport settings."""

    name: str
    base_url: str
    mode: str
    timeout_ms: int = 10_000
    max_batch: int = 32
    retries: int = 2
    bearer_token: str | None = None
    concurrency: int = 1

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("scorer name must be nonempty")
        if not self.base_url.startswith(("http://", "https://")):
            raise ValidationError(f"base_url must be an http(s) URL, got {self.base_url!r}")
        if self.mode not in SCORER_MODES:
            raise ValidationError(f"mode must be one of {SCORER_MODES}, got {self.mode!r}")
        if self.timeout_ms <= 0:
            raise ValidationError(f"timeout_ms must be positive, got {self.timeout_ms}")
        if self.max_batch < 1:
            raise ValidationError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.retries < 0:
            raise ValidationError(f"retries must be >= 0, got {self.retries}")
        if self.concurrency < 1:
            raise ValidationError(f"concurrency must be >= 1, got {self.concurrency}")

    @property
    def score_url(self) -> str:
        return self.base_url.rstrip("/") + "/score"


@dataclass(frozen=True)
class ScoreItem:
    """One scoring request: hypothesis plus optional source and reference."""

    hypothesis: str
    source: str | None = None
    reference: str | None = None
    context: str | None = None

    def wire_form(self) -> dict:
        item = {"src": self.source, "hyp": self.hypothesis, "ref": self.reference}
        if self.context is not None:
            item["ctx"] = self.context
        return item


def _check_items(endpoint: ScorerEndpoint, items: Sequence[ScoreItem]) -> None:
    for position, item in enumerate(items):
        has_reference = item.reference is not None
        if endpoint.mode == "reference_based" and not has_reference:
            raise ValidationError(
                f"item {position}: scorer {endpoint.name!r} is reference_based but the item has no reference"
            )
        if endpoint.mode == "reference_free" and has_reference:
            raise ValidationError(
                f"item {position}: scorer {endpoint.name!r} is reference_free but the item has a reference"
            )


def _post_batch(endpoint: ScorerEndpoint, batch: Sequence[ScoreItem]) -> list[float]:
    payload = {"items": [item.wire_form() for item in batch]}
    headers = {}
    if endpoint.bearer_token is not None:
        headers["Authorization"] = f"Bearer {endpoint.bearer_token}"
    last_failure = "no attempt made"
    for attempt in range(endpoint.retries + 1):
        if attempt > 0:
            time.sleep(_BACKOFF_INITIAL_SECONDS * 2 ** (attempt - 1))
        try:
            response = requests.post(
                endpoint.score_url,
                json=payload,
                headers=headers,
                timeout=endpoint.timeout_ms / 1000.0,
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_failure = f"connection failure: {exc}"
            continue
        if 500 <= response.status_code < 600:
            last_failure = f"status {response.status_code}: {response.text[:200]}"
            continue
        if response.status_code != 200:
            raise ScorerError(
                f"scorer {endpoint.name!r} rejected the request with "
                f"status {response.status_code}: {response.text[:200]}"
            )
        return _parse_scores(endpoint, response, len(batch))
    raise ScorerError(
        f"scorer {endpoint.name!r} failed after {endpoint.retries + 1} attempts; last: {last_failure}"
    )


def _parse_scores(endpoint: ScorerEndpoint, response: requests.Response, expected: int) -> list[float]:
    try:
        body = response.json()
    except ValueError as exc:
        raise ScorerProtocolError(f"scorer {endpoint.name!r} returned non-JSON: {response.text[:200]}") from exc
    scores = body.get("scores") if isinstance(body, dict) else None
    if not isinstance(scores, list):
        raise ScorerProtocolError(f"scorer {endpoint.name!r} response lacks a 'scores' list")
    if len(scores) != expected:
        raise ScorerProtocolError(
            f"scorer {endpoint.name!r} returned {len(scores)} scores for {expected} items"
        )
    values = []
    for position, score in enumerate(scores):
        if isinstance(score, bool) or not isinstance(score, (int, float)) or not math.isfinite(score):
            raise ScorerProtocolError(
                f"scorer {endpoint.name!r} returned a non-finite score at position {position}: {score!r}"
            )
        values.append(float(score))
    return values


def score_batch(endpoint: ScorerEndpoint, items: Sequence[ScoreItem]) -> list[float]:
    """Score items in order, splitting requests at the endpoint's max_batch.

    An empty item list returns an empty score list without any network call.
    Batches may be scored concurrently up to endpoint.concurrency; the
    returned order always matches the input order.
    """
    _check_items(endpoint, items)
    if not items:
        return []
    batches = [items[start : start + endpoint.max_batch] for start in range(0, len(items), endpoint.max_batch)]
    if endpoint.concurrency == 1 or len(batches) == 1:
        results = [_post_batch(endpoint, batch) for batch in batches]
    else:
        with ThreadPoolExecutor(max_workers=endpoint.concurrency) as pool:
            results = list(pool.map(lambda batch: _post_batch(endpoint, batch), batches))
    return [score for batch_scores in results for score in batch_scores]


# ---------------------------------------------------------------------------
# Persistent cache


def cache_key(scorer_name: str, item: ScoreItem) -> str:
    """Collision-resistant digest of the scorer name and item content."""
    material = json.dumps(
        [scorer_name, item.source, item.hypothesis, item.reference, item.context],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class ScoreCache:
    """Append-only JSONL score cache, compacted on open.

    Each line holds {"key", "score", "stored_at"}.  Later entries win during
    compaction.  I/O failures degrade the cache to in-memory operation with
    a warning; they never fail the scoring call.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._scores: dict[str, float] = {}
        self._degraded = False
        self._load_and_compact()

    def _load_and_compact(self) -> None:
        try:
            if self.path.exists():
                for line in self.path.read_text(encoding="utf-8").splitlines():
                    if not line.strip():
                        continue
                    try:
                        record = json.loads(line)
                        self._scores[str(record["key"])] = float(record["score"])
                    except (ValueError, KeyError, TypeError):
                        continue
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("w", encoding="utf-8") as handle:
                for key, score in self._scores.items():
                    handle.write(self._line(key, score))
        except OSError as exc:
            self._degrade(f"cannot open score cache {self.path}: {exc}")

    @staticmethod
    def _line(key: str, score: float) -> str:
        record = {"key": key, "score": score, "stored_at": time.time()}
        return json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n"

    def _degrade(self, message: str) -> None:
        if not self._degraded:
            self._degraded = True
            warnings.warn(f"{message}; continuing without persistence", stacklevel=3)

    def get(self, key: str) -> float | None:
        return self._scores.get(key)

    def put(self, key: str, score: float) -> None:
        self._scores[key] = score
        if self._degraded:
            return
        try:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(self._line(key, score))
        except OSError as exc:
            self._degrade(f"cannot append to score cache {self.path}: {exc}")

    def __len__(self) -> int:
        return len(self._scores)

    def __contains__(self, key: object) -> bool:
        return key in self._scores


def score_batch_cached(
    endpoint: ScorerEndpoint,
    items: Sequence[ScoreItem],
    cache: ScoreCache,
) -> list[float]:
    """score_batch with cache consultation and per-batch write-through.

    Cache hits never reach the network.  Misses are scored in max_batch
    chunks; each chunk's scores are written to the cache only after the
    chunk succeeds, so a failed request leaves no partial writes.
    """
    _check_items(endpoint, items)
    keys = [cache_key(endpoint.name, item) for item in items]
    scores: list[float | None] = [cache.get(key) for key in keys]
    missing = [position for position, score in enumerate(scores) if score is None]
    for start in range(0, len(missing), endpoint.max_batch):
        chunk = missing[start : start + endpoint.max_batch]
        chunk_scores = score_batch(endpoint, [items[position] for position in chunk])
        for position, score in zip(chunk, chunk_scores):
            cache.put(keys[position], score)
            scores[position] = score
    return [score for score in scores if score is not None]


def cached_utility(endpoint: ScorerEndpoint, cache: ScoreCache | None = None) -> UtilityFunction:
    """Wrap a scorer endpoint as a pairwise utility named external:<name>.

    For reference_based scorers the pseudo-reference is sent as the item
    reference; reference_free scorers receive only source and hypothesis.
    With a cache, identical evaluations are served without network calls.
    """

    def evaluate(hypothesis: str, pseudo_reference: str, source: str | None, context: str | None) -> float:
        reference = pseudo_reference if endpoint.mode == "reference_based" else None
        item = ScoreItem(hypothesis=hypothesis, source=source, reference=reference, context=context)
        if cache is None:
            return score_batch(endpoint, [item])[0]
        return score_batch_cached(endpoint, [item], cache)[0]

    return UtilityFunction(name=f"external:{endpoint.name}", evaluate=evaluate)
