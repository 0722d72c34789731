"""Deterministic in-process scoring server for tests and demos.

Scores are derived from a content hash of each item, so they are stable
across runs and machines, uniformly spread over [0, 1), and need no model.
The server also supports failure injection and light protocol misbehavior
so client retry and error paths can be exercised.
"""

from __future__ import annotations

import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .scorer import ScorerEndpoint

MISBEHAVIORS = ("short", "not_json", "nan")


def deterministic_score(item: dict) -> float:
    """Hash-derived score in [0, 1) for one wire-form item."""
    material = json.dumps(item, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(material.encode("utf-8")).hexdigest()
    return int(digest[:12], 16) / float(16**12)


class _MockScorerServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], fixed_score: float | None):
        super().__init__(address, _Handler)
        self.lock = threading.Lock()
        self.request_count = 0
        self.failures_remaining = 0
        self.failure_status = 500
        self.fixed_score = fixed_score
        self.misbehavior: str | None = None
        self.last_headers: dict[str, str] = {}


class _Handler(BaseHTTPRequestHandler):
    server: _MockScorerServer

    def log_message(self, format: str, *args: object) -> None:
        pass

    def _respond(self, status: int, body: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:
        server = self.server
        with server.lock:
            server.request_count += 1
            server.last_headers = {key: value for key, value in self.headers.items()}
            inject_failure = server.failures_remaining > 0
            if inject_failure:
                server.failures_remaining -= 1
            failure_status = server.failure_status
            misbehavior = server.misbehavior
            fixed_score = server.fixed_score
        if self.path != "/score":
            self._respond(404, b'{"error":"unknown path"}')
            return
        if inject_failure:
            self._respond(failure_status, b'{"error":"injected failure"}')
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length))
            items = body["items"]
            if not isinstance(items, list):
                raise ValueError("items must be a list")
        except (ValueError, KeyError) as exc:
            self._respond(400, json.dumps({"error": str(exc)}).encode("utf-8"))
            return
        if misbehavior == "not_json":
            self._respond(200, b"certainly not json", content_type="text/plain")
            return
        scores: list[object] = [
            fixed_score if fixed_score is not None else deterministic_score(item) for item in items
        ]
        if misbehavior == "short" and scores:
            scores = scores[:-1]
        payload = json.dumps({"scores": scores}).encode("utf-8")
        if misbehavior == "nan" and scores:
            payload = payload.replace(str(scores[0]).encode("utf-8"), b"NaN", 1)
        self._respond(200, payload)


class MockScorer:
    """Context-managed local scoring server bound to an ephemeral port."""

    def __init__(self, fixed_score: float | None = None):
        self._server = _MockScorerServer(("127.0.0.1", 0), fixed_score)
        self._thread: threading.Thread | None = None

    def __enter__(self) -> MockScorer:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def request_count(self) -> int:
        with self._server.lock:
            return self._server.request_count

    @property
    def last_headers(self) -> dict[str, str]:
        with self._server.lock:
            return dict(self._server.last_headers)

    def reset(self) -> None:
        with self._server.lock:
            self._server.request_count = 0
            self._server.failures_remaining = 0
            self._server.misbehavior = None

    def fail_next(self, count: int, status: int = 500) -> None:
        """Make the next `count` requests fail with the given status."""
        with self._server.lock:
            self._server.failures_remaining = count
            self._server.failure_status = status

    def misbehave(self, kind: str | None) -> None:
        """Switch on a protocol violation: 'short', 'not_json', or 'nan'."""
        if kind is not None and kind not in MISBEHAVIORS:
            raise ValueError(f"kind must be one of {MISBEHAVIORS} or None, got {kind!r}")
        with self._server.lock:
            self._server.misbehavior = kind

    def endpoint(self, name: str = "mock", mode: str = "reference_based", **overrides: object) -> ScorerEndpoint:
        """A ScorerEndpoint pointing at this server."""
        return ScorerEndpoint(name=name, base_url=self.base_url, mode=mode, **overrides)  # type: ignore[arg-type]
