"""Mock embedding server and wire-protocol conformance checks.

The mock serves the /embed protocol over the hashing embedder so the
whole pipeline, including retry and error paths, can run offline.  The
protocol checker below is the single source of truth for conformance:
the mock and any real embedding service must both pass it.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import requests

from .embedding import hash_embed


class MockEmbedServer:
    """Threaded HTTP server implementing POST /embed and GET /healthz.

    fail_first makes the first n /embed requests answer 503, for
    exercising client retries; max_batch bounds request size (413).
    """

    def __init__(self, port: int = 0, dim: int = 256, max_batch: int = 256,
                 fail_first: int = 0, host: str = "127.0.0.1"):
        self.dim = dim
        self.max_batch = max_batch
        self._fail_remaining = fail_first
        self._lock = threading.Lock()
        self._httpd = ThreadingHTTPServer((host, port), self._make_handler())
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def _take_failure(self) -> bool:
        with self._lock:
            if self._fail_remaining > 0:
                self._fail_remaining -= 1
                return True
            return False

    def _make_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def _send(self, status: int, payload: dict):
                body = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                if self.path == "/healthz":
                    self._send(200, {"status": "ok"})
                else:
                    self._send(404, {"error": "not found"})

            def do_POST(self):
                if self.path != "/embed":
                    self._send(404, {"error": "not found"})
                    return
                if server._take_failure():
                    self._send(503, {"error": "model not ready"})
                    return
                try:
                    length = int(self.headers.get("Content-Length", "0"))
                    body = json.loads(self.rfile.read(length))
                except (ValueError, TypeError):
                    self._send(400, {"error": "body is not valid JSON"})
                    return
                if not isinstance(body, dict) or "texts" not in body:
                    self._send(400, {"error": 'missing "texts"'})
                    return
                texts = body["texts"]
                if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
                    self._send(400, {"error": '"texts" must be a list of strings'})
                    return
                if len(texts) > server.max_batch:
                    self._send(413, {"error": f"batch exceeds {server.max_batch} texts"})
                    return
                normalize = bool(body.get("normalize", True))
                vectors = [
                    hash_embed(t, server.dim, normalize=normalize).tolist()
                    for t in texts
                ]
                self._send(200, {
                    "vectors": vectors,
                    "dim": server.dim,
                    "model": f"hash-fnv1a-{server.dim}",
                })

        return Handler

    def start(self) -> "MockEmbedServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def serve_forever(self):
        self._httpd.serve_forever()

    def __enter__(self) -> "MockEmbedServer":
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def _norm(vector) -> float:
    return float(np.linalg.norm(np.asarray(vector, dtype=np.float64)))


def _cos(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    denominator = np.linalg.norm(u) * np.linalg.norm(v)
    if denominator == 0:
        return 0.0
    return float(u @ v / denominator)


def protocol_violations(base_url: str, *, max_batch: int | None = None,
                        timeout: float = 30.0) -> list[str]:
    """Probe an embedding service and return a list of protocol
    violations (empty means conformant).

    Checks /healthz, response shape, input-order preservation,
    normalization on request, determinism on identical texts, 400 on
    malformed bodies, and, when max_batch is given, 413 on oversized
    batches.
    """
    base = base_url.rstrip("/")
    problems: list[str] = []

    def post(payload, raw: bytes | None = None):
        if raw is not None:
            return requests.post(
                base + "/embed", data=raw,
                headers={"Content-Type": "application/json"}, timeout=timeout,
            )
        return requests.post(base + "/embed", json=payload, timeout=timeout)

    resp = requests.get(base + "/healthz", timeout=timeout)
    if resp.status_code != 200:
        problems.append(f"/healthz returned status {resp.status_code}")
    else:
        try:
            if resp.json().get("status") != "ok":
                problems.append('/healthz body lacks {"status": "ok"}')
        except ValueError:
            problems.append("/healthz body is not JSON")

    resp = post({"texts": ["the quick brown fox jumps"], "normalize": True})
    if resp.status_code != 200:
        problems.append(f"/embed returned status {resp.status_code} for a valid request")
        return problems
    body = resp.json()
    for key in ("vectors", "dim", "model"):
        if key not in body:
            problems.append(f'/embed response missing "{key}"')
    if problems:
        return problems
    first_dim = body["dim"]
    if len(body["vectors"]) != 1:
        problems.append("vector count does not match text count")
    elif len(body["vectors"][0]) != first_dim:
        problems.append('vector length disagrees with "dim"')
    elif abs(_norm(body["vectors"][0]) - 1.0) > 1e-6:
        problems.append("vector not L2-normalized despite normalize=true")

    # order preservation: batch results must line up with per-text results
    pair = ["completely different subject matter", "numerical weather prediction archive"]
    batch_body = post({"texts": pair, "normalize": True}).json()
    batch = batch_body["vectors"]
    singles = [post({"texts": [t], "normalize": True}).json()["vectors"][0] for t in pair]
    if len(batch) != 2:
        problems.append("two texts did not yield two vectors")
    else:
        for i in range(2):
            if _cos(batch[i], singles[i]) < 0.999:
                problems.append(f"batch vector {i} does not match its single-text embedding")
        if batch_body["dim"] != first_dim:
            problems.append("dim changed between requests")

    twin = post({"texts": ["same text twice", "same text twice"], "normalize": True}).json()
    if _cos(twin["vectors"][0], twin["vectors"][1]) < 1.0 - 1e-6:
        problems.append("identical texts did not embed identically (cosine < 1 - 1e-6)")

    resp = post({"normalize": True})
    if resp.status_code != 400:
        problems.append(f'missing "texts" answered {resp.status_code}, expected 400')
    resp = post(None, raw=b"this is not json")
    if resp.status_code != 400:
        problems.append(f"non-JSON body answered {resp.status_code}, expected 400")
    resp = post({"texts": "not a list", "normalize": False})
    if resp.status_code != 400:
        problems.append(f'non-list "texts" answered {resp.status_code}, expected 400')

    resp = post({"texts": ["ok"], "normalize": False})
    if resp.status_code != 200:
        problems.append(f"normalize=false answered {resp.status_code}, expected 200")

    if max_batch is not None:
        resp = post({"texts": ["x"] * (max_batch + 1), "normalize": True})
        if resp.status_code != 413:
            problems.append(
                f"batch of {max_batch + 1} answered {resp.status_code}, expected 413"
            )

    return problems
