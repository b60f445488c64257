"""The HTTP service: protocol handling, model lifecycle, configuration.

The listener starts immediately; the model loads in a background
thread.  /embed answers 503 until the model is ready (or if loading
failed), so clients can poll instead of racing a slow checkpoint load.
Inference is serialized behind a lock; each request's vectors are
computed in input order, so responses are order-correct regardless of
request concurrency.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .models import DEFAULT_MODEL, load_model


@dataclass(frozen=True)
class ServiceConfig:
    model: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8099
    max_batch: int = 256
    normalize_default: bool = True

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port must be in [0, 65535], got {self.port}")


class EmbedService:
    """Serve one embedding model over /embed and /healthz.

    ``loader`` defaults to the model registry; tests inject slow or
    failing loaders to exercise the 503 path.  Use as a context manager
    or call start()/stop().
    """

    def __init__(self, config: ServiceConfig = ServiceConfig(), loader=None):
        self.config = config
        self._loader = loader if loader is not None else (lambda: load_model(config.model))
        self._model = None
        self._load_error: str | None = None
        self._ready = threading.Event()
        self._inference_lock = threading.Lock()
        self._httpd = ThreadingHTTPServer((config.host, config.port), self._make_handler())
        self._server_thread: threading.Thread | None = None
        self._loader_thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def ready(self) -> bool:
        return self._ready.is_set() and self._model is not None

    def wait_ready(self, timeout: float = 120.0) -> bool:
        """Block until the model loaded (True) or failed/timed out (False)."""
        self._ready.wait(timeout)
        return self.ready

    def _load(self):
        try:
            self._model = self._loader()
        except Exception as exc:  # noqa: BLE001 - any load failure -> 503s
            self._load_error = f"{type(exc).__name__}: {exc}"
        finally:
            self._ready.set()

    def _make_handler(self):
        service = self

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
                if self.path != "/healthz":
                    self._send(404, {"error": "not found"})
                elif service._load_error is not None:
                    self._send(500, {"status": "error", "error": service._load_error})
                else:
                    self._send(200, {"status": "ok", "ready": service.ready})

            def do_POST(self):
                if self.path != "/embed":
                    self._send(404, {"error": "not found"})
                    return
                model = service._model
                if model is None:
                    if service._load_error is not None:
                        self._send(503, {"error": f"model failed to load: {service._load_error}"})
                    else:
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
                if len(texts) > service.config.max_batch:
                    self._send(413, {"error": f"batch exceeds {service.config.max_batch} texts"})
                    return
                normalize = bool(body.get("normalize", service.config.normalize_default))
                with service._inference_lock:
                    vectors = model.encode(list(texts), normalize=normalize)
                self._send(200, {
                    "vectors": [list(map(float, row)) for row in vectors],
                    "dim": model.dim,
                    "model": model.name,
                })

        return Handler

    def start(self) -> "EmbedService":
        self._loader_thread = threading.Thread(target=self._load, daemon=True)
        self._loader_thread.start()
        self._server_thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._server_thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._server_thread is not None:
            self._server_thread.join(timeout=5)
            self._server_thread = None

    def serve_forever(self):
        self._httpd.serve_forever()

    def __enter__(self) -> "EmbedService":
        return self.start()

    def __exit__(self, *exc):
        self.stop()
