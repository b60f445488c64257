"""HTTP sidecar exposing sentence-embedding models over the /embed wire
protocol: POST /embed {"texts": [...], "normalize": bool} -> {"vectors",
"dim", "model"}, GET /healthz -> {"status": "ok"}."""

from .models import TokenHashModel, load_model, resolve_backend
from .service import EmbedService, ServiceConfig

__all__ = [
    "EmbedService",
    "ServiceConfig",
    "TokenHashModel",
    "load_model",
    "resolve_backend",
]
