import pytest

from embed_sidecar import EmbedService, ServiceConfig


def start_service(**overrides) -> EmbedService:
    """Start a service on a free port and wait for its model."""
    config = ServiceConfig(**{"port": 0, **overrides})
    service = EmbedService(config).start()
    assert service.wait_ready(timeout=60)
    return service


@pytest.fixture(scope="session")
def service():
    """One ready service with the built-in model, shared by read-only tests."""
    svc = start_service(max_batch=16)
    yield svc
    svc.stop()
