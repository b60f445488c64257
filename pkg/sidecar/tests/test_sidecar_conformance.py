"""Wire-contract conformance against the consumer's own checker.

The nframe package ships the protocol checker its remote embedder
client relies on; the sidecar must pass it exactly as the bundled mock
server does.  These tests therefore require nframe installed (it is a
sibling package in this repository: `pip install -e ..`).
"""

import numpy as np
import requests

from nframe.server import protocol_violations


def test_sidecar_passes_consumer_contract_suite(service):
    violations = protocol_violations(service.url, max_batch=16)
    ok = violations == []
    print(f"sidecar conformance: {'PASS' if ok else 'FAIL'} - "
          f"{'no protocol violations' if ok else '; '.join(violations)}")
    assert ok, violations


def test_identical_texts_embed_to_cosine_one(service):
    body = requests.post(
        service.url + "/embed",
        json={"texts": ["the very same sentence", "the very same sentence"],
              "normalize": True},
        timeout=30,
    ).json()
    u, v = (np.asarray(x, dtype=np.float64) for x in body["vectors"])
    cosine = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
    assert abs(cosine - 1.0) <= 1e-6


def test_usable_as_nframe_remote_embedder(service):
    """End-to-end: the primary's remote embedder client works against it."""
    from nframe.embedding import RemoteEmbedder, cosine

    embedder = RemoteEmbedder(service.url, batch_size=16)
    vectors = embedder.embed(["heat waves and drought", "a city council meeting"])
    assert vectors.shape == (2, 384)
    assert cosine(vectors[0], vectors[0]) > 1.0 - 1e-9
