import pytest
from importlib import resources

from nframe import (
    Article,
    MockEmbedServer,
    default_codebook,
    generate_planted,
    load_annotations,
    load_corpus,
)


def make_article(id="x1", title="Title here", body="One sentence. Two sentence.",
                 outlet="Test Wire", leaning="left", date="2022-01-01"):
    return Article(id=id, title=title, body=body, outlet=outlet,
                   leaning=leaning, date=date)


@pytest.fixture(scope="session")
def fixture_dir():
    return resources.files("nframe").joinpath("data/fixture")


@pytest.fixture(scope="session")
def fixture_articles(fixture_dir):
    return load_corpus(str(fixture_dir.joinpath("articles.jsonl")))


@pytest.fixture(scope="session")
def fixture_annotations(fixture_dir):
    return load_annotations(str(fixture_dir.joinpath("annotations.jsonl")),
                            default_codebook())


@pytest.fixture(scope="session")
def codebook():
    return default_codebook()


@pytest.fixture(scope="session")
def planted_corpus():
    # shared across tests; generation is cheap but not free
    return generate_planted(200, seed=1042)


@pytest.fixture(scope="session")
def mock_server():
    with MockEmbedServer(dim=64, max_batch=16) as server:
        yield server
