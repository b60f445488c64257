"""Random, majority, and tf-idf KNN baselines."""

import numpy as np
import pytest

from nframe import FRAMES, DataError
from nframe.annotation import FrameLabelSet
from nframe.baselines import (
    K_GRID_DEFAULT,
    as_predictions,
    knn_fit,
    knn_fit_all,
    knn_from_payload,
    knn_payload,
    knn_predict,
    majority_predict,
    random_predict,
)

from conftest import make_article


def label(article_id, frames):
    return FrameLabelSet(article_id=article_id, frames=frozenset(frames))


def co_flags(labels):
    # knn_fit takes per-article booleans; knn_fit_all takes label sets
    return [("CO" in l.frames) for l in labels]


def test_random_predict_deterministic():
    a = random_predict("a1", seed=1042)
    b = random_predict("a1", seed=1042)
    assert a == b
    assert set(a) == set(FRAMES)
    assert all(isinstance(v, bool) for v in a.values())


def test_random_predict_varies_with_seed_and_article():
    outs = {frozenset(random_predict(f"a{i}", seed=s).items())
            for i in range(20) for s in (1, 2)}
    assert len(outs) > 1


def test_random_predict_roughly_balanced():
    draws = [random_predict(f"a{i}", seed=7)["CO"] for i in range(400)]
    rate = sum(draws) / len(draws)
    assert 0.4 < rate < 0.6


def test_majority_predict_counts_and_ties():
    labels = [label("a1", {"CO"}), label("a2", {"CO"}), label("a3", set()),
              label("a4", {"RE"}), label("a5", {"RE"})]
    out = majority_predict(labels)
    assert out["CO"] is False      # 2 positive vs 3 negative
    assert out["RE"] is False      # tie would need pos > neg; 2 vs 3 here
    labels.append(label("a6", {"CO", "RE"}))
    out = majority_predict(labels)
    assert out["CO"] is False      # 3 vs 3: exact tie goes negative
    labels.append(label("a7", {"CO"}))
    assert majority_predict(labels)["CO"] is True


def test_majority_predict_empty_is_error():
    with pytest.raises(DataError):
        majority_predict([])


def corpus_two_clusters():
    """Six articles in two lexical clusters, one per CO value."""
    pos = ["dispute quarrel clash fight", "quarrel clash dispute blame",
           "clash fight dispute reproach"]
    neg = ["garden bloom tulip spring", "tulip spring garden bloom",
           "bloom garden spring petal"]
    articles, labels = [], []
    for i, body in enumerate(pos + neg):
        aid = f"a{i}"
        articles.append(make_article(id=aid, title="t", body=body + "."))
        labels.append(label(aid, {"CO"} if i < 3 else set()))
    return articles, labels


def test_knn_fit_and_predict_separable():
    articles, labels = corpus_two_clusters()
    flags = co_flags(labels)
    model = knn_fit("CO", articles[:4], flags[:4], articles[4:], flags[4:],
                    k_grid=(1, 3))
    probe_pos = make_article(id="q1", title="t", body="dispute clash quarrel.")
    probe_neg = make_article(id="q2", title="t", body="tulip garden bloom.")
    assert knn_predict(model, probe_pos) is True
    assert knn_predict(model, probe_neg) is False


def test_knn_vote_distance_tie_prefers_lower_train_index():
    # two identical train docs with opposite labels: k=1 must pick index 0
    articles = [make_article(id="a0", title="t", body="same words here."),
                make_article(id="a1", title="t", body="same words here.")]
    flags = [True, False]
    model = knn_fit("CO", articles, flags, articles, flags, k_grid=(1,))
    probe = make_article(id="q", title="t", body="same words here.")
    assert knn_predict(model, probe) is True


def test_knn_vote_tie_is_negative():
    articles = [make_article(id="a0", title="t", body="alpha beta."),
                make_article(id="a1", title="t", body="gamma delta.")]
    flags = [True, False]
    model = knn_fit("CO", articles, flags, articles, flags, k_grid=(2,))
    probe = make_article(id="q", title="t", body="alpha gamma.")
    # one positive and one negative neighbor: positives do not outnumber
    assert knn_predict(model, probe) is False


def test_knn_k_selection_breaks_f1_ties_small():
    articles, labels = corpus_two_clusters()
    flags = co_flags(labels)
    model = knn_fit("CO", articles, flags, articles, flags, k_grid=(5, 3, 1))
    # perfectly separable: every k scores F1=1 on dev, smallest k wins
    assert model.k == 1


def test_knn_grid_filtered_to_train_size():
    articles, labels = corpus_two_clusters()
    flags = co_flags(labels)
    model = knn_fit("CO", articles[:4], flags[:4], articles[4:], flags[4:],
                    k_grid=K_GRID_DEFAULT)
    assert model.k <= 4
    with pytest.raises(DataError, match="k"):
        knn_fit("CO", articles[:2], flags[:2], articles[2:], flags[2:],
                k_grid=(25,))


def test_knn_k_equal_to_train_size_matches_majority():
    articles, labels = corpus_two_clusters()
    labels = [label(a.id, {"CO"} if i < 2 else set())
              for i, a in enumerate(articles)]  # 2 pos, 4 neg
    flags = co_flags(labels)
    model = knn_fit("CO", articles, flags, articles, flags, k_grid=(6,))
    probe = make_article(id="q", title="t", body="anything at all.")
    majority = majority_predict(labels)["CO"]
    assert knn_predict(model, probe) is majority


def test_knn_fit_all_shares_vectorizer():
    articles, labels = corpus_two_clusters()
    models = knn_fit_all(articles, labels, articles, labels, k_grid=(1, 3))
    assert set(models) == set(FRAMES)
    first = next(iter(models.values())).vectorizer
    assert all(m.vectorizer is first for m in models.values())


def test_knn_payload_round_trip():
    articles, labels = corpus_two_clusters()
    models = knn_fit_all(articles, labels, articles, labels, k_grid=(1, 3))
    payload = knn_payload(models)
    restored = knn_from_payload(payload)
    probe = make_article(id="q", title="t", body="dispute clash quarrel.")
    for frame in FRAMES:
        assert knn_predict(restored[frame], probe) == knn_predict(models[frame], probe)
        assert restored[frame].k == models[frame].k


def test_as_predictions_shape():
    preds = as_predictions("a9", {f: f == "CO" for f in FRAMES})
    assert [p.frame for p in preds] == list(FRAMES)
    co = next(p for p in preds if p.frame == "CO")
    assert co.predicted and co.probability == 1.0 and co.evidence == ()
    re = next(p for p in preds if p.frame == "RE")
    assert not re.predicted and re.probability == 0.0
