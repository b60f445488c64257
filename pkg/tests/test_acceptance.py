"""Release acceptance gate.

One test per criterion; each prints a single `criterion N: PASS/FAIL`
line with the measured numbers, and the assertion carries the same
message. Tolerances are pinned here and must not be widened to force a
pass; a red criterion is a finding, not a formatting problem.
"""

import time

import numpy as np

from nframe import FRAMES
from nframe.agreement import krippendorff_alpha, pairwise_agreement, rouge_l
from nframe.annotation import aggregate_frames, default_codebook, load_annotations
from nframe.baselines import majority_predict, random_predict
from nframe.cli import main
from nframe.embedding import HashEmbedder
from nframe.evaluation import (
    balance_upsample,
    evaluate,
    exact_match_rate,
    harmonic_f1,
    labels_to_sets,
    macro_pr,
    make_folds,
)
from nframe.planted import generate_planted
from nframe.rbf import (
    ABLATIONS,
    FrameModel,
    TrainConfig,
    build_channels,
    channel_features,
    frame_descriptions,
    logistic_loss_grad,
    predict_frames,
    rank_all_frames,
    train_frame_model,
    train_logistic,
)
from nframe.semisup import SemiSupConfig, train_semisup

from test_agreement import matrix_from_rows, oracle_alpha, oracle_pairwise, oracle_rouge, random_rows
from test_annotation import FIXTURE_LABELS
from test_evaluation import oracle_macro


def _verdict(number: int, name: str, ok: bool, detail: str) -> str:
    line = f"criterion {number} ({name}): {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    return line


# --- criterion 1: metric implementations agree with brute-force oracles ---

def _random_sets(rng, n_articles):
    ids = [f"a{i}" for i in range(n_articles)]
    preds = {a: frozenset(f for f in FRAMES if rng.random() < 0.4) for a in ids}
    gold = {a: frozenset(f for f in FRAMES if rng.random() < 0.4) for a in ids}
    return preds, gold


def test_criterion_1_metric_oracle_equivalence():
    rng = np.random.default_rng(20230101)
    start = time.perf_counter()
    worst = 0.0

    checked = 0
    while checked < 100:  # alpha and pairwise share instances
        rows = random_rows(rng)
        matrix = matrix_from_rows(rows)
        try:
            expected_alpha = oracle_alpha(rows)
        except ZeroDivisionError:
            continue
        try:
            expected_pair = oracle_pairwise(rows)
        except ValueError:
            continue
        worst = max(worst, abs(krippendorff_alpha(matrix) - expected_alpha))
        got_pair = pairwise_agreement(matrix)
        worst = max(worst, *(abs(g - e) for g, e in zip(got_pair, expected_pair)))
        checked += 1

    vocab = ["storm", "flood", "tax", "coal", "sun", "act", "now", "later"]
    for _ in range(100):
        a = " ".join(rng.choice(vocab, size=rng.integers(0, 12)))
        b = " ".join(rng.choice(vocab, size=rng.integers(0, 12)))
        worst = max(worst, abs(rouge_l(a, b) - oracle_rouge(a, b)))

    for _ in range(100):
        preds, gold = _random_sets(rng, int(rng.integers(1, 11)))
        precision, recall = macro_pr(preds, gold)
        op, orr = oracle_macro(preds, gold)
        worst = max(worst, abs(precision - op), abs(recall - orr))
        expected_h = 2 * op * orr / (op + orr) if op + orr else 0.0
        worst = max(worst, abs(harmonic_f1(precision, recall) - expected_h))
        expected_em = sum(1 for a in gold if preds[a] == gold[a]) / len(gold)
        worst = max(worst, abs(exact_match_rate(preds, gold) - expected_em))

    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10.0
    line = _verdict(1, "metric oracle equivalence", ok,
                    f"worst deviation {worst:.2e} over 100+ instances per metric, "
                    f"{elapsed:.2f}s")
    assert ok, line


# --- criterion 2: harmonic-F1 arithmetic on the reference score rows ---

# externally reported (precision, recall) pairs and their rounded F1s
REFERENCE_ROWS = (
    (0.51, 0.76, 0.61),
    (0.56, 0.65, 0.60),
    (0.40, 0.61, 0.49),
    (0.33, 0.49, 0.39),
    (0.14, 0.24, 0.18),
)


def test_criterion_2_harmonic_f1_reproduction():
    misses = []
    for precision, recall, expected in REFERENCE_ROWS:
        got = harmonic_f1(precision, recall)
        if abs(got - expected) > 0.005:
            misses.append(f"({precision}, {recall}) -> {got:.5f}, "
                          f"expected {expected} (off {abs(got - expected):.4f})")
    ok = not misses
    detail = ("all 5 rows within 0.005" if ok
              else f"{len(misses)} of 5 rows outside 0.005: " + "; ".join(misses))
    line = _verdict(2, "harmonic F1 arithmetic", ok, detail)
    assert ok, line


# --- criterion 3: bundled fixture labels reproduce the hand computation ---

def test_criterion_3_fixture_label_reproduction(fixture_dir, codebook):
    records = load_annotations(str(fixture_dir.joinpath("annotations.jsonl")), codebook)
    groups = {}
    for rec in records:
        groups.setdefault(rec.article_id, []).append(rec)
    got = {aid: set(aggregate_frames(group, codebook).frames)
           for aid, group in groups.items()}
    mismatches = {aid: (sorted(got[aid]), sorted(FIXTURE_LABELS[aid]))
                  for aid in FIXTURE_LABELS if got.get(aid) != FIXTURE_LABELS[aid]}
    ok = got == FIXTURE_LABELS and not mismatches
    detail = (f"{len(FIXTURE_LABELS)} articles match exactly" if ok
              else f"mismatches: {mismatches}")
    line = _verdict(3, "fixture label reproduction", ok, detail)
    assert ok, line


# --- criterion 4: planted-evidence benchmark ---

def _train_rbf(train_articles, label_sets, embedder, descriptions, theta,
               seed=1042, ablation=()):
    channel_sets = {}
    for article in train_articles:
        rankings = rank_all_frames(article, descriptions, embedder)
        for frame in FRAMES:
            channel_sets[(article.id, frame)] = build_channels(
                article, rankings[frame], theta, embedder)
    models = {}
    for frame in FRAMES:
        pairs = [(channel_sets[(a.id, frame)], frame in label_sets[a.id])
                 for a in train_articles]
        balanced = balance_upsample(pairs, seed=seed)
        models[frame] = train_frame_model(
            balanced, TrainConfig(seed=seed, ablation=ablation), frame)
    return models


def test_criterion_4_planted_evidence_benchmark():
    start = time.perf_counter()
    corpus = generate_planted(200, seed=1042)
    embedder = HashEmbedder(256)
    descriptions = frame_descriptions()
    label_sets = labels_to_sets(corpus.labels)
    by_id = {a.id: a for a in corpus.articles}
    fold = make_folds([a.id for a in corpus.articles], k=5, seed=1042)[0]
    train_articles = [by_id[i] for i in fold.train_ids]
    test_articles = [by_id[i] for i in fold.test_ids]

    models = _train_rbf(train_articles, label_sets, embedder, descriptions,
                        theta=0.15)
    predictions = []
    for article in test_articles:
        predictions.extend(predict_frames(article, models, descriptions,
                                          embedder, theta=0.15))
    pred_sets = {a.id: frozenset(p.frame for p in predictions
                                 if p.article_id == a.id and p.predicted)
                 for a in test_articles}
    gold = {a.id: label_sets[a.id] for a in test_articles}
    rbf_f1 = evaluate(pred_sets, gold).f1_mean

    train_label_sets = [l for l in corpus.labels if l.article_id in set(fold.train_ids)]
    majority_flags = majority_predict(train_label_sets)
    majority_sets = {a.id: frozenset(f for f in FRAMES if majority_flags[f])
                     for a in test_articles}
    majority_f1 = evaluate(majority_sets, gold).f1_mean
    random_sets_ = {a.id: frozenset(f for f, v in random_predict(a.id, 1042).items() if v)
                    for a in test_articles}
    random_f1 = evaluate(random_sets_, gold).f1_mean

    true_positives = planted_hits = 0
    for p in predictions:
        if p.predicted and p.frame in gold[p.article_id]:
            true_positives += 1
            if p.evidence and p.evidence[0][0] in corpus.planted_indices(
                    p.article_id, p.frame):
                planted_hits += 1
    evidence_rate = planted_hits / true_positives if true_positives else 0.0
    elapsed = time.perf_counter() - start

    ok = (rbf_f1 >= 0.90 and rbf_f1 > majority_f1 and rbf_f1 > random_f1
          and evidence_rate >= 0.95 and elapsed < 60.0)
    line = _verdict(4, "planted evidence benchmark", ok,
                    f"F1 {rbf_f1:.4f} (majority {majority_f1:.4f}, random "
                    f"{random_f1:.4f}), top-1 evidence planted on "
                    f"{planted_hits}/{true_positives} true positives "
                    f"({evidence_rate:.1%}), {elapsed:.1f}s")
    assert ok, line


# --- criterion 5: ablations zero the masked blocks and features nest ---

def test_criterion_5_ablation_masking_and_nesting(planted_corpus):
    embedder = HashEmbedder(64)
    dim = embedder.dim
    descriptions = frame_descriptions()
    label_sets = labels_to_sets(planted_corpus.labels)
    articles = planted_corpus.articles[:60]

    problems = []
    sample = articles[0]
    rankings = rank_all_frames(sample, descriptions, embedder)
    channels = build_channels(sample, rankings["CO"], 0.15, embedder)
    full = channel_features(channels, ABLATIONS["rbf"])
    minus_a = channel_features(channels, ABLATIONS["rbf-a"])
    minus_at = channel_features(channels, ABLATIONS["rbf-at"])
    if not (full.shape == minus_a.shape == minus_at.shape == (5 * dim,)):
        problems.append("feature vectors differ in length")
    if not np.array_equal(full[:4 * dim], minus_a[:4 * dim]):
        problems.append("dropping the prefix channel changed earlier blocks")
    if not np.array_equal(full[:3 * dim], minus_at[:3 * dim]):
        problems.append("dropping threshold+prefix changed the top-3 blocks")
    if np.any(minus_a[4 * dim:] != 0.0):
        problems.append("prefix block not zero under the -a ablation")
    if np.any(minus_at[3 * dim:] != 0.0):
        problems.append("threshold/prefix blocks not zero under -a,t")

    for method, zero_from in (("rbf-a", 4 * dim), ("rbf-at", 3 * dim)):
        models = _train_rbf(articles, label_sets, embedder, descriptions,
                            theta=0.15, ablation=ABLATIONS[method])
        for frame, model in models.items():
            block = np.asarray(model.weights)[zero_from:]
            if np.any(block != 0.0):
                problems.append(f"{method} {frame}: trained masked block "
                                f"has nonzero weights")
    ok = not problems
    detail = ("masked blocks exactly zero, feature prefixes nest" if ok
              else "; ".join(problems))
    line = _verdict(5, "ablation masking and nesting", ok, detail)
    assert ok, line


# --- criterion 6: analytic gradients match central finite differences ---

def test_criterion_6_gradient_check():
    rng = np.random.default_rng(99)
    h = 1e-6
    worst = 0.0
    for batch in range(50):
        dim = int(rng.integers(3, 40))
        n = int(rng.integers(1, 16))
        X = rng.normal(size=(n, dim))
        y = (rng.random(n) if batch % 2 else rng.integers(0, 2, n)).astype(float)
        weights = rng.normal(scale=0.5, size=dim)
        bias = float(rng.normal())
        _, grad_w, grad_b = logistic_loss_grad(weights, bias, X, y)
        for idx in rng.choice(dim, size=min(dim, 5), replace=False):
            bumped = weights.copy()
            bumped[idx] += h
            up = logistic_loss_grad(bumped, bias, X, y)[0]
            bumped[idx] -= 2 * h
            down = logistic_loss_grad(bumped, bias, X, y)[0]
            numeric = (up - down) / (2 * h)
            worst = max(worst, abs(grad_w[idx] - numeric) / max(1.0, abs(numeric)))
        up = logistic_loss_grad(weights, bias + h, X, y)[0]
        down = logistic_loss_grad(weights, bias - h, X, y)[0]
        numeric = (up - down) / (2 * h)
        worst = max(worst, abs(grad_b - numeric) / max(1.0, abs(numeric)))
    ok = worst <= 1e-5
    line = _verdict(6, "gradient check", ok,
                    f"worst relative error {worst:.2e} over 50 batches")
    assert ok, line


# --- criterion 7: the pipeline is deterministic end to end ---

def _run_pipeline(root, articles_path, annotations_path):
    root.mkdir(parents=True, exist_ok=True)
    corpus, labels = root / "c.jsonl", root / "l.jsonl"
    folds, model = root / "folds", root / "model"
    preds, metrics = root / "p.jsonl", root / "m.json"
    for argv in (
        ["ingest", "--input", articles_path, "--out", str(corpus)],
        ["aggregate", "--annotations", annotations_path, "--out", str(labels)],
        ["split", "--labels", str(labels), "--out", str(folds)],
        ["train", "--method", "rbf", "--embedder", "hash", "--dim", "64",
         "--corpus", str(corpus), "--labels", str(labels),
         "--fold", str(folds / "fold0.json"), "--out", str(model)],
        ["predict", "--model", str(model), "--corpus", str(corpus),
         "--evidence", "--out", str(preds)],
        ["eval", "--preds", str(preds), "--gold", str(labels), "--out", str(metrics)],
    ):
        code = main(argv)
        assert code == 0, f"{argv[0]} exited {code}"
    return preds.read_bytes(), metrics.read_bytes()


def test_criterion_7_pipeline_determinism(tmp_path, fixture_dir):
    articles = str(fixture_dir.joinpath("articles.jsonl"))
    annotations = str(fixture_dir.joinpath("annotations.jsonl"))
    first = _run_pipeline(tmp_path / "one", articles, annotations)
    second = _run_pipeline(tmp_path / "two", articles, annotations)
    ok = first == second
    detail = ("predictions and metrics byte-identical across runs" if ok else
              "runs diverged: predictions "
              + ("match" if first[0] == second[0] else "differ")
              + ", metrics " + ("match" if first[1] == second[1] else "differ"))
    line = _verdict(7, "pipeline determinism", ok, detail)
    assert ok, line


# --- criterion 8: semi-supervised training sanity ---

def _all_channel_sets(articles, embedder, descriptions, theta=0.15):
    out = {}
    for article in articles:
        rankings = rank_all_frames(article, descriptions, embedder)
        for frame in FRAMES:
            out[(article.id, frame)] = build_channels(
                article, rankings[frame], theta, embedder)
    return out


def test_criterion_8_semisup_sanity(planted_corpus):
    embedder = HashEmbedder(256)
    descriptions = frame_descriptions()
    label_sets = labels_to_sets(planted_corpus.labels)
    by_id = {a.id: a for a in planted_corpus.articles}
    fold = make_folds([a.id for a in planted_corpus.articles], k=5, seed=1042)[0]
    train_articles = [by_id[i] for i in fold.train_ids]
    test_articles = [by_id[i] for i in fold.test_ids]
    unlabeled_articles = generate_planted(100, seed=7, id_prefix="unl").articles

    train_sets = _all_channel_sets(train_articles, embedder, descriptions)
    pool_sets = _all_channel_sets(unlabeled_articles, embedder, descriptions)

    # half 1: zero unlabeled weight must reproduce supervised training bitwise
    frame = "CO"
    labeled = [(channel_features(train_sets[(a.id, frame)]),
                frame in label_sets[a.id]) for a in train_articles[:40]]
    pool = [channel_features(pool_sets[(a.id, frame)])
            for a in unlabeled_articles[:10]]
    cfg = TrainConfig()
    weights_off, bias_off = train_semisup(
        labeled, pool, SemiSupConfig(unlabeled_weight=0.0), cfg)
    X = np.stack([f for f, _ in labeled])
    y = np.array([float(l) for _, l in labeled])
    weights_sup, bias_sup = train_logistic(X, y, cfg)
    bitwise = np.array_equal(weights_off, weights_sup) and bias_off == bias_sup

    # half 2: with a planted unlabeled pool, semisup held-out F1 must
    # match or exceed supervised
    sup_models, semi_models = {}, {}
    for f in FRAMES:
        pairs = [(train_sets[(a.id, f)], f in label_sets[a.id])
                 for a in train_articles]
        balanced = balance_upsample(pairs, seed=1042)
        sup_models[f] = train_frame_model(balanced, TrainConfig(), f)
        labeled_f = [(channel_features(cs), lab) for cs, lab in balanced]
        pool_f = [channel_features(pool_sets[(a.id, f)]) for a in unlabeled_articles]
        weights, bias = train_semisup(labeled_f, pool_f, SemiSupConfig(), TrainConfig())
        semi_models[f] = FrameModel(frame=f, weights=weights, bias=bias,
                                    ablation=(), config={})

    gold = {a.id: label_sets[a.id] for a in test_articles}

    def score(models):
        sets = {}
        for article in test_articles:
            preds = predict_frames(article, models, descriptions, embedder, theta=0.15)
            sets[article.id] = frozenset(p.frame for p in preds if p.predicted)
        return evaluate(sets, gold).f1_mean

    sup_f1 = score(sup_models)
    semi_f1 = score(semi_models)
    improves = semi_f1 >= sup_f1

    ok = bitwise and improves
    detail = (f"zero-weight bitwise match: {'yes' if bitwise else 'NO'}; "
              f"held-out F1 semisup {semi_f1:.4f} vs supervised {sup_f1:.4f} "
              f"({'>=' if improves else '<'})")
    line = _verdict(8, "semi-supervised sanity", ok, detail)
    assert ok, line


# --- criterion 9: the suite stands alone on the mock embed service ---

def test_criterion_9_runs_without_sidecar(mock_server):
    import sys
    from pathlib import Path

    from nframe.server import protocol_violations

    violations = protocol_violations(mock_server.url, max_batch=16)
    package_dir = Path(__file__).resolve().parent.parent / "src" / "nframe"
    leaks = [p.name for p in sorted(package_dir.glob("*.py"))
             if "sidecar" in p.read_text(encoding="utf-8")]
    foreign = [name for name in sys.modules if "sidecar" in name]
    ok = not violations and not leaks and not foreign
    detail = ("mock service passes the embed protocol contract; no module "
              "references a sidecar" if ok else
              f"violations={violations} leaks={leaks} imported={foreign}")
    line = _verdict(9, "standalone with mock embedder", ok, detail)
    assert ok, line
