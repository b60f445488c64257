"""Soft-label sharpening, mixup, and semi-supervised training."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nframe import DataError
from nframe.rbf import TrainConfig, train_logistic
from nframe.semisup import SemiSupConfig, mixup, sharpen, train_semisup

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_sharpen_known_values():
    assert sharpen(0.5, 0.5) == pytest.approx(0.5)
    assert sharpen(1.0, 0.5) == 1.0
    assert sharpen(0.0, 0.5) == 0.0
    # T=0.5 squares the odds: 0.8 -> 0.64/(0.64+0.04)
    assert sharpen(0.8, 0.5) == pytest.approx(0.64 / 0.68)


def test_sharpen_temperature_one_is_identity():
    for p in (0.0, 0.2, 0.5, 0.9, 1.0):
        assert sharpen(p, 1.0) == pytest.approx(p)


@settings(max_examples=200, deadline=None)
@given(probs, st.floats(min_value=0.05, max_value=1.0))
def test_sharpen_moves_toward_extremes(p, t):
    q = sharpen(p, t)
    assert 0.0 <= q <= 1.0
    if p > 0.5:
        assert q >= p - 1e-12
    elif p < 0.5:
        assert q <= p + 1e-12


@settings(max_examples=100, deadline=None)
@given(probs, st.floats(min_value=0.05, max_value=1.0))
def test_sharpen_symmetric(p, t):
    assert sharpen(1.0 - p, t) == pytest.approx(1.0 - sharpen(p, t), abs=1e-9)


def test_sharpen_validates():
    with pytest.raises(DataError):
        sharpen(0.5, 0.0)
    with pytest.raises(DataError):
        sharpen(1.5, 0.5)


def test_mixup_anchors_first_argument():
    x1, y1 = np.array([1.0, 0.0]), 1.0
    x2, y2 = np.array([0.0, 1.0]), 0.0
    rng = np.random.default_rng(0)
    for _ in range(50):
        xm, ym = mixup(x1, y1, x2, y2, float(rng.beta(0.75, 0.75)))
        # effective lambda >= 0.5 keeps the mix closer to the first pair
        assert xm[0] >= xm[1]
        assert ym >= 0.5
        assert xm[0] + xm[1] == pytest.approx(1.0)


def test_mixup_low_raw_lambda_is_reflected():
    x1, x2 = np.array([2.0, 3.0]), np.array([-1.0, 5.0])
    a = mixup(x1, 1.0, x2, 0.0, 0.3)
    b = mixup(x1, 1.0, x2, 0.0, 0.7)
    assert np.allclose(a[0], b[0]) and a[1] == pytest.approx(b[1])


def test_mixup_lambda_one_returns_first():
    x1, x2 = np.array([2.0, 3.0]), np.array([-1.0, 5.0])
    xm, ym = mixup(x1, 1.0, x2, 0.0, 1.0)
    assert np.array_equal(xm, x1) and ym == 1.0


def test_mixup_dim_mismatch():
    with pytest.raises(DataError):
        mixup(np.ones(3), 1.0, np.ones(4), 0.0, 0.5)


def test_config_validation():
    with pytest.raises(DataError):
        SemiSupConfig(temperature=0.0)
    with pytest.raises(DataError):
        SemiSupConfig(beta_alpha=-1.0)
    with pytest.raises(DataError):
        SemiSupConfig(unlabeled_weight=-0.1)
    with pytest.raises(DataError):
        SemiSupConfig(unlabeled_ratio=0)


def _toy_data(seed=0, n=40, d=8):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-1.5, 1.0, size=(n // 2, d)),
                   rng.normal(1.5, 1.0, size=(n // 2, d))])
    y = np.array([False] * (n // 2) + [True] * (n // 2))
    labeled = [(X[i], bool(y[i])) for i in range(n)]
    unlabeled = [rng.normal(0.0, 1.5, size=d) for _ in range(n)]
    return labeled, unlabeled


def test_zero_unlabeled_weight_is_bitwise_supervised():
    labeled, unlabeled = _toy_data()
    cfg = SemiSupConfig(unlabeled_weight=0.0)
    train_cfg = TrainConfig(epochs=5)
    w_semi, b_semi = train_semisup(labeled, unlabeled, cfg, train_cfg)
    X = np.stack([x for x, _ in labeled])
    y = np.array([float(t) for _, t in labeled])
    w_sup, b_sup = train_logistic(X, y, train_cfg)
    assert np.array_equal(w_semi, w_sup)
    assert b_semi == b_sup


def test_train_semisup_deterministic():
    labeled, unlabeled = _toy_data()
    cfg = SemiSupConfig()
    out1 = train_semisup(labeled, unlabeled, cfg, TrainConfig(epochs=5))
    out2 = train_semisup(labeled, unlabeled, cfg, TrainConfig(epochs=5))
    assert np.array_equal(out1[0], out2[0]) and out1[1] == out2[1]


def test_train_semisup_learns_separable_data():
    labeled, unlabeled = _toy_data(seed=3)
    w, b = train_semisup(labeled, unlabeled, SemiSupConfig(),
                         TrainConfig(epochs=20))
    X = np.stack([x for x, _ in labeled])
    y = np.array([t for _, t in labeled])
    acc = (((X @ w + b) >= 0) == y).mean()
    assert acc >= 0.9


def test_train_semisup_single_class_is_error():
    labeled = [(np.ones(4), True), (np.zeros(4), True)]
    with pytest.raises(DataError, match="both classes"):
        train_semisup(labeled, [np.ones(4)], SemiSupConfig(), TrainConfig())


def test_train_semisup_needs_unlabeled_pool():
    labeled, _ = _toy_data()
    with pytest.raises(DataError, match="unlabeled"):
        train_semisup(labeled, [], SemiSupConfig(), TrainConfig(epochs=5))


def test_train_semisup_dim_mismatch():
    labeled, _ = _toy_data(d=8)
    with pytest.raises(DataError, match="dim"):
        train_semisup(labeled, [np.ones(5)], SemiSupConfig(), TrainConfig())
