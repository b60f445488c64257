"""Semi-supervised training for the linear frame head.

MixMatch-style: the current model soft-labels the unlabeled pool, the
soft labels are sharpened, and each step trains on mixup-interpolated
batches, with cross-entropy on labeled-origin rows plus a weighted
squared-error term on unlabeled-origin rows.  Augmentation is
deliberately absent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .rbf import TrainConfig, _sigmoid, train_logistic


@dataclass(frozen=True)
class SoftLabel:
    article_id: str
    frame: str
    p: float

    def __post_init__(self):
        if not np.isfinite(self.p) or not 0.0 <= self.p <= 1.0:
            raise DataError(f"soft label p={self.p!r} outside [0, 1]")


@dataclass(frozen=True)
class SemiSupConfig:
    temperature: float = 0.5
    beta_alpha: float = 0.75
    unlabeled_weight: float = 0.5
    unlabeled_ratio: int = 1

    def __post_init__(self):
        if self.temperature <= 0:
            raise DataError("temperature must be positive")
        if self.beta_alpha <= 0:
            raise DataError("beta_alpha must be positive")
        if self.unlabeled_weight < 0:
            raise DataError("unlabeled_weight must be non-negative")
        if self.unlabeled_ratio < 1:
            raise DataError("unlabeled_ratio must be >= 1")


def sharpen(p: float, temperature: float) -> float:
    """p^(1/T) / (p^(1/T) + (1-p)^(1/T)); T=1 is the identity and
    T -> 0 pushes everything but 0.5 toward a hard label."""
    if temperature <= 0:
        raise DataError("temperature must be positive")
    if not 0.0 <= p <= 1.0:
        raise DataError(f"p={p!r} outside [0, 1]")
    a = p ** (1.0 / temperature)
    b = (1.0 - p) ** (1.0 / temperature)
    if a + b == 0.0:
        return 0.5
    return a / (a + b)


def mixup(x1: np.ndarray, y1: float, x2: np.ndarray, y2: float,
          lambda_raw: float) -> tuple[np.ndarray, float]:
    """Interpolate toward the first sample: lambda = max(raw, 1-raw),
    so the output never sits closer to (x2, y2)."""
    if x1.shape != x2.shape:
        raise DataError(f"mixup shape mismatch: {x1.shape} vs {x2.shape}")
    lam = max(lambda_raw, 1.0 - lambda_raw)
    return lam * x1 + (1.0 - lam) * x2, lam * y1 + (1.0 - lam) * y2


def _mixup_rows(X1, y1, X2, y2, lam_raw):
    lam = np.maximum(lam_raw, 1.0 - lam_raw)[:, None]
    return lam * X1 + (1.0 - lam) * X2, lam[:, 0] * y1 + (1.0 - lam[:, 0]) * y2


def train_semisup(labeled, unlabeled, cfg: SemiSupConfig,
                  train_cfg: TrainConfig | None = None) -> tuple[np.ndarray, float]:
    """Fit (weights, bias) from labeled (features, bool) pairs plus an
    unlabeled feature pool.

    Batches take batch_size labeled rows and unlabeled_ratio *
    batch_size unlabeled rows; the unlabeled rows are scored with the
    current weights and those probabilities sharpened, then both halves
    are mixed (mixup) against a shuffled copy of the combined batch.
    One gradient step minimizes mean cross-entropy on labeled-origin
    rows + unlabeled_weight * mean squared error on unlabeled-origin
    rows.

    With unlabeled_weight = 0 the unlabeled term vanishes, so training
    collapses to the plain supervised routine on the labeled pairs and
    returns its weights unchanged (same seed, same batch schedule).
    """
    train_cfg = train_cfg if train_cfg is not None else TrainConfig()
    pairs = list(labeled)
    if not pairs:
        raise DataError("empty labeled set")
    X = np.stack([np.asarray(x, dtype=np.float64) for x, _ in pairs])
    y = np.array([float(label) for _, label in pairs])
    if len(set(y.tolist())) < 2:
        raise DataError("labeled set must contain both classes")

    if cfg.unlabeled_weight == 0.0:
        return train_logistic(X, y, train_cfg)

    pool = list(unlabeled)
    if not pool:
        raise DataError("semi-supervised training needs unlabeled features")
    U = np.stack([np.asarray(x, dtype=np.float64) for x in pool])
    if U.shape[1] != X.shape[1]:
        raise DataError(f"feature dim mismatch: labeled {X.shape[1]}, unlabeled {U.shape[1]}")

    weights = np.zeros(X.shape[1], dtype=np.float64)
    bias = 0.0
    rng = np.random.default_rng(train_cfg.seed)
    inv_t = 1.0 / cfg.temperature
    n, m = len(y), U.shape[0]
    per_batch_u = train_cfg.batch_size * cfg.unlabeled_ratio
    for _ in range(train_cfg.epochs):
        order_l = rng.permutation(n)
        order_u = rng.permutation(m)
        u_cursor = 0
        for start in range(0, n, train_cfg.batch_size):
            lb = order_l[start:start + train_cfg.batch_size]
            take = min(per_batch_u, m)
            if u_cursor + take > m:
                order_u = rng.permutation(m)
                u_cursor = 0
            ub = order_u[u_cursor:u_cursor + take]
            u_cursor += take

            Xl, yl = X[lb], y[lb]
            Xu = U[ub]
            pu_guess = _sigmoid(Xu @ weights + bias)
            a = pu_guess ** inv_t
            denom = a + (1.0 - pu_guess) ** inv_t
            # denom can underflow to 0 only at extreme temperatures
            qu = np.full_like(pu_guess, 0.5)
            np.divide(a, denom, out=qu, where=denom > 0)
            Xw = np.concatenate([Xl, Xu])
            yw = np.concatenate([yl, qu])
            partner = rng.permutation(len(yw))
            lam = rng.beta(cfg.beta_alpha, cfg.beta_alpha, size=len(yw))
            Xm, ym = _mixup_rows(Xw, yw, Xw[partner], yw[partner], lam)

            k = len(lb)
            zl = Xm[:k] @ weights + bias
            pl = _sigmoid(zl)
            grad_w = Xm[:k].T @ (pl - ym[:k]) / k
            grad_b = float((pl - ym[:k]).mean())
            zu = Xm[k:] @ weights + bias
            pu = _sigmoid(zu)
            coeff = 2.0 * (pu - ym[k:]) * pu * (1.0 - pu)
            grad_w = grad_w + cfg.unlabeled_weight * (Xm[k:].T @ coeff) / len(coeff)
            grad_b = grad_b + cfg.unlabeled_weight * float(coeff.mean())

            weights = weights - train_cfg.lr * grad_w
            bias = bias - train_cfg.lr * grad_b
    return weights, bias
