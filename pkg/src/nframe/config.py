"""Run configuration: defaults, TOML file loading, flag overrides, and
a stable digest embedded in every output artifact."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .baselines import K_GRID_DEFAULT
from .embedding import EmbedderConfig
from .errors import DataError
from .rbf import THETA_DEFAULT, TrainConfig
from .semisup import SemiSupConfig

_TOP_KEYS = {
    "seed", "theta", "epochs", "lr", "batch_size", "descriptions",
    "k_grid", "folds", "min_count", "balance_all",
}
_EMBEDDER_KEYS = {
    "kind", "dim", "url", "timeout", "batch_size", "max_in_flight",
    "max_attempts", "backoff", "normalize",
}
_SEMISUP_KEYS = {"temperature", "beta_alpha", "unlabeled_weight", "unlabeled_ratio"}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1042
    theta: float = THETA_DEFAULT
    epochs: int = 20
    lr: float = 0.01
    batch_size: int = 8
    descriptions: str = "default"
    k_grid: tuple[int, ...] = K_GRID_DEFAULT
    folds: int = 5
    min_count: int = 3
    balance_all: bool = False
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    semisup: SemiSupConfig = field(default_factory=SemiSupConfig)

    def __post_init__(self):
        if self.folds < 1:
            raise DataError("folds must be >= 1")
        if not self.k_grid or any(k < 1 for k in self.k_grid):
            raise DataError("k_grid must contain positive integers")

    def train_config(self, ablation: tuple[int, ...] = ()) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, lr=self.lr, batch_size=self.batch_size,
            seed=self.seed, ablation=ablation,
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "theta": self.theta,
            "epochs": self.epochs,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "descriptions": self.descriptions,
            "k_grid": list(self.k_grid),
            "folds": self.folds,
            "min_count": self.min_count,
            "balance_all": self.balance_all,
            "embedder": {
                "kind": self.embedder.kind,
                "dim": self.embedder.dim,
                "url": self.embedder.url,
                "timeout": self.embedder.timeout,
                "batch_size": self.embedder.batch_size,
                "max_in_flight": self.embedder.max_in_flight,
                "max_attempts": self.embedder.max_attempts,
                "backoff": self.embedder.backoff,
                "normalize": self.embedder.normalize,
            },
            "semisup": {
                "temperature": self.semisup.temperature,
                "beta_alpha": self.semisup.beta_alpha,
                "unlabeled_weight": self.semisup.unlabeled_weight,
                "unlabeled_ratio": self.semisup.unlabeled_ratio,
            },
        }

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _check_keys(mapping: dict, allowed: set, where: str):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise DataError(f"unknown config key(s) in {where}: {', '.join(unknown)}")


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _from_mapping(mapping: dict) -> RunConfig:
    top = {k: v for k, v in mapping.items() if k not in ("embedder", "semisup")}
    _check_keys(top, _TOP_KEYS, "config")
    embedder_map = dict(mapping.get("embedder", {}))
    _check_keys(embedder_map, _EMBEDDER_KEYS, "[embedder]")
    semisup_map = dict(mapping.get("semisup", {}))
    _check_keys(semisup_map, _SEMISUP_KEYS, "[semisup]")
    try:
        if "k_grid" in top:
            top["k_grid"] = tuple(int(k) for k in top["k_grid"])
        return RunConfig(
            **top,
            embedder=EmbedderConfig(**embedder_map),
            semisup=SemiSupConfig(**semisup_map),
        )
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid config value ({exc})") from None


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Resolve the effective config: defaults, then the TOML file, then
    explicit overrides (flat keys, 'embedder.kind' style dotting)."""
    mapping: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read config file {path}: {exc}") from None
        try:
            mapping = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise DataError(f"{path}: invalid TOML ({exc})") from None
    if overrides:
        nested: dict = {}
        for key, value in overrides.items():
            if value is None:
                continue
            parts = key.split(".")
            target = nested
            for part in parts[:-1]:
                target = target.setdefault(part, {})
            target[parts[-1]] = value
        mapping = _merge(mapping, nested)
    return _from_mapping(mapping)
