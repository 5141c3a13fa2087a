"""Minibatch Adam loop shared by every model in the package."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, ValidationError
from .nn import INIT_SCHEMES, adam_init, adam_step


@dataclass(frozen=True)
class TrainConfig:
    nu: float = 1.0
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 0.01
    seed: int = 0
    # soft-boundary variant only: network epochs between sphere updates
    sphere_update_every: int = 10
    init: str = "uniform"

    def __post_init__(self):
        if not self.nu > 0:
            raise ValidationError(f"nu must be > 0, got {self.nu}")
        for name in ("epochs", "batch_size", "sphere_update_every"):
            if int(getattr(self, name)) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if self.init not in INIT_SCHEMES:
            raise ValidationError(f"init must be one of {INIT_SCHEMES}, got {self.init!r}")

    def to_dict(self) -> dict:
        return asdict(self)


# (params, batch, batch_labels) -> ({"loss": ..., other terms}, grads)
LossFn = Callable[[dict, np.ndarray, "np.ndarray | None"], "tuple[dict[str, float], dict[str, np.ndarray]]"]


def check_labels(labels, n_rows: int, num_classes: int | None = None) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != n_rows:
        raise ValidationError(f"labels must be a vector of length {n_rows}, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(np.equal(np.mod(labels, 1), 0)):
            raise ValidationError("labels must be integers")
        labels = labels.astype(np.int64)
    if labels.size and labels.min() < 0:
        raise ValidationError("labels must be non-negative")
    if num_classes is not None and labels.size and labels.max() >= num_classes:
        raise ValidationError(f"label {labels.max()} out of range for {num_classes} classes")
    return labels


def fit_adam(params: dict[str, np.ndarray], loss_fn: LossFn, data: np.ndarray,
             labels: np.ndarray | None, cfg: TrainConfig,
             on_epoch_end: Callable[[int, dict], None] | None = None,
             ) -> tuple[dict[str, np.ndarray], list[dict]]:
    """Run ``cfg.epochs`` epochs of shuffled minibatch Adam.

    The history holds one dict per epoch with sample-weighted means of every
    term ``loss_fn`` reports.  Raises DivergenceError on a non-finite loss.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if n == 0:
        raise ValidationError("empty training set")
    rng = np.random.default_rng([cfg.seed, 2])
    state = adam_init(params, cfg.learning_rate)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        totals: dict[str, float] = {}
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            terms, grads = loss_fn(params, data[idx], None if labels is None else labels[idx])
            if not np.isfinite(terms["loss"]):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            params, state = adam_step(params, grads, state)
            for key, value in terms.items():
                totals[key] = totals.get(key, 0.0) + float(value) * len(idx)
        record = {"epoch": epoch}
        record.update({key: value / n for key, value in totals.items()})
        history.append(record)
        if on_epoch_end is not None:
            on_epoch_end(epoch, params)
    return params, history
