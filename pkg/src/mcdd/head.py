"""Distance-metric head: one isotropic Gaussian per class in latent space.

For class k with mean ``mu_k``, raw log-scale ``s_k`` and bias ``b_k``::

    log_sigma_k = max(0, s_k)
    D_k(x)      = ||f(x) - mu_k||^2 / (2 sigma_k^2) + d * log_sigma_k

The class-independent Gaussian constant is dropped.  Classification is
``argmax_k(-D_k + b_k)`` and the OOD confidence score is ``-min_k D_k``.
The training objective averages, per sample, the distance to the sample's
own class plus ``1/nu`` times the negative log posterior
``-log softmax(-D + b)[y]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import log_softmax, softmax

from .errors import NumericError, ValidationError
from .nn import MLPParams, embed, init_params, mlp_backward, mlp_forward
from .training import TrainConfig, check_labels, fit_adam


@dataclass
class DMLayerParams:
    means: np.ndarray  # (K, d)
    raw_log_sigma: np.ndarray  # (K,)
    biases: np.ndarray  # (K,)

    @property
    def num_classes(self) -> int:
        return self.means.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.means.shape[1]

    @property
    def log_sigma(self) -> np.ndarray:
        return np.maximum(self.raw_log_sigma, 0.0)

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma)

    def as_dict(self, prefix: str = "") -> dict[str, np.ndarray]:
        return {
            f"{prefix}means": self.means,
            f"{prefix}raw_log_sigma": self.raw_log_sigma,
            f"{prefix}biases": self.biases,
        }

    @classmethod
    def from_dict(cls, arrays: dict[str, np.ndarray], prefix: str = "") -> "DMLayerParams":
        return cls(arrays[f"{prefix}means"], arrays[f"{prefix}raw_log_sigma"], arrays[f"{prefix}biases"])


def init_head(num_classes: int, latent_dim: int, seed: int, mean_std: float = 0.1) -> DMLayerParams:
    """Means ~ N(0, mean_std^2), unit sigmas (s = 0), zero biases."""
    if num_classes < 1 or latent_dim < 1:
        raise ValidationError("num_classes and latent_dim must be positive")
    rng = np.random.default_rng([seed, 1])
    return DMLayerParams(
        means=rng.normal(0.0, mean_std, size=(num_classes, latent_dim)),
        raw_log_sigma=np.zeros(num_classes),
        biases=np.zeros(num_classes),
    )


def squared_distances(latent: np.ndarray, centers: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """``out[i, k] = ||latent[i] - centers[k]||^2`` from explicit differences."""
    latent = np.asarray(latent, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if latent.ndim != 2 or centers.ndim != 2 or latent.shape[1] != centers.shape[1]:
        raise ValidationError(f"latent {latent.shape} and centers {centers.shape} disagree")
    out = np.empty((latent.shape[0], centers.shape[0]))
    for start in range(0, latent.shape[0], chunk):
        diff = latent[start:start + chunk, None, :] - centers[None, :, :]
        out[start:start + chunk] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def compute_distances(latent: np.ndarray, head: DMLayerParams) -> np.ndarray:
    latent = np.asarray(latent, dtype=np.float64)
    if latent.ndim != 2 or latent.shape[1] != head.latent_dim:
        raise ValidationError(f"latent shape {latent.shape} does not match head dim {head.latent_dim}")
    if not np.all(np.isfinite(latent)):
        raise NumericError("non-finite latent vectors")
    log_sigma = head.log_sigma
    inv_two_var = 0.5 * np.exp(-2.0 * log_sigma)
    return squared_distances(latent, head.means) * inv_two_var + head.latent_dim * log_sigma


class LossTerms(NamedTuple):
    total: float
    pull_in: float  # mean D_{y_i}; the KL term up to a constant
    posterior: float  # mean negative log posterior of the true class


def _check_head_labels(dist: np.ndarray, head: DMLayerParams, labels) -> np.ndarray:
    if dist.ndim != 2 or dist.shape[1] != head.num_classes:
        raise ValidationError(f"distance matrix {dist.shape} does not match {head.num_classes} classes")
    return check_labels(labels, dist.shape[0], head.num_classes)


def mcdd_loss(dist: np.ndarray, head: DMLayerParams, labels, nu: float) -> LossTerms:
    """Deep-MCDD objective on precomputed distances, with its two addends."""
    labels = _check_head_labels(dist, head, labels)
    if not nu > 0:
        raise ValidationError("nu must be > 0")
    rows = np.arange(dist.shape[0])
    pull_in = float(dist[rows, labels].mean())
    posterior = float(-log_softmax(-dist + head.biases, axis=1)[rows, labels].mean())
    return LossTerms(pull_in + posterior / nu, pull_in, posterior)


def gda_posterior(dist: np.ndarray, head: DMLayerParams) -> np.ndarray:
    """Class posterior ``softmax(-D + b)`` of the generative classifier."""
    return softmax(-dist + head.biases, axis=1)


def _loss_and_grads(latent, head: DMLayerParams, labels, nu):
    dist = compute_distances(latent, head)
    terms = mcdd_loss(dist, head, labels, nu)
    n, k = dist.shape
    rows = np.arange(n)
    onehot = np.zeros((n, k))
    onehot[rows, labels] = 1.0
    post = gda_posterior(dist, head)

    # dL/dD and dL/db
    g_dist = (onehot + (onehot - post) / nu) / n
    d_bias = ((post - onehot) / nu).sum(axis=0) / n

    inv_var = np.exp(-2.0 * head.log_sigma)  # 1 / sigma_k^2
    weighted = g_dist * inv_var  # (n, k)
    d_latent = latent * weighted.sum(axis=1, keepdims=True) - weighted @ head.means
    d_means = head.means * weighted.sum(axis=0)[:, None] - weighted.T @ latent
    sq = squared_distances(latent, head.means)
    d_log_sigma = (g_dist * (head.latent_dim - sq * inv_var)).sum(axis=0)
    # gradient passes the max(0, s) clamp for s >= 0 so that s = 0 can move
    d_raw = d_log_sigma * (head.raw_log_sigma >= 0)
    grads = DMLayerParams(d_means, d_raw, d_bias)
    return terms, d_latent, grads


def mcdd_backward(latent, head: DMLayerParams, labels, nu: float) -> tuple[np.ndarray, DMLayerParams]:
    """Exact gradients of ``mcdd_loss`` w.r.t. the latent rows and head parameters."""
    latent = np.asarray(latent, dtype=np.float64)
    _, d_latent, grads = _loss_and_grads(latent, head, labels, nu)
    return d_latent, grads


def predict_class(dist: np.ndarray, head: DMLayerParams) -> np.ndarray:
    """``argmax_k(-D_k + b_k)``; ties go to the lowest class index."""
    if dist.ndim != 2 or dist.shape[1] != head.num_classes:
        raise ValidationError(f"distance matrix {dist.shape} does not match {head.num_classes} classes")
    return np.argmax(-dist + head.biases, axis=1)


def confidence_score(dist: np.ndarray) -> np.ndarray:
    """Negative distance to the closest class; higher means more in-distribution."""
    return -np.min(dist, axis=1)


def _split(params: dict) -> tuple[MLPParams, DMLayerParams]:
    mlp = MLPParams.from_dict({k[4:]: v for k, v in params.items() if k.startswith("mlp.")})
    head = DMLayerParams.from_dict({k[5:]: v for k, v in params.items() if k.startswith("head.")})
    return mlp, head


def _join(mlp: MLPParams, head: DMLayerParams) -> dict[str, np.ndarray]:
    return {**mlp.as_dict("mlp."), **head.as_dict("head.")}


def mcdd_objective_grads(params: dict, batch: np.ndarray, labels: np.ndarray, nu: float):
    """Loss terms and gradients for every trainable of network + head."""
    mlp, head = _split(params)
    latent, cache = mlp_forward(mlp, batch)
    terms, d_latent, head_grads = _loss_and_grads(latent, head, labels, nu)
    mlp_grads = mlp_backward(mlp, cache, d_latent)
    report = {"loss": terms.total, "pull_in": terms.pull_in, "posterior": terms.posterior}
    return report, _join(mlp_grads, head_grads)


def train_mcdd(data, labels, arch, cfg: TrainConfig, num_classes: int | None = None):
    """Train a Deep-MCDD network on standardized features.

    ``arch`` lists layer widths from input to latent, e.g. ``[p, 128, 128, 128]``.
    Returns ``(mlp_params, head_params, history)``; history has one entry
    per epoch with the mean loss and its two addends.
    """
    data = np.asarray(data, dtype=np.float64)
    labels = check_labels(labels, data.shape[0], num_classes)
    k = int(num_classes if num_classes is not None else labels.max() + 1)
    arch = list(arch)
    if arch[0] != data.shape[1]:
        raise ValidationError(f"arch input width {arch[0]} != data width {data.shape[1]}")
    mlp = init_params(arch, cfg.seed, scheme=cfg.init)
    head = init_head(k, arch[-1], cfg.seed)

    def loss_fn(params, xb, yb):
        return mcdd_objective_grads(params, xb, yb, cfg.nu)

    params, history = fit_adam(_join(mlp, head), loss_fn, data, labels, cfg)
    mlp, head = _split(params)
    return mlp, head, history


def mcdd_scores(mlp: MLPParams, head: DMLayerParams, data) -> tuple[np.ndarray, np.ndarray]:
    """Predicted labels and confidence scores for raw (standardized) inputs."""
    dist = compute_distances(embed(mlp, data), head)
    return predict_class(dist, head), confidence_score(dist)
