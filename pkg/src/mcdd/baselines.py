"""Comparison detectors built on the same dense feature extractor.

* softmax classifier scored by maximum softmax probability (MSP)
* tied-covariance Mahalanobis distance on the softmax network's latents
* Deep-SVDD: one hypersphere around all training data, labels ignored
* Euclidean nearest-center classifier (ProtoNet / Deep-NCM style surrogate)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from .errors import NumericError, ValidationError
from .head import squared_distances
from .nn import MLPParams, embed, init_params, mlp_backward, mlp_forward
from .training import TrainConfig, check_labels, fit_adam


def _check_arch(arch, data):
    arch = list(arch)
    if arch[0] != data.shape[1]:
        raise ValidationError(f"arch input width {arch[0]} != data width {data.shape[1]}")
    return arch


def _num_classes(labels, num_classes):
    return int(num_classes if num_classes is not None else labels.max() + 1)


def _cross_entropy(logits, labels):
    n = logits.shape[0]
    probs = softmax(logits, axis=1)
    loss = -log_softmax(logits, axis=1)[np.arange(n), labels].mean()
    d_logits = probs
    d_logits[np.arange(n), labels] -= 1.0
    return float(loss), d_logits / n


def _strip(params, prefix):
    return {k[len(prefix):]: v for k, v in params.items() if k.startswith(prefix)}


# --------------------------------------------------------------------------
# softmax classifier + MSP

@dataclass
class SoftmaxHeadParams:
    weights: np.ndarray  # (K, d)
    biases: np.ndarray  # (K,)


def softmax_logits(latent, head: SoftmaxHeadParams) -> np.ndarray:
    return np.asarray(latent, dtype=np.float64) @ head.weights.T + head.biases


def init_softmax_head(num_classes: int, latent_dim: int, seed: int) -> SoftmaxHeadParams:
    """Weights ~ N(0, 1/d), zero biases."""
    rng = np.random.default_rng([seed, 1])
    return SoftmaxHeadParams(rng.normal(0.0, np.sqrt(1.0 / latent_dim), size=(num_classes, latent_dim)),
                             np.zeros(num_classes))


def train_softmax(data, labels, arch, cfg: TrainConfig, num_classes=None,
                  head: SoftmaxHeadParams | None = None):
    """Cross-entropy training of extractor + linear head.  ``head`` overrides
    the seeded head initialization."""
    data = np.asarray(data, dtype=np.float64)
    labels = check_labels(labels, data.shape[0], num_classes)
    arch = _check_arch(arch, data)
    k = _num_classes(labels, num_classes)
    mlp = init_params(arch, cfg.seed, scheme=cfg.init)
    head = head if head is not None else init_softmax_head(k, arch[-1], cfg.seed)
    if head.weights.shape != (k, arch[-1]) or head.biases.shape != (k,):
        raise ValidationError(f"head shapes {head.weights.shape}, {head.biases.shape} do not fit {k} classes")
    params = {
        **mlp.as_dict("mlp."),
        "head.weights": np.array(head.weights, dtype=np.float64),
        "head.biases": np.array(head.biases, dtype=np.float64),
    }

    def loss_fn(p, xb, yb):
        net = MLPParams.from_dict(_strip(p, "mlp."))
        latent, cache = mlp_forward(net, xb)
        w, b = p["head.weights"], p["head.biases"]
        loss, d_logits = _cross_entropy(latent @ w.T + b, yb)
        grads = mlp_backward(net, cache, d_logits @ w).as_dict("mlp.")
        grads["head.weights"] = d_logits.T @ latent
        grads["head.biases"] = d_logits.sum(axis=0)
        return {"loss": loss}, grads

    params, history = fit_adam(params, loss_fn, data, labels, cfg)
    head = SoftmaxHeadParams(params["head.weights"], params["head.biases"])
    return MLPParams.from_dict(_strip(params, "mlp.")), head, history


def msp_score(latent, head: SoftmaxHeadParams) -> np.ndarray:
    """Maximum softmax probability per row, in (0, 1]."""
    return softmax(softmax_logits(latent, head), axis=1).max(axis=1)


def softmax_predict(latent, head: SoftmaxHeadParams) -> np.ndarray:
    return np.argmax(softmax_logits(latent, head), axis=1)


# --------------------------------------------------------------------------
# Mahalanobis

@dataclass
class MahalanobisStats:
    class_means: np.ndarray  # (K, d)
    tied_covariance: np.ndarray  # (d, d)
    precision: np.ndarray  # (d, d), inverse of the ridged covariance


def fit_mahalanobis(latent, labels, num_classes=None) -> MahalanobisStats:
    """Class means and the pooled (tied) covariance, divisor N.

    The covariance gets a ridge of ``1e-6 * trace / d`` before inversion.
    """
    latent = np.asarray(latent, dtype=np.float64)
    labels = check_labels(labels, latent.shape[0], num_classes)
    k = _num_classes(labels, num_classes)
    n, d = latent.shape
    means = np.empty((k, d))
    centered = np.empty_like(latent)
    for c in range(k):
        mask = labels == c
        if mask.sum() < 2:
            raise ValidationError(f"class {c} needs at least 2 samples")
        means[c] = latent[mask].mean(axis=0)
        centered[mask] = latent[mask] - means[c]
    cov = centered.T @ centered / n
    cov = 0.5 * (cov + cov.T)
    ridge = 1e-6 * np.trace(cov) / d
    if not ridge > 0:
        # fully degenerate latents: fall back to a unit-scale ridge
        ridge = 1e-6
    try:
        precision = np.linalg.inv(cov + ridge * np.eye(d))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"covariance is singular after ridge {ridge:g}") from exc
    precision = 0.5 * (precision + precision.T)
    return MahalanobisStats(means, cov, precision)


def mahalanobis_distances(latent, stats: MahalanobisStats) -> np.ndarray:
    latent = np.asarray(latent, dtype=np.float64)
    out = np.empty((latent.shape[0], stats.class_means.shape[0]))
    for c, mu in enumerate(stats.class_means):
        diff = latent - mu
        out[:, c] = np.einsum("nd,de,ne->n", diff, stats.precision, diff)
    return out


def mahalanobis_score(latent, stats: MahalanobisStats) -> np.ndarray:
    return -mahalanobis_distances(latent, stats).min(axis=1)


def mahalanobis_predict(latent, stats: MahalanobisStats) -> np.ndarray:
    return mahalanobis_distances(latent, stats).argmin(axis=1)


# --------------------------------------------------------------------------
# Deep-SVDD

@dataclass
class SVDDParams:
    center: np.ndarray  # (d,)


def svdd_center(latent, eps: float = 0.0) -> np.ndarray:
    """Mean latent.  With ``eps > 0``, coordinates closer than eps to zero are
    pushed out to +-eps."""
    c = np.asarray(latent, dtype=np.float64).mean(axis=0)
    if eps <= 0:
        return c
    small = np.abs(c) < eps
    c[small & (c < 0)] = -eps
    c[small & (c >= 0)] = eps
    return c


def svdd_loss(latent, center) -> float:
    return float(((np.asarray(latent) - center) ** 2).sum(axis=1).mean())


def train_deep_svdd(data, arch, cfg: TrainConfig):
    """One-class Deep-SVDD: bias-free network, center frozen after the first
    forward pass, Adam on the mean squared distance to the center."""
    data = np.asarray(data, dtype=np.float64)
    arch = _check_arch(arch, data)
    mlp = init_params(arch, cfg.seed, bias=False, scheme=cfg.init)
    center = svdd_center(embed(mlp, data))

    def loss_fn(p, xb, _):
        net = MLPParams.from_dict(p)
        latent, cache = mlp_forward(net, xb)
        diff = latent - center
        loss = float((diff ** 2).sum(axis=1).mean())
        return {"loss": loss}, mlp_backward(net, cache, 2.0 * diff / xb.shape[0]).as_dict()

    params, history = fit_adam(mlp.as_dict(), loss_fn, data, None, cfg)
    return MLPParams.from_dict(params), SVDDParams(center), history


def svdd_score(latent, center) -> np.ndarray:
    return -((np.asarray(latent, dtype=np.float64) - center) ** 2).sum(axis=1)


# --------------------------------------------------------------------------
# Euclidean nearest-center classifier

def train_euclid_classifier(data, labels, arch, cfg: TrainConfig, num_classes=None):
    """Extractor and class centers trained jointly by cross-entropy over the
    logits ``-||f(x) - c_k||^2``."""
    data = np.asarray(data, dtype=np.float64)
    labels = check_labels(labels, data.shape[0], num_classes)
    arch = _check_arch(arch, data)
    k = _num_classes(labels, num_classes)
    mlp = init_params(arch, cfg.seed, scheme=cfg.init)
    rng = np.random.default_rng([cfg.seed, 1])
    params = {**mlp.as_dict("mlp."), "centers": rng.normal(0.0, 0.1, size=(k, arch[-1]))}

    def loss_fn(p, xb, yb):
        net = MLPParams.from_dict(_strip(p, "mlp."))
        latent, cache = mlp_forward(net, xb)
        centers = p["centers"]
        loss, d_logits = _cross_entropy(-squared_distances(latent, centers), yb)
        # logits_ik = -||f_i - c_k||^2
        d_latent = -2.0 * (latent * d_logits.sum(axis=1, keepdims=True) - d_logits @ centers)
        grads = mlp_backward(net, cache, d_latent).as_dict("mlp.")
        grads["centers"] = -2.0 * (centers * d_logits.sum(axis=0)[:, None] - d_logits.T @ latent)
        return {"loss": loss}, grads

    params, history = fit_adam(params, loss_fn, data, labels, cfg)
    return MLPParams.from_dict(_strip(params, "mlp.")), params["centers"], history


def euclid_score(latent, centers) -> np.ndarray:
    return -squared_distances(latent, centers).min(axis=1)


def euclid_predict(latent, centers) -> np.ndarray:
    return squared_distances(latent, centers).argmin(axis=1)
