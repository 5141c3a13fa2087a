"""Soft-boundary multi-class data description with K hyperspheres.

Objective for centers ``c_k`` and radii ``R_k``::

    sum_k [ R_k^2 + 1/(nu N) sum_i max(0, a_ik (||f(x_i) - c_k||^2 - R_k^2)) ]

with ``a_ik = +1`` when sample i has label k and ``-1`` otherwise: a sample
is penalized for leaving its own sphere and for entering any other one.
Training alternates network epochs (spheres frozen) with closed-form
sphere updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .head import squared_distances
from .nn import MLPParams, embed, init_params, mlp_backward, mlp_forward
from .training import TrainConfig, check_labels, fit_adam


@dataclass
class SphereParams:
    centers: np.ndarray  # (K, d)
    radii: np.ndarray  # (K,)

    @property
    def num_classes(self) -> int:
        return self.centers.shape[0]


def assignment_signs(labels: np.ndarray, num_classes: int) -> np.ndarray:
    signs = -np.ones((labels.shape[0], num_classes))
    signs[np.arange(labels.shape[0]), labels] = 1.0
    return signs


def _check_nu(nu: float) -> None:
    if not 0 < nu <= 1:
        raise ValidationError(f"nu must lie in (0, 1] for the soft-boundary objective, got {nu}")


def _margins(latent, labels, spheres: SphereParams):
    """Signed hinge arguments ``a_ik (||f_i - c_k||^2 - R_k^2)``."""
    latent = np.asarray(latent, dtype=np.float64)
    labels = check_labels(labels, latent.shape[0], spheres.num_classes)
    sq = squared_distances(latent, spheres.centers)
    signs = assignment_signs(labels, spheres.num_classes)
    return signs * (sq - spheres.radii ** 2), signs


def soft_boundary_loss(latent, labels, spheres: SphereParams, nu: float) -> float:
    _check_nu(nu)
    margins, _ = _margins(latent, labels, spheres)
    n = margins.shape[0]
    return float(np.sum(spheres.radii ** 2) + np.maximum(margins, 0.0).sum() / (nu * n))


def hinge_violations(latent, labels, spheres: SphereParams) -> int:
    """Number of (sample, class) pairs with an active hinge."""
    margins, _ = _margins(latent, labels, spheres)
    return int(np.count_nonzero(margins > 0))


def nearest_rank_quantile(values: np.ndarray, q: float) -> float:
    """Smallest value v such that at least a fraction q of ``values`` are <= v.

    ``q = 0`` returns the minimum.  The rank is ``ceil(q * n)`` (at least 1);
    ``q * n`` is rounded to 12 significant digits first so that products such
    as ``0.9 * 100`` land on the intended integer.
    """
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    n = ordered.size
    if n == 0:
        raise ValidationError("quantile of an empty set")
    rank = math.ceil(float(f"{q * n:.12g}"))
    return float(ordered[min(max(rank, 1), n) - 1])


def update_spheres(latent, labels, nu: float, num_classes: int | None = None) -> SphereParams:
    """Centers at class means; radius at the (1 - nu) nearest-rank quantile of
    the class's distances to its center."""
    _check_nu(nu)
    latent = np.asarray(latent, dtype=np.float64)
    labels = check_labels(labels, latent.shape[0], num_classes)
    k = int(num_classes if num_classes is not None else labels.max() + 1)
    centers = np.empty((k, latent.shape[1]))
    radii = np.empty(k)
    for c in range(k):
        members = latent[labels == c]
        if members.shape[0] == 0:
            raise ValidationError(f"class {c} has no samples")
        centers[c] = members.mean(axis=0)
        dists = np.sqrt(((members - centers[c]) ** 2).sum(axis=1))
        radii[c] = nearest_rank_quantile(dists, 1.0 - nu)
    return SphereParams(centers, radii)


def _network_loss_and_grads(params, batch, labels, spheres: SphereParams, nu: float):
    mlp = MLPParams.from_dict(params)
    latent, cache = mlp_forward(mlp, batch)
    margins, signs = _margins(latent, labels, spheres)
    n = latent.shape[0]
    active = (margins > 0) * signs  # hinge subgradient 0 at the kink
    loss = np.sum(spheres.radii ** 2) + np.maximum(margins, 0.0).sum() / (nu * n)
    # d/df of a_ik ||f - c_k||^2 = 2 a_ik (f - c_k)
    weight = 2.0 * active / (nu * n)
    d_latent = latent * weight.sum(axis=1, keepdims=True) - weight @ spheres.centers
    grads = mlp_backward(mlp, cache, d_latent).as_dict()
    return {"loss": float(loss), "violations": float(np.count_nonzero(margins > 0)) / n}, grads


def soft_network_grads(mlp: MLPParams, batch, labels, spheres: SphereParams, nu: float):
    """Objective value and network gradients with spheres held fixed."""
    _check_nu(nu)
    report, grads = _network_loss_and_grads(mlp.as_dict(), batch, labels, spheres, nu)
    return report["loss"], MLPParams.from_dict(grads)


def bcd_train(data, labels, arch, cfg: TrainConfig, num_classes: int | None = None):
    """Block coordinate descent: ``cfg.sphere_update_every`` network epochs
    between sphere updates over the full training set.

    Spheres are first fitted to the untrained network.  History entries carry
    the epoch loss plus, at each update, the objective before and after the
    sphere move (``sphere_objective_before`` / ``_after``).
    """
    _check_nu(cfg.nu)
    data = np.asarray(data, dtype=np.float64)
    labels = check_labels(labels, data.shape[0], num_classes)
    k = int(num_classes if num_classes is not None else labels.max() + 1)
    arch = list(arch)
    if arch[0] != data.shape[1]:
        raise ValidationError(f"arch input width {arch[0]} != data width {data.shape[1]}")
    mlp = init_params(arch, cfg.seed, scheme=cfg.init)
    state = {"spheres": update_spheres(embed(mlp, data), labels, cfg.nu, k)}
    audits = {}

    def loss_fn(params, xb, yb):
        return _network_loss_and_grads(params, xb, yb, state["spheres"], cfg.nu)

    def on_epoch_end(epoch, params):
        if (epoch + 1) % cfg.sphere_update_every:
            return
        latent = embed(MLPParams.from_dict(params), data)
        before = soft_boundary_loss(latent, labels, state["spheres"], cfg.nu)
        state["spheres"] = update_spheres(latent, labels, cfg.nu, k)
        after = soft_boundary_loss(latent, labels, state["spheres"], cfg.nu)
        audits[epoch] = (before, after)

    params, history = fit_adam(mlp.as_dict(), loss_fn, data, labels, cfg, on_epoch_end)
    for record in history:
        if record["epoch"] in audits:
            record["sphere_objective_before"], record["sphere_objective_after"] = audits[record["epoch"]]
    return MLPParams.from_dict(params), state["spheres"], history


def soft_confidence_score(latent, spheres: SphereParams) -> np.ndarray:
    """``-min_k(||f(x) - c_k||^2 - R_k^2)``: positive inside some sphere."""
    sq = squared_distances(latent, spheres.centers)
    return -np.min(sq - spheres.radii ** 2, axis=1)


def soft_predict(latent, spheres: SphereParams) -> np.ndarray:
    """Class whose boundary is least exceeded; ties go to the lowest index."""
    sq = squared_distances(latent, spheres.centers)
    return np.argmin(sq - spheres.radii ** 2, axis=1)
