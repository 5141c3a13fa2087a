"""Central finite-difference checks of every hand-written gradient."""

from __future__ import annotations

import numpy as np

from .head import DMLayerParams, mcdd_objective_grads
from .nn import MLPParams, init_params, mlp_backward, mlp_forward
from .soft import SphereParams, _network_loss_and_grads

STEP = 1e-5
TOLERANCE = 1e-4
# |a - n| <= 1e-8 counts as a pass for tiny entries: 1e-8 / TOLERANCE
DENOM_FLOOR = 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), DENOM_FLOOR)
    return np.abs(analytic - numeric) / scale


def numeric_grads(loss, params: dict[str, np.ndarray], h: float = STEP) -> dict[str, np.ndarray]:
    """Central differences of ``loss(params)`` for every entry of every array."""
    out = {}
    for name, array in params.items():
        g = np.zeros_like(array)
        flat = array.reshape(-1)
        for j in range(flat.size):
            saved = flat[j]
            flat[j] = saved + h
            up = loss(params)
            flat[j] = saved - h
            down = loss(params)
            flat[j] = saved
            g.reshape(-1)[j] = (up - down) / (2 * h)
        out[name] = g
    return out


def _group(name: str) -> str:
    """``mlp.layers.2.weights`` -> ``mlp.weights``; other names pass through."""
    parts = name.split(".")
    if "layers" in parts:
        i = parts.index("layers")
        return ".".join(parts[:i] + parts[-1:])
    return name


def _max_errors(analytic, numeric, suite: str, corrupt: str | None) -> dict[str, float]:
    errors: dict[str, float] = {}
    for name in analytic:
        a = analytic[name].copy()
        key = f"{suite}.{_group(name)}"
        if corrupt is not None and key == corrupt:
            a.reshape(-1)[0] += 1e-2
        err = float(relative_error(a, numeric[name]).max())
        errors[key] = max(errors.get(key, 0.0), err)
    return errors


def _random_instance(rng):
    dims = [int(rng.integers(2, 6))] + [int(rng.integers(2, 9)) for _ in range(int(rng.integers(1, 4)))]
    n = int(rng.integers(3, 9))
    k = int(rng.integers(2, 5))
    x = rng.normal(size=(n, dims[0]))
    y = rng.integers(0, k, size=n)
    mlp = init_params(dims, int(rng.integers(2**31)))
    for layer in mlp.layers:
        layer.biases[:] = rng.normal(0.0, 0.5, size=layer.biases.shape)
    return dims, x, y, k, mlp


def check_nn(rng, corrupt=None) -> dict[str, float]:
    _, x, _, _, mlp = _random_instance(rng)
    latent, _ = mlp_forward(mlp, x)
    weights = rng.normal(size=latent.shape)

    def loss(p):
        z, _ = mlp_forward(MLPParams.from_dict(p), x)
        return float(np.sum(weights * z))

    _, cache = mlp_forward(mlp, x)
    analytic = mlp_backward(mlp, cache, weights).as_dict()
    numeric = numeric_grads(loss, {k: v.copy() for k, v in mlp.as_dict().items()})
    return _max_errors(analytic, numeric, "nn", corrupt)


def check_mcdd(rng, corrupt=None) -> dict[str, float]:
    dims, x, y, k, mlp = _random_instance(rng)
    d = dims[-1]
    # keep raw log-sigmas away from the clamp at 0
    raw = rng.uniform(0.1, 1.0, size=k) * rng.choice([-1.0, 1.0], size=k)
    head = DMLayerParams(rng.normal(size=(k, d)), raw, rng.normal(size=k))
    nu = float(rng.choice([0.1, 1.0, 10.0]))
    params = {**mlp.as_dict("mlp."), **head.as_dict("head.")}
    params = {name: a.copy() for name, a in params.items()}
    _, analytic = mcdd_objective_grads(params, x, y, nu)

    def loss(p):
        return mcdd_objective_grads(p, x, y, nu)[0]["loss"]

    numeric = numeric_grads(loss, params)
    return _max_errors(analytic, numeric, "mcdd", corrupt)


def check_soft(rng, corrupt=None) -> dict[str, float]:
    dims, x, y, k, mlp = _random_instance(rng)
    spheres = SphereParams(rng.normal(size=(k, dims[-1])), rng.uniform(0.5, 2.0, size=k))
    nu = float(rng.choice([0.1, 0.5, 1.0]))
    params = {name: a.copy() for name, a in mlp.as_dict().items()}
    _, analytic = _network_loss_and_grads(params, x, y, spheres, nu)

    def loss(p):
        return _network_loss_and_grads(p, x, y, spheres, nu)[0]["loss"]

    numeric = numeric_grads(loss, params)
    return _max_errors(analytic, numeric, "soft", corrupt)


def gradcheck(seed: int = 0, corrupt: str | None = None) -> dict[str, float]:
    """Max relative error per parameter group over one random instance of each
    suite.  ``corrupt`` names a group whose analytic gradient is perturbed
    (negative control)."""
    rng = np.random.default_rng(seed)
    errors = {}
    for suite in (check_nn, check_mcdd, check_soft):
        errors.update(suite(rng, corrupt))
    return errors


def passed(errors: dict[str, float], tolerance: float = TOLERANCE) -> bool:
    return all(e <= tolerance for e in errors.values())
