"""Dense ReLU networks with explicit backpropagation and the Adam optimizer.

Parameters are plain numpy arrays held in small dataclasses.  The optimizer
works on flat ``{name: array}`` dictionaries so that feature extractor and
head parameters can be updated together under readable names such as
``"mlp.layers.0.weights"`` or ``"head.means"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ValidationError


@dataclass
class DenseLayer:
    weights: np.ndarray  # (d_in, d_out)
    biases: np.ndarray | None = None  # (d_out,); None for bias-free layers


@dataclass
class MLPParams:
    layers: list[DenseLayer]
    activation: str = "relu"

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].weights.shape[0]] + [layer.weights.shape[1] for layer in self.layers]

    @property
    def latent_dim(self) -> int:
        return self.layers[-1].weights.shape[1]

    @property
    def has_bias(self) -> bool:
        return self.layers[0].biases is not None

    def as_dict(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"{prefix}layers.{i}.weights"] = layer.weights
            if layer.biases is not None:
                out[f"{prefix}layers.{i}.biases"] = layer.biases
        return out

    @classmethod
    def from_dict(cls, arrays: dict[str, np.ndarray], prefix: str = "", activation: str = "relu") -> "MLPParams":
        layers = []
        i = 0
        while f"{prefix}layers.{i}.weights" in arrays:
            layers.append(
                DenseLayer(
                    arrays[f"{prefix}layers.{i}.weights"],
                    arrays.get(f"{prefix}layers.{i}.biases"),
                )
            )
            i += 1
        if not layers:
            raise ValidationError(f"no layers found under prefix {prefix!r}")
        return cls(layers, activation)


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)  # input to each layer
    preacts: list[np.ndarray] = field(default_factory=list)  # affine output of each layer


INIT_SCHEMES = ("uniform", "he")


def init_params(layer_dims, seed: int, bias: bool = True, scheme: str = "uniform") -> MLPParams:
    """Randomly initialized dense network ``layer_dims[0] -> ... -> layer_dims[-1]``.

    ``scheme="uniform"`` draws weights from U(-1/sqrt(d_in), 1/sqrt(d_in));
    ``scheme="he"`` draws them from N(0, 2/d_in).  Biases start at zero.

    He scaling keeps the latent norm large at the start, and the resulting
    pull-in gradients under Adam at lr 0.01 can kill every ReLU in a few
    steps; the smaller uniform scale avoids that, hence the default.
    """
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise ValidationError(f"layer_dims needs >= 2 positive entries, got {layer_dims!r}")
    if scheme not in INIT_SCHEMES:
        raise ValidationError(f"unknown init scheme {scheme!r}; choose from {', '.join(INIT_SCHEMES)}")
    rng = np.random.default_rng(seed)
    layers = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        if scheme == "he":
            w = rng.normal(0.0, np.sqrt(2.0 / d_in), size=(d_in, d_out))
        else:
            bound = 1.0 / np.sqrt(d_in)
            w = rng.uniform(-bound, bound, size=(d_in, d_out))
        b = np.zeros(d_out) if bias else None
        layers.append(DenseLayer(w, b))
    return MLPParams(layers)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad(x: np.ndarray) -> np.ndarray:
    # derivative at exactly 0 is pinned to 0
    return (x > 0).astype(x.dtype)


def _check_batch(params: MLPParams, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params.layers[0].weights.shape[0]:
        raise ValidationError(
            f"batch shape {batch.shape} does not match input width {params.layers[0].weights.shape[0]}"
        )
    return batch


def mlp_forward(params: MLPParams, batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Affine layers with ReLU in between; the final layer stays linear."""
    h = _check_batch(params, batch)
    cache = ForwardCache()
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        cache.inputs.append(h)
        z = h @ layer.weights
        if layer.biases is not None:
            z = z + layer.biases
        cache.preacts.append(z)
        h = relu(z) if i < last else z
    return h, cache


def embed(params: MLPParams, data: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Forward pass without keeping a cache, processed in row chunks."""
    data = _check_batch(params, data)
    out = np.empty((data.shape[0], params.latent_dim))
    last = len(params.layers) - 1
    for start in range(0, data.shape[0], chunk):
        h = data[start:start + chunk]
        for i, layer in enumerate(params.layers):
            h = h @ layer.weights
            if layer.biases is not None:
                h = h + layer.biases
            if i < last:
                h = relu(h)
        out[start:start + chunk] = h
    return out


def mlp_backward(params: MLPParams, cache: ForwardCache, d_latent: np.ndarray) -> MLPParams:
    """Gradient of ``sum(d_latent * latent)`` with respect to every weight and bias."""
    if len(cache.inputs) != len(params.layers):
        raise ValidationError(
            f"cache has {len(cache.inputs)} layers but params have {len(params.layers)}"
        )
    for i, (x, layer) in enumerate(zip(cache.inputs, params.layers)):
        if x.shape[1] != layer.weights.shape[0]:
            raise ValidationError(f"cache input {i} has width {x.shape[1]}, layer expects {layer.weights.shape[0]}")
    dz = np.asarray(d_latent, dtype=np.float64)
    if dz.shape != cache.preacts[-1].shape:
        raise ValidationError(f"d_latent shape {dz.shape} != latent shape {cache.preacts[-1].shape}")

    grads: list[DenseLayer] = [None] * len(params.layers)  # type: ignore[list-item]
    for i in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[i]
        dw = cache.inputs[i].T @ dz
        db = dz.sum(axis=0) if layer.biases is not None else None
        grads[i] = DenseLayer(dw, db)
        if i > 0:
            dz = (dz @ layer.weights.T) * relu_grad(cache.preacts[i - 1])
    return MLPParams(grads, params.activation)


@dataclass
class AdamState:
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step: int = 0
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def adam_init(params: dict[str, np.ndarray], learning_rate: float = 0.01,
              beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    return AdamState(
        first_moment={k: np.zeros_like(v) for k, v in params.items()},
        second_moment={k: np.zeros_like(v) for k, v in params.items()},
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update.  Inputs are left untouched."""
    if params.keys() != grads.keys() or params.keys() != state.first_moment.keys():
        raise ValidationError("params, gradients and optimizer state must share the same names")
    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** step
    correction2 = 1.0 - b2 ** step
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValidationError(f"{name}: gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name}")
        m = b1 * state.first_moment[name] + (1.0 - b1) * g
        v = b2 * state.second_moment[name] + (1.0 - b2) * g * g
        new_params[name] = p - state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        new_m[name] = m
        new_v[name] = v
    new_state = AdamState(new_m, new_v, step, state.learning_rate, b1, b2, state.epsilon)
    return new_params, new_state
