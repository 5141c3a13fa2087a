"""Uniform train / predict / score interface over every method, plus the
JSON checkpoint format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, head as mcdd_head, soft
from .errors import ValidationError
from .nn import MLPParams, embed
from .training import TrainConfig

METHODS = ("deep-mcdd", "soft-mcdd", "softmax-msp", "mahalanobis", "deep-svdd", "euclid-center")
CHECKPOINT_VERSION = 1


@dataclass
class TrainedModel:
    method: str
    mlp: MLPParams
    # method-specific arrays, e.g. head means or sphere radii
    extras: dict[str, np.ndarray]
    config: TrainConfig
    num_classes: int | None
    history: list[dict] = field(default_factory=list)
    # free-form JSON data saved with checkpoints (e.g. normalization stats)
    metadata: dict = field(default_factory=dict)

    @property
    def is_classifier(self) -> bool:
        return self.method != "deep-svdd"

    def latent(self, data) -> np.ndarray:
        return embed(self.mlp, data)

    def _dm_head(self):
        return mcdd_head.DMLayerParams.from_dict(self.extras, "head.")

    def _spheres(self):
        return soft.SphereParams(self.extras["centers"], self.extras["radii"])

    def _softmax_head(self):
        return baselines.SoftmaxHeadParams(self.extras["head.weights"], self.extras["head.biases"])

    def _mahalanobis(self):
        return baselines.MahalanobisStats(
            self.extras["class_means"], self.extras["tied_covariance"], self.extras["precision"])

    def predict_and_score(self, data) -> tuple[np.ndarray | None, np.ndarray]:
        """Predicted class ids (None for one-class detectors) and confidence
        scores, higher meaning more in-distribution."""
        z = self.latent(data)
        if self.method == "deep-mcdd":
            h = self._dm_head()
            dist = mcdd_head.compute_distances(z, h)
            return mcdd_head.predict_class(dist, h), mcdd_head.confidence_score(dist)
        if self.method == "soft-mcdd":
            s = self._spheres()
            return soft.soft_predict(z, s), soft.soft_confidence_score(z, s)
        if self.method == "softmax-msp":
            h = self._softmax_head()
            return baselines.softmax_predict(z, h), baselines.msp_score(z, h)
        if self.method == "mahalanobis":
            stats = self._mahalanobis()
            return baselines.mahalanobis_predict(z, stats), baselines.mahalanobis_score(z, stats)
        if self.method == "deep-svdd":
            return None, baselines.svdd_score(z, self.extras["center"])
        if self.method == "euclid-center":
            c = self.extras["centers"]
            return baselines.euclid_predict(z, c), baselines.euclid_score(z, c)
        raise ValidationError(f"unknown method {self.method!r}")

    def centers(self) -> np.ndarray:
        """Per-class (or single) centers in latent space, for visualization."""
        if self.method == "deep-mcdd":
            return self.extras["head.means"]
        if self.method == "soft-mcdd":
            return self.extras["centers"]
        if self.method in ("softmax-msp", "mahalanobis"):
            return self.extras["class_means"]
        if self.method == "deep-svdd":
            return self.extras["center"][None, :]
        return self.extras["centers"]


def train_model(method: str, data, labels, arch, cfg: TrainConfig, num_classes=None) -> TrainedModel:
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    labels = np.asarray(labels)
    k = int(num_classes if num_classes is not None else labels.max() + 1)
    if method == "deep-mcdd":
        mlp, h, history = mcdd_head.train_mcdd(data, labels, arch, cfg, k)
        extras = h.as_dict("head.")
    elif method == "soft-mcdd":
        mlp, spheres, history = soft.bcd_train(data, labels, arch, cfg, k)
        extras = {"centers": spheres.centers, "radii": spheres.radii}
    elif method in ("softmax-msp", "mahalanobis"):
        mlp, h, history = baselines.train_softmax(data, labels, arch, cfg, k)
        extras = {"head.weights": h.weights, "head.biases": h.biases}
        # class means are kept for both so the latent export can show them
        stats = baselines.fit_mahalanobis(embed(mlp, data), labels, k)
        extras.update(class_means=stats.class_means, tied_covariance=stats.tied_covariance,
                      precision=stats.precision)
    elif method == "deep-svdd":
        mlp, svdd, history = baselines.train_deep_svdd(data, arch, cfg)
        extras = {"center": svdd.center}
        k = None
    else:
        mlp, centers, history = baselines.train_euclid_classifier(data, labels, arch, cfg, k)
        extras = {"centers": centers}
    return TrainedModel(method, mlp, extras, cfg, k, history)


# --------------------------------------------------------------------------
# checkpoints

def _arrays_to_json(arrays: dict[str, np.ndarray]) -> dict:
    return {name: {"shape": list(a.shape), "data": np.asarray(a, dtype=np.float64).ravel().tolist()}
            for name, a in arrays.items()}


def _arrays_from_json(doc: dict) -> dict[str, np.ndarray]:
    return {name: np.array(v["data"], dtype=np.float64).reshape(v["shape"]) for name, v in doc.items()}


def checkpoint_dict(model: TrainedModel) -> dict:
    return {
        "format": "mcdd-checkpoint",
        "version": CHECKPOINT_VERSION,
        "variant": model.method,
        "arch": model.mlp.dims,
        "activation": model.mlp.activation,
        "num_classes": model.num_classes,
        "config": model.config.to_dict(),
        "seed": model.config.seed,
        "mlp": _arrays_to_json(model.mlp.as_dict()),
        "extras": _arrays_to_json(model.extras),
        "metadata": model.metadata,
    }


def save_checkpoint(model: TrainedModel, path) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    Path(path).write_text(json.dumps(checkpoint_dict(model), indent=1) + "\n", encoding="utf-8")


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != "mcdd-checkpoint":
        raise ValidationError("not an mcdd checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(f"unsupported checkpoint version {doc.get('version')!r}")
    if doc["variant"] not in METHODS:
        raise ValidationError(f"unknown variant {doc['variant']!r}")
    mlp = MLPParams.from_dict(_arrays_from_json(doc["mlp"]), activation=doc["activation"])
    if mlp.dims != list(doc["arch"]):
        raise ValidationError(f"checkpoint arch {doc['arch']} does not match weights {mlp.dims}")
    return TrainedModel(doc["variant"], mlp, _arrays_from_json(doc["extras"]),
                        TrainConfig(**doc["config"]), doc["num_classes"],
                        metadata=doc.get("metadata", {}))


def load_checkpoint(path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
