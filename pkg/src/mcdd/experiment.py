"""Leave-one-class-out benchmarks, nu sweeps and 2-D latent exports."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .data import TabularDataset, load_csv, make_loco_scenarios, zscore_apply, zscore_fit
from .errors import ValidationError
from .metrics import METRIC_NAMES, MetricsReport, average_reports, evaluate
from .models import METHODS, TrainedModel, train_model
from .training import TrainConfig

log = logging.getLogger(__name__)

RESULT_SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    dataset: str = ""
    label_column: str | int = -1
    has_header: bool = True
    label_order: str = "first"
    method: str = "deep-mcdd"
    hidden_dims: list[int] = field(default_factory=lambda: [128, 128])
    latent_dim: int = 128
    nu: float = 1.0
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 0.01
    sphere_update_every: int = 10
    init: str = "uniform"
    folds: int = 5
    seed: int = 0
    ood_classes: list[int] | None = None
    normalization: str = "train"  # "train": fit on training rows only; "all": whole dataset
    output_dir: str = "results"
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.normalization not in ("train", "all"):
            raise ValidationError("normalization must be 'train' or 'all'")
        if self.label_order not in ("first", "sorted"):
            raise ValidationError("label_order must be 'first' or 'sorted'")
        if any(int(h) <= 0 for h in self.hidden_dims) or self.latent_dim <= 0:
            raise ValidationError("layer widths must be positive")
        if self.folds < 2:
            raise ValidationError("folds must be >= 2")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")
        self.train_config()  # validates nu, epochs, ...

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValidationError("config file must hold a JSON object")
        doc.update(overrides or {})
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def train_config(self) -> TrainConfig:
        return TrainConfig(nu=self.nu, epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate, seed=self.seed,
                           sphere_update_every=self.sphere_update_every, init=self.init)

    def load_dataset(self) -> TabularDataset:
        if not self.dataset:
            raise ValidationError("config has no dataset path")
        return load_csv(self.dataset, self.label_column, self.has_header, self.label_order)


class ScenarioError(RuntimeError):
    def __init__(self, ood_class, fold, cause):
        super().__init__(f"scenario (ood_class={ood_class}, fold={fold}) failed: {cause}")
        self.ood_class = ood_class
        self.fold = fold


def fit_scenario(dataset: TabularDataset, split, config: ExperimentConfig):
    """Train on one split.  Returns the model, the normalized features and
    the dataset-class -> model-class map for the in-distribution classes."""
    rows = split.train_indices if config.normalization == "train" else None
    features = zscore_apply(dataset.features, zscore_fit(dataset.features, rows))
    id_classes = [c for c in range(dataset.num_classes) if c != split.ood_class]
    remap = np.full(dataset.num_classes, -1)
    remap[id_classes] = np.arange(len(id_classes))
    arch = [dataset.features.shape[1], *config.hidden_dims, config.latent_dim]
    model = train_model(config.method, features[split.train_indices],
                        remap[dataset.labels[split.train_indices]], arch,
                        config.train_config(), len(id_classes))
    return model, features, remap


def run_scenario(dataset: TabularDataset, split, config: ExperimentConfig) -> MetricsReport:
    model, features, remap = fit_scenario(dataset, split, config)
    predictions, id_scores = model.predict_and_score(features[split.id_test_indices])
    _, ood_scores = model.predict_and_score(features[split.ood_test_indices])
    truth = remap[dataset.labels[split.id_test_indices]]
    return evaluate(id_scores, ood_scores, predictions, truth if predictions is not None else None)


def _run_one(args):
    dataset, split, config = args
    try:
        return run_scenario(dataset, split, config)
    except Exception as exc:  # surfaced with scenario id by the caller
        return exc


@dataclass
class BenchmarkResult:
    config: dict
    dataset: dict
    rows: list[dict]  # {"ood_class", "fold", **metrics}
    per_class: list[dict]  # {"ood_class", **metrics}
    grand: dict

    def to_dict(self) -> dict:
        return {"schema_version": RESULT_SCHEMA_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchmarkResult":
        if doc.get("schema_version") != RESULT_SCHEMA_VERSION:
            raise ValidationError(f"unsupported result schema version {doc.get('schema_version')!r}")
        return cls(doc["config"], doc["dataset"], doc["rows"], doc["per_class"], doc["grand"])

    def class_report(self, ood_class: int) -> MetricsReport:
        for entry in self.per_class:
            if entry["ood_class"] == ood_class:
                return MetricsReport.from_dict(entry)
        raise KeyError(ood_class)

    @property
    def grand_report(self) -> MetricsReport:
        return MetricsReport.from_dict(self.grand)


def aggregate(rows: list[dict], config: dict, dataset_info: dict) -> BenchmarkResult:
    """Per-class means of fold rows and the grand mean of per-class means."""
    per_class = []
    for ood in sorted({r["ood_class"] for r in rows}):
        reports = [MetricsReport.from_dict(r) for r in rows if r["ood_class"] == ood]
        per_class.append({"ood_class": ood, **average_reports(reports).to_dict()})
    grand = average_reports(MetricsReport.from_dict(p) for p in per_class).to_dict()
    return BenchmarkResult(config, dataset_info, rows, per_class, grand)


def _dataset_info(dataset: TabularDataset) -> dict:
    return {
        "name": dataset.name,
        "instances": int(dataset.features.shape[0]),
        "attributes": int(dataset.features.shape[1]),
        "classes": dataset.num_classes,
        "class_names": dataset.class_names,
    }


def run_benchmark(config: ExperimentConfig, dataset: TabularDataset | None = None,
                  write: bool = True) -> BenchmarkResult:
    """Train and evaluate ``config.method`` on every leave-one-class-out split.

    Rows come back in (ood_class, fold) order whatever ``config.jobs`` is.
    With ``write`` the result JSON plus Markdown/CSV tables go to
    ``config.output_dir``; a failing scenario flushes the finished rows to
    ``results.partial.json`` and raises ScenarioError.
    """
    dataset = dataset if dataset is not None else config.load_dataset()
    scenarios = make_loco_scenarios(dataset, config.folds, config.seed, config.ood_classes)
    jobs = [(dataset, split, config) for split in scenarios]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = []
        for job in jobs:
            outcomes.append(_run_one(job))
            if isinstance(outcomes[-1], Exception):
                break

    rows = []
    for split, outcome in zip(scenarios, outcomes):
        if isinstance(outcome, Exception):
            if write:
                partial = {"schema_version": RESULT_SCHEMA_VERSION, "status": "failed",
                           "failed_scenario": list(split.key), "error": str(outcome),
                           "config": config.to_dict(), "rows": rows}
                out = Path(config.output_dir)
                out.mkdir(parents=True, exist_ok=True)
                (out / "results.partial.json").write_text(json.dumps(partial, indent=1) + "\n")
            raise ScenarioError(split.ood_class, split.fold, outcome) from outcome
        log.info("ood_class=%d fold=%d auroc=%.4f", split.ood_class, split.fold, outcome.auroc)
        rows.append({"ood_class": split.ood_class, "fold": split.fold, **outcome.to_dict()})

    result = aggregate(rows, config.to_dict(), _dataset_info(dataset))
    if write:
        write_result(result, config.output_dir)
    return result


def result_json(result: BenchmarkResult) -> str:
    return json.dumps(result.to_dict(), indent=1, sort_keys=True) + "\n"


def load_result(path) -> BenchmarkResult:
    return BenchmarkResult.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _fmt(value) -> str:
    return "-" if value is None else f"{100 * value:.2f}"


def markdown_table(result: BenchmarkResult) -> str:
    header = ["OOD", "Classification acc.", "TNR at TPR 85%", "AUROC", "AUPR", "Detection acc."]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for entry in result.per_class + [{"ood_class": "mean", **result.grand}]:
        cells = [str(entry["ood_class"])] + [_fmt(entry[m]) for m in METRIC_NAMES]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def write_result(result: BenchmarkResult, output_dir) -> Path:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.json").write_text(result_json(result), encoding="utf-8")
    (out / "table.md").write_text(markdown_table(result), encoding="utf-8")
    with (out / "table.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ood_class", "fold", *METRIC_NAMES])
        for row in result.rows:
            writer.writerow([row["ood_class"], row["fold"], *[row[m] for m in METRIC_NAMES]])
        for entry in result.per_class:
            writer.writerow([entry["ood_class"], "mean", *[entry[m] for m in METRIC_NAMES]])
        writer.writerow(["all", "mean", *[result.grand[m] for m in METRIC_NAMES]])
    return out / "results.json"


def sweep_nu(config: ExperimentConfig, nu_values, dataset: TabularDataset | None = None,
             write: bool = True) -> list[tuple[float, MetricsReport]]:
    """One full benchmark per nu; returns (nu, grand-average report) pairs and
    writes ``sweep_nu.csv`` plus one result directory per value."""
    dataset = dataset if dataset is not None else config.load_dataset()
    table = []
    for nu in nu_values:
        cfg = ExperimentConfig.from_dict({**config.to_dict(), "nu": float(nu),
                                          "output_dir": str(Path(config.output_dir) / f"nu_{nu:g}")})
        result = run_benchmark(cfg, dataset, write=write)
        table.append((float(nu), result.grand_report))
    if write:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "sweep_nu.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["nu", *METRIC_NAMES])
            for nu, report in table:
                writer.writerow([repr(nu), *[getattr(report, m) for m in METRIC_NAMES]])
    return table


def export_latent(config: ExperimentConfig, path=None, dataset: TabularDataset | None = None,
                  ood_class: int | None = None, fold: int = 0) -> tuple[Path | None, list[dict]]:
    """Train on one scenario with a 2-D latent space and dump every sample's
    coordinates plus the learned centers.

    Columns: x, y, class_id (dataset class id), role ("id", "ood", "center"),
    split ("train", "id_test", "ood_test", "center").
    """
    if config.latent_dim != 2:
        raise ValidationError(f"latent export needs latent_dim=2, got {config.latent_dim}")
    dataset = dataset if dataset is not None else config.load_dataset()
    if ood_class is None:
        ood_class = config.ood_classes[0] if config.ood_classes else 0
    splits = make_loco_scenarios(dataset, config.folds, config.seed, [ood_class])
    split = splits[fold]
    model, features, remap = fit_scenario(dataset, split, config)
    inverse = {int(m): c for c, m in enumerate(remap) if m >= 0}

    records = []
    for tag, role, idx in (("train", "id", split.train_indices),
                           ("id_test", "id", split.id_test_indices),
                           ("ood_test", "ood", split.ood_test_indices)):
        z = model.latent(features[idx])
        for row, (x, y) in zip(idx, z):
            records.append({"x": float(x), "y": float(y), "class_id": int(dataset.labels[row]),
                            "role": role, "split": tag, "row": int(row)})
    centers = model.centers()
    for j, (x, y) in enumerate(centers):
        cls_id = inverse.get(j, -1) if len(centers) > 1 else -1
        records.append({"x": float(x), "y": float(y), "class_id": cls_id,
                        "role": "center", "split": "center", "row": -1})

    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["x", "y", "class_id", "role", "split", "row"])
            writer.writeheader()
            for rec in records:
                writer.writerow({**rec, "x": repr(rec["x"]), "y": repr(rec["y"])})
    return path, records


def train_single(config: ExperimentConfig, dataset: TabularDataset | None = None) -> TrainedModel:
    """Fit on the whole dataset (all classes in-distribution).  Normalization
    statistics and class names travel in ``model.metadata``."""
    dataset = dataset if dataset is not None else config.load_dataset()
    stats = zscore_fit(dataset.features)
    features = zscore_apply(dataset.features, stats)
    arch = [features.shape[1], *config.hidden_dims, config.latent_dim]
    model = train_model(config.method, features, dataset.labels, arch, config.train_config(),
                        dataset.num_classes)
    model.metadata = {"normalization": {"mean": stats.mean.tolist(), "std": stats.std.tolist()},
                      "class_names": dataset.class_names}
    return model


def score_rows(model: TrainedModel, features) -> tuple[np.ndarray | None, np.ndarray]:
    """Normalize raw features with the checkpoint's statistics, then predict
    and score."""
    norm = model.metadata.get("normalization")
    features = np.asarray(features, dtype=np.float64)
    if norm is not None:
        features = (features - np.array(norm["mean"])) / np.array(norm["std"])
    return model.predict_and_score(features)
