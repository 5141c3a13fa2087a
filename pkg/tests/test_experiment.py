import csv
import json

import numpy as np
import pytest

from mcdd.data import TabularDataset
from mcdd.errors import ValidationError
from mcdd.experiment import (ExperimentConfig, ScenarioError, aggregate, export_latent, load_result,
                             result_json, run_benchmark, score_rows, sweep_nu, train_single)
from mcdd.metrics import METRIC_NAMES
from mcdd.models import METHODS, load_checkpoint, save_checkpoint, train_model
from mcdd.training import TrainConfig

from conftest import make_blobs


def small_dataset(num_classes=4, per_class=15, seed=0):
    x, y = make_blobs(num_classes=num_classes, dim=3, per_class=per_class, spread=6.0, seed=seed)
    return TabularDataset(x, y, [f"c{k}" for k in range(num_classes)], "blobs")


def small_config(tmp_path, **kw):
    base = dict(method="deep-mcdd", hidden_dims=[8], latent_dim=4, epochs=3, batch_size=16, folds=3,
                output_dir=str(tmp_path / "out"))
    return ExperimentConfig(**{**base, **kw})


def test_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(method="nope")
    with pytest.raises(ValidationError):
        ExperimentConfig(nu=0.0)
    with pytest.raises(ValidationError):
        ExperimentConfig(folds=1)
    with pytest.raises(ValidationError):
        ExperimentConfig(init="xavier")
    with pytest.raises(ValidationError, match="unknown config keys: colour"):
        ExperimentConfig.from_dict({"colour": 1})


def test_config_file_with_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"epochs": 7, "nu": 2.0}))
    cfg = ExperimentConfig.from_file(path, {"nu": 0.5})
    assert cfg.epochs == 7 and cfg.nu == 0.5 and cfg.batch_size == 128
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_benchmark_bookkeeping_and_averages(tmp_path):
    ds = small_dataset()
    result = run_benchmark(small_config(tmp_path), ds)
    assert [(r["ood_class"], r["fold"]) for r in result.rows] == [(c, f) for c in range(4) for f in range(3)]
    for entry in result.per_class:
        rows = [r for r in result.rows if r["ood_class"] == entry["ood_class"]]
        for m in METRIC_NAMES:
            assert abs(entry[m] - np.mean([r[m] for r in rows])) <= 1e-12
    for m in METRIC_NAMES:
        assert abs(result.grand[m] - np.mean([p[m] for p in result.per_class])) <= 1e-12
    out = tmp_path / "out"
    assert (out / "table.md").read_text().count("\n") == 2 + 4 + 1
    with (out / "table.csv").open() as fh:
        assert len(list(csv.reader(fh))) == 1 + 12 + 4 + 1
    assert load_result(out / "results.json").to_dict() == json.loads(result_json(result))


def test_benchmark_rerun_is_byte_identical(tmp_path):
    ds = small_dataset()
    run_benchmark(small_config(tmp_path, output_dir=str(tmp_path / "a")), ds)
    run_benchmark(small_config(tmp_path, output_dir=str(tmp_path / "b")), ds)
    # output_dir is part of the stored config, so compare with it normalized
    a = json.loads((tmp_path / "a" / "results.json").read_text())
    b = json.loads((tmp_path / "b" / "results.json").read_text())
    a["config"]["output_dir"] = b["config"]["output_dir"] = ""
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    first = (tmp_path / "a" / "results.json").read_bytes()
    run_benchmark(small_config(tmp_path, output_dir=str(tmp_path / "a")), ds)
    assert (tmp_path / "a" / "results.json").read_bytes() == first


def test_parallel_jobs_match_serial(tmp_path):
    ds = small_dataset()
    serial = run_benchmark(small_config(tmp_path, ood_classes=[0, 1]), ds, write=False)
    parallel = run_benchmark(small_config(tmp_path, ood_classes=[0, 1], jobs=2), ds, write=False)
    assert serial.rows == parallel.rows


def test_schema_version_rejected(tmp_path):
    path = tmp_path / "r.json"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(ValidationError):
        load_result(path)


def test_failing_scenario_flushes_partial_results(tmp_path, monkeypatch):
    import mcdd.experiment as experiment
    real = experiment.run_scenario

    def flaky(dataset, split, config):
        if split.key == (0, 1):
            raise FloatingPointError("boom")
        return real(dataset, split, config)

    monkeypatch.setattr(experiment, "run_scenario", flaky)
    with pytest.raises(ScenarioError, match=r"ood_class=0, fold=1.*boom"):
        run_benchmark(small_config(tmp_path, ood_classes=[0, 1]), small_dataset())
    partial = json.loads((tmp_path / "out" / "results.partial.json").read_text())
    assert partial["status"] == "failed" and partial["failed_scenario"] == [0, 1]
    assert [(r["ood_class"], r["fold"]) for r in partial["rows"]] == [(0, 0)]
    assert not (tmp_path / "out" / "results.json").exists()


def test_aggregate_mixed_accuracy():
    rows = [{"ood_class": 0, "fold": 0, **{m: 0.5 for m in METRIC_NAMES}},
            {"ood_class": 1, "fold": 0, **{m: 1.0 for m in METRIC_NAMES}}]
    assert aggregate(rows, {}, {}).grand["auroc"] == 0.75


def test_sweep_nu_rows_and_csv(tmp_path):
    ds = small_dataset()
    cfg = small_config(tmp_path, ood_classes=[0], epochs=2)
    table = sweep_nu(cfg, [0.1, 10.0], ds)
    assert [nu for nu, _ in table] == [0.1, 10.0]
    with (tmp_path / "out" / "sweep_nu.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["nu", *METRIC_NAMES] and len(rows) == 3
    assert float(rows[2][METRIC_NAMES.index("auroc") + 1]) == table[1][1].auroc
    assert (tmp_path / "out" / "nu_0.1" / "results.json").exists()


@pytest.mark.parametrize("method", ["deep-mcdd", "soft-mcdd", "deep-svdd"])
def test_export_latent(tmp_path, method):
    ds = small_dataset()
    cfg = small_config(tmp_path, method=method, latent_dim=2)
    path, records = export_latent(cfg, tmp_path / "lat.csv", ds, ood_class=1)
    samples = [r for r in records if r["role"] != "center"]
    assert sorted(r["row"] for r in samples) == list(range(ds.features.shape[0]))
    assert all(r["role"] == "ood" for r in samples if r["class_id"] == 1)
    centers = [r for r in records if r["role"] == "center"]
    assert len(centers) == (1 if method == "deep-svdd" else 3)
    if method != "deep-svdd":
        assert sorted(r["class_id"] for r in centers) == [0, 2, 3]
    first = path.read_bytes()
    export_latent(cfg, path, ds, ood_class=1)
    assert path.read_bytes() == first


def test_export_latent_requires_2d(tmp_path):
    with pytest.raises(ValidationError):
        export_latent(small_config(tmp_path), None, small_dataset())


@pytest.mark.parametrize("method", METHODS)
def test_checkpoint_round_trip_is_bit_exact(tmp_path, method):
    x, y = make_blobs(num_classes=3, dim=3, per_class=10, seed=1)
    model = train_model(method, x, y, [3, 6, 4], TrainConfig(epochs=2, batch_size=8), 3)
    model.metadata = {"note": "x"}
    save_checkpoint(model, tmp_path / "m.json")
    loaded = load_checkpoint(tmp_path / "m.json")
    assert loaded.method == method and loaded.config == model.config and loaded.metadata == model.metadata
    for a, b in zip(model.mlp.as_dict().values(), loaded.mlp.as_dict().values()):
        assert np.array_equal(a, b)
    for name in model.extras:
        assert np.array_equal(model.extras[name], loaded.extras[name])
    p1, s1 = model.predict_and_score(x)
    p2, s2 = loaded.predict_and_score(x)
    assert np.array_equal(s1, s2)
    assert (p1 is None and p2 is None) or np.array_equal(p1, p2)


def test_checkpoint_rejects_foreign_documents(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"format": "other"}))
    with pytest.raises(ValidationError):
        load_checkpoint(path)


def test_train_single_and_score_rows(tmp_path):
    ds = small_dataset()
    ds.features[:] = ds.features * 10 + 3
    cfg = small_config(tmp_path, epochs=40)
    model = train_single(cfg, ds)
    assert model.metadata["class_names"] == ds.class_names
    predictions, scores = score_rows(model, ds.features)
    assert np.mean(predictions == ds.labels) > 0.9
    far = score_rows(model, ds.features[:1] + 1e3)[1]
    assert far[0] < scores.min()
