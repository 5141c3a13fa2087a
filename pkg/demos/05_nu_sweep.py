"""How nu trades the pull toward class centers against classification.

Small nu weights the classification term heavily; very large nu mostly
minimizes the distance to the own class, which loosens class separation.
"""

from mcdd.experiment import ExperimentConfig, sweep_nu

from synthetic import as_dataset, blobs

data = as_dataset(*blobs(num_classes=4, per_class=80))
cfg = ExperimentConfig(hidden_dims=[32, 32], latent_dim=8, epochs=20, folds=3, ood_classes=[0, 1])
print(f"{'nu':>8}  {'accuracy':>8}  {'AUROC':>6}")
for nu, report in sweep_nu(cfg, [0.01, 0.1, 1.0, 10.0, 1000.0], data, write=False):
    print(f"{nu:>8g}  {report.classification_accuracy:8.4f}  {report.auroc:6.4f}")
