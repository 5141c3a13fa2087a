"""Train with a 2-D latent space and write every sample's coordinates, for
plotting ID classes, the held-out class and the learned centers.

Pass an output path as the first argument (default latent.csv).  If
matplotlib is installed a scatter plot is saved next to it.
"""

import sys
from pathlib import Path

from mcdd.experiment import ExperimentConfig, export_latent

from synthetic import as_dataset, blobs

out = Path(sys.argv[1] if len(sys.argv) > 1 else "latent.csv")
data = as_dataset(*blobs(num_classes=4, per_class=80))
cfg = ExperimentConfig(hidden_dims=[32, 32], latent_dim=2, epochs=30, folds=3)
path, records = export_latent(cfg, out, data, ood_class=3)
print(f"wrote {len(records)} rows to {path}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

fig, ax = plt.subplots(figsize=(5, 5))
for role, marker in (("id", "."), ("ood", "x"), ("center", "*")):
    pts = [r for r in records if r["role"] == role]
    ax.scatter([r["x"] for r in pts], [r["y"] for r in pts], c=[r["class_id"] for r in pts],
               marker=marker, s=80 if role == "center" else 8, cmap="tab10", vmin=-1, vmax=9, label=role)
ax.legend()
fig.savefig(out.with_suffix(".png"), dpi=120)
print(f"plot saved to {out.with_suffix('.png')}")
