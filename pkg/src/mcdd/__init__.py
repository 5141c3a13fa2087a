"""Deep multi-class data description for tabular data.

A dense network maps inputs to a latent space holding one isotropic Gaussian
per class.  The same model classifies in-distribution samples and flags
out-of-distribution ones by their distance to the closest class.
"""

from .data import (NormalizationStats, ScenarioSplit, TabularDataset, load_csv,
                   make_loco_scenarios, zscore_apply, zscore_fit, zscore_invert)
from .errors import DivergenceError, NumericError, ValidationError
from .head import (DMLayerParams, compute_distances, confidence_score, gda_posterior, init_head,
                   mcdd_backward, mcdd_loss, predict_class, train_mcdd)
from .metrics import (MetricsReport, ScoreSet, aupr, auroc, classification_accuracy,
                      detection_accuracy, evaluate, tnr_at_tpr)
from .models import METHODS, TrainedModel, load_checkpoint, save_checkpoint, train_model
from .nn import AdamState, MLPParams, adam_init, adam_step, embed, init_params, mlp_backward, mlp_forward
from .soft import SphereParams, bcd_train, soft_boundary_loss, soft_confidence_score, update_spheres
from .training import TrainConfig

__version__ = "0.1.0"
