"""Diffusion-time posterior anomaly detection.

Anomalies sit far from the data manifold, so the posterior over the
diffusion time (equivalently the noise variance) of an input puts mass
at larger timesteps for them. Four detectors share that idea:

  analytic    -- exact posterior over the schedule grid from the full train set
  nonparam    -- inverse-Gamma scale estimated from k-nearest-neighbor distances
  invgamma    -- neural net predicting the inverse-Gamma scale parameter
  categorical -- neural net classifying the timestep into bins
"""

from .data import (Dataset, DatasetSplit, Standardizer, cap_rows,
                   export_split_csv, fit_standardizer, load_csv, save_csv,
                   split_dataset, split_semi_supervised,
                   split_unsupervised_bootstrap, standardize_apply,
                   standardize_invert)
from .evaluation import (EvalReport, SeedResult, auc_pr, auc_roc,
                         f1_at_contamination, run_benchmark)
from .exceptions import ConfigError, DataError, DtpmError, NumericError
from .models import (CategoricalModel, InvGammaModel, TrainConfig,
                     categorical_targets, denoise, inv_gamma_loss, load_model,
                     save_model, score, score_standardized, train)
from .neighbors import KnnIndex, build_index, query_knn
from .posterior import (GridPosterior, InverseGammaParams, analytic_posterior,
                        analytic_score, inv_gamma_grid_posterior,
                        inv_gamma_log_density, logsumexp,
                        nonparametric_posterior, nonparametric_scale,
                        nonparametric_score, shape_for_dim)
from .schedule import DiffusionSchedule, build_schedule, noising_sample
from .synthetic import two_cluster_dataset

__all__ = [
    "CategoricalModel", "ConfigError", "DataError", "Dataset", "DatasetSplit",
    "DiffusionSchedule", "DtpmError", "EvalReport", "GridPosterior",
    "InvGammaModel", "InverseGammaParams", "KnnIndex", "NumericError",
    "SeedResult", "Standardizer", "TrainConfig", "analytic_posterior",
    "analytic_score", "auc_pr", "auc_roc", "build_index", "build_schedule",
    "cap_rows", "categorical_targets", "denoise", "export_split_csv",
    "f1_at_contamination",
    "fit_standardizer", "inv_gamma_grid_posterior", "inv_gamma_log_density",
    "inv_gamma_loss", "load_csv", "load_model", "logsumexp", "noising_sample",
    "nonparametric_posterior", "nonparametric_scale",
    "nonparametric_score", "query_knn", "run_benchmark", "save_csv",
    "save_model", "score", "score_standardized", "shape_for_dim",
    "split_dataset", "split_semi_supervised", "split_unsupervised_bootstrap",
    "standardize_apply", "standardize_invert", "train", "two_cluster_dataset",
]
