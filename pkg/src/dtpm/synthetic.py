"""Synthetic anomaly-detection fixtures used by tests and scripts."""

from __future__ import annotations

import numpy as np

from .data import Dataset, make_dataset


def two_cluster_dataset(n_inliers: int = 2000, n_anomalies: int = 100, d: int = 6,
                        seed: int = 0, center_scale: float = 2.0,
                        cluster_std: float = 0.5,
                        box_half_width: float = 6.0) -> Dataset:
    """Two Gaussian clusters at +/-center with uniform-box anomalies.

    Inliers split evenly between clusters N(+-center, cluster_std^2 I);
    anomalies are uniform over [-box_half_width, box_half_width]^d, which
    in d >= 6 dimensions almost never lands inside a cluster.
    """
    rng = np.random.default_rng(seed)
    center = np.full(d, center_scale)
    half = n_inliers // 2
    upper = rng.standard_normal((half, d)) * cluster_std + center
    lower = rng.standard_normal((n_inliers - half, d)) * cluster_std - center
    anomalies = rng.uniform(-box_half_width, box_half_width, size=(n_anomalies, d))
    features = np.vstack([upper, lower, anomalies])
    labels = np.concatenate([np.zeros(n_inliers, dtype=np.int64),
                             np.ones(n_anomalies, dtype=np.int64)])
    return make_dataset(features, labels, name="two-cluster-synthetic")
