"""Pair-dataset construction: joint features, same-class labels, weights.

A pair (x_i, x_j) is represented by the 3F-dimensional joint feature
[x_i | x_j | x_i - x_j] and labeled 1 iff the two instances share a class.
Both orders of every pair are materialized so the learned predictor can
reflect the symmetry of class equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ProcessedDataset


class DegenerateDatasetError(Exception):
    """All pairs carry the same binary label; nothing to discriminate."""


@dataclass
class PairDataset:
    Z: np.ndarray  # P x 3F
    labels: np.ndarray  # P in {0,1}
    weights: np.ndarray  # P positive reals
    source_index_pairs: np.ndarray  # P x 2 (i, j)

    @property
    def n_pairs(self) -> int:
        return self.Z.shape[0]


def joint_features(x: np.ndarray, x_prime: np.ndarray) -> np.ndarray:
    """[x | x' | x - x'], length 3F."""
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    if x.shape != x_prime.shape or x.ndim != 1:
        raise ValueError(f"feature length mismatch: {x.shape} vs {x_prime.shape}")
    return np.concatenate([x, x_prime, x - x_prime])


def joint_features_batch(X_left: np.ndarray, X_right: np.ndarray) -> np.ndarray:
    """Row-wise joint features for two aligned matrices."""
    if X_left.shape != X_right.shape:
        raise ValueError("shape mismatch between pair sides")
    return np.hstack([X_left, X_right, X_left - X_right])


def build_pair_dataset(
    data: ProcessedDataset,
    include_self: bool = True,
    weighting: str = "balanced",
) -> PairDataset:
    """All ordered pairs of training instances, in nested (i outer, j inner) order.

    With ``include_self`` the pair count is N^2, without it N^2 - N.
    Balanced weighting gives each positive pair P/(2 P+) and each negative
    P/(2 P-), equalizing total class mass.
    """
    if weighting not in ("none", "balanced"):
        raise ValueError(f"unknown weighting {weighting!r}")
    n = data.n
    if n < 2:
        raise ValueError("need at least 2 instances to build pairs")

    i_idx = np.repeat(np.arange(n), n)
    j_idx = np.tile(np.arange(n), n)
    if not include_self:
        keep = i_idx != j_idx
        i_idx, j_idx = i_idx[keep], j_idx[keep]

    Z = joint_features_batch(data.X[i_idx], data.X[j_idx])
    labels = (data.y[i_idx] == data.y[j_idx]).astype(int)
    p = labels.size
    n_pos = int(labels.sum())
    n_neg = p - n_pos

    if weighting == "balanced":
        if n_pos == 0 or n_neg == 0:
            raise DegenerateDatasetError(
                f"pair dataset has {n_pos} positive and {n_neg} negative pairs; "
                "balanced weighting needs both"
            )
        weights = np.where(labels == 1, p / (2.0 * n_pos), p / (2.0 * n_neg))
    else:
        weights = np.ones(p)

    return PairDataset(
        Z=Z,
        labels=labels,
        weights=weights,
        source_index_pairs=np.column_stack([i_idx, j_idx]),
    )
