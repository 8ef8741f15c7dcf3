"""Seeded synthetic 2-D datasets and CSV export for the benchmark suite."""

from __future__ import annotations

import csv

import numpy as np


def make_moons(n: int = 200, noise: float = 0.2, seed: int = 0):
    """Two interleaved half-circles."""
    rng = np.random.default_rng(seed)
    n_top = n // 2
    n_bot = n - n_top
    t_top = np.pi * rng.random(n_top)
    t_bot = np.pi * rng.random(n_bot)
    X = np.vstack([
        np.column_stack([np.cos(t_top), np.sin(t_top)]),
        np.column_stack([1.0 - np.cos(t_bot), 0.5 - np.sin(t_bot)]),
    ])
    y = np.concatenate([np.zeros(n_top, dtype=int), np.ones(n_bot, dtype=int)])
    X += rng.normal(scale=noise, size=X.shape)
    return X, y


def make_circles(n: int = 200, noise: float = 0.1, factor: float = 0.5, seed: int = 0):
    """A small circle inside a larger one."""
    rng = np.random.default_rng(seed)
    n_out = n // 2
    n_in = n - n_out
    t_out = 2 * np.pi * rng.random(n_out)
    t_in = 2 * np.pi * rng.random(n_in)
    X = np.vstack([
        np.column_stack([np.cos(t_out), np.sin(t_out)]),
        factor * np.column_stack([np.cos(t_in), np.sin(t_in)]),
    ])
    y = np.concatenate([np.zeros(n_out, dtype=int), np.ones(n_in, dtype=int)])
    X += rng.normal(scale=noise, size=X.shape)
    return X, y


def make_blobs(n: int = 200, centers=None, std: float = 1.0, seed: int = 0):
    """Isotropic Gaussian clusters, one class per center."""
    rng = np.random.default_rng(seed)
    if centers is None:
        centers = [(-3.0, 0.0), (3.0, 0.0), (0.0, 3.0)]
    centers = np.asarray(centers, dtype=float)
    k = centers.shape[0]
    counts = [n // k + (1 if i < n % k else 0) for i in range(k)]
    parts, labels = [], []
    for c, cnt in enumerate(counts):
        parts.append(centers[c] + rng.normal(scale=std, size=(cnt, centers.shape[1])))
        labels.append(np.full(cnt, c, dtype=int))
    return np.vstack(parts), np.concatenate(labels)


def save_csv(path, X, y, class_names=None, feature_names=None):
    X = np.asarray(X)
    y = np.asarray(y)
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(X.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(feature_names) + ["target"])
        for row, label in zip(X, y):
            name = class_names[label] if class_names is not None else f"c{label}"
            writer.writerow([f"{v:.6f}" for v in row] + [name])


SYNTHETIC_SUITE = {
    "moons_low_noise": lambda: make_moons(130, noise=0.15, seed=11),
    "moons_high_noise": lambda: make_moons(130, noise=0.3, seed=12),
    "circles_tight": lambda: make_circles(130, noise=0.08, factor=0.5, seed=13),
    "circles_loose": lambda: make_circles(130, noise=0.15, factor=0.6, seed=14),
    "blobs3_separated": lambda: make_blobs(130, std=1.0, seed=15),
    "blobs3_overlapping": lambda: make_blobs(130, std=2.0, seed=16),
    "blobs4_grid": lambda: make_blobs(
        130, centers=[(-3, -3), (3, -3), (-3, 3), (3, 3)], std=1.8, seed=17
    ),
}


def write_synthetic_suite(directory):
    """Write the built-in synthetic datasets as CSVs; returns the paths."""
    import os

    paths = []
    for name, maker in SYNTHETIC_SUITE.items():
        X, y = maker()
        path = os.path.join(directory, f"{name}.csv")
        save_csv(path, X, y)
        paths.append(path)
    return paths
