"""Total / aleatoric / epistemic uncertainty from per-anchor posteriors.

Total uncertainty is the Shannon entropy (base 2) of the averaged posterior,
aleatoric uncertainty is the mean of the per-anchor posterior entropies, and
epistemic uncertainty is their difference.  By concavity of entropy the
epistemic part is nonnegative and vanishes exactly when all anchors agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pdc import PdcClassifier


@dataclass
class UncertaintyReport:
    tu: float  # bits
    au: float  # bits
    eu: float  # bits, tu - au
    per_anchor_entropies: np.ndarray


def shannon_entropy(p) -> float:
    """-sum p log2 p with 0 log 0 := 0, in bits."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {p.sum()}, expected 1")
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum() + 0.0)  # +0.0 avoids -0.0


def uncertainty_report(model: PdcClassifier, x) -> UncertaintyReport:
    posteriors = model.per_anchor_posteriors(x)
    mean_posterior = posteriors.mean(axis=0)
    per_anchor = np.array([shannon_entropy(row) for row in posteriors])
    tu = shannon_entropy(mean_posterior)
    au = float(per_anchor.mean())
    return UncertaintyReport(tu=tu, au=au, eu=tu - au, per_anchor_entropies=per_anchor)
