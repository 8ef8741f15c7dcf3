"""The pairwise-difference classifier (PDC).

A single binary learner gamma is trained to answer "do these two instances
share a class?" on the pair dataset.  At query time the input is paired
with every stored anchor; each anchor's symmetrized probability updates the
class prior into a posterior, and the posteriors are averaged.  The argmax
of the average is the predicted class.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .base_learners import make_base_learner, model_from_dict, model_to_dict
from .data import ClassPrior, ProcessedDataset, class_prior
from .pairing import build_pair_dataset, joint_features_batch

MODEL_FORMAT_VERSION = 1


@dataclass
class PdcConfig:
    include_self_pairs: bool = True
    weighting: str = "balanced"  # none | balanced
    anchor_count: int | None = None  # None = keep every training point
    anchor_seed: int | None = None
    prior_smoothing: bool = False

    def to_dict(self) -> dict:
        return {
            "include_self_pairs": self.include_self_pairs,
            "weighting": self.weighting,
            "anchor_count": self.anchor_count,
            "anchor_seed": self.anchor_seed,
            "prior_smoothing": self.prior_smoothing,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PdcConfig":
        return cls(**d)


def posterior_for_anchor(prior: ClassPrior, y_anchor: int, g: float) -> np.ndarray:
    """Bayesian update of the prior given same-class probability g for one anchor.

    The anchor's class gets probability g; every other class keeps its prior
    proportion of the remaining 1 - g mass.
    """
    p = prior.p
    if p[y_anchor] >= 1.0:
        raise ValueError(
            f"prior of anchor class {y_anchor} is 1; posterior undefined "
            "(enable prior smoothing)"
        )
    post = p * ((1.0 - g) / (1.0 - p[y_anchor]))
    post[y_anchor] = g
    return post


class PdcClassifier:
    """Meta-classifier reducing K classes to one binary same-class problem."""

    def __init__(self, base: str = "tree", base_params: dict | None = None,
                 config: PdcConfig | None = None, base_factory=None):
        self.base = base
        self.base_params = dict(base_params or {})
        self.config = config if config is not None else PdcConfig()
        self.base_factory = base_factory  # overrides (base, base_params) when given
        self.gamma_ = None
        self.anchors_X_ = None
        self.anchors_y_ = None
        self.prior_: ClassPrior | None = None
        self.class_names_: list[str] | None = None

    # -- fitting ---------------------------------------------------------

    def fit(self, data: ProcessedDataset) -> "PdcClassifier":
        if data.K < 2:
            raise ValueError("need at least 2 classes")
        if data.n < 2:
            raise ValueError("need at least 2 training instances")

        pairs = build_pair_dataset(
            data,
            include_self=self.config.include_self_pairs,
            weighting=self.config.weighting,
        )
        gamma = (
            self.base_factory()
            if self.base_factory is not None
            else make_base_learner(self.base, self.base_params)
        )
        gamma.fit(pairs.Z, pairs.labels, pairs.weights, n_classes=2)
        self.gamma_ = gamma

        if self.config.anchor_count is None or self.config.anchor_count >= data.n:
            anchor_idx = np.arange(data.n)
        else:
            rng = np.random.default_rng(self.config.anchor_seed)
            anchor_idx = np.sort(rng.choice(data.n, self.config.anchor_count, replace=False))
        self.anchors_X_ = data.X[anchor_idx]
        self.anchors_y_ = data.y[anchor_idx]
        self.class_names_ = list(data.class_names)

        smoothing = self.config.prior_smoothing
        prior = class_prior(data, smoothing=smoothing)
        if not smoothing and np.any(prior.p[self.anchors_y_] >= 1.0):
            warnings.warn(
                "an anchor class has prior 1; forcing Laplace-smoothed prior",
                RuntimeWarning,
            )
            prior = class_prior(data, smoothing=True)
        self.prior_ = prior
        return self

    @property
    def n_anchors(self) -> int:
        return self.anchors_y_.size

    @property
    def K(self) -> int:
        return len(self.class_names_)

    def _check_fitted(self):
        if self.gamma_ is None:
            raise RuntimeError("model is not fitted")

    # -- prediction ------------------------------------------------------

    def gamma_sym(self, x, x_anchor) -> float:
        """Order-symmetrized same-class probability for one pair."""
        self._check_fitted()
        x = np.asarray(x, dtype=float)
        x_anchor = np.asarray(x_anchor, dtype=float)
        if x.shape != x_anchor.shape:
            raise ValueError("feature length mismatch")
        Z = joint_features_batch(
            np.vstack([x, x_anchor]), np.vstack([x_anchor, x])
        )
        g = self.gamma_.predict_prob(Z)
        return float((g[0] + g[1]) / 2.0)

    def _gamma_sym_anchors(self, x: np.ndarray) -> np.ndarray:
        """Symmetrized probability against every anchor: one batched call of 2A rows."""
        A = self.n_anchors
        X_rep = np.broadcast_to(x, (A, x.size))
        Z = np.vstack([
            joint_features_batch(X_rep, self.anchors_X_),
            joint_features_batch(self.anchors_X_, X_rep),
        ])
        g = self.gamma_.predict_prob(Z)
        return (g[:A] + g[A:]) / 2.0

    def per_anchor_posteriors(self, x) -> np.ndarray:
        """A x K matrix of per-anchor posterior distributions."""
        self._check_fitted()
        x = np.asarray(x, dtype=float)
        g = self._gamma_sym_anchors(x)
        posteriors = np.empty((self.n_anchors, self.K))
        for i in range(self.n_anchors):
            posteriors[i] = posterior_for_anchor(self.prior_, int(self.anchors_y_[i]), g[i])
        return posteriors

    def predict_proba(self, x) -> np.ndarray:
        """Average of the per-anchor posteriors, in stored anchor order."""
        posteriors = self.per_anchor_posteriors(x)
        total = np.zeros(self.K)
        for row in posteriors:  # sequential summation, reproducible
            total += row
        return total / self.n_anchors

    def predict(self, x) -> int:
        return int(np.argmax(self.predict_proba(x)))  # ties -> lowest index

    def predict_batch(self, X, return_proba: bool = False):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("expected a 2-D query matrix")
        probs = np.empty((X.shape[0], self.K))
        for i in range(X.shape[0]):
            probs[i] = self.predict_proba(X[i])
        preds = np.argmax(probs, axis=1)
        if return_proba:
            return preds, probs
        return preds

    def with_anchor_subset(self, indices) -> "PdcClassifier":
        """Copy sharing the fitted gamma but restricted to the given anchors."""
        self._check_fitted()
        indices = np.asarray(indices, dtype=int)
        clone = PdcClassifier(self.base, self.base_params, replace(self.config))
        clone.gamma_ = self.gamma_
        clone.anchors_X_ = self.anchors_X_[indices]
        clone.anchors_y_ = self.anchors_y_[indices]
        clone.class_names_ = self.class_names_
        prior = self.prior_
        if np.any(prior.p[clone.anchors_y_] >= 1.0):
            raise ValueError("anchor subset hits a prior-1 class; refit with smoothing")
        clone.prior_ = prior
        return clone

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "base": self.base,
            "base_params": self.base_params,
            "config": self.config.to_dict(),
            "prior": [repr(float(v)) for v in self.prior_.p],
            "class_names": self.class_names_,
            "anchors_X": [[repr(float(v)) for v in row] for row in self.anchors_X_],
            "anchors_y": self.anchors_y_.tolist(),
            "gamma": model_to_dict(self.gamma_),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PdcClassifier":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
        model = cls(d["base"], d["base_params"], PdcConfig.from_dict(d["config"]))
        model.gamma_ = model_from_dict(d["gamma"])
        model.prior_ = ClassPrior(np.array([float(v) for v in d["prior"]]))
        model.class_names_ = list(d["class_names"])
        model.anchors_X_ = np.array([[float(v) for v in row] for row in d["anchors_X"]])
        model.anchors_y_ = np.asarray(d["anchors_y"], dtype=int)
        return model
