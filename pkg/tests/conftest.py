import numpy as np
import pytest

from pairdiff.data import ClassPrior, ProcessedDataset
from pairdiff.pdc import PdcClassifier, PdcConfig

_MIX = np.array([0.37, -1.21, 0.83, 2.05, -0.44, 1.59, -2.33, 0.71, 1.13, -0.95])


def stub_gamma_fn(z):
    """Deterministic probability in (0, 1) from a pair-feature row."""
    z = np.asarray(z, dtype=float)
    v = _MIX[: z.size] if z.size <= _MIX.size else np.resize(_MIX, z.size)
    return (np.sin(float(z @ v)) + 1.0) / 2.0


class StubGamma:
    """Table-free deterministic stand-in for the binary pair learner.

    Counts predict calls and rows so tests can audit how many base-learner
    evaluations a query issues.
    """

    def __init__(self, fn=stub_gamma_fn):
        self.fn = fn
        self.n_calls = 0
        self.n_rows = 0

    def fit(self, Z, y, sample_weight=None, n_classes=None):
        return self

    def predict_prob(self, Z):
        Z = np.asarray(Z, dtype=float)
        self.n_calls += 1
        self.n_rows += Z.shape[0]
        return np.array([self.fn(z) for z in Z])


def make_stub_model(anchors_X, anchors_y, prior, fn=stub_gamma_fn, class_names=None):
    """PDC model with given anchors/prior and a stub gamma, bypassing fit."""
    anchors_X = np.asarray(anchors_X, dtype=float)
    anchors_y = np.asarray(anchors_y, dtype=int)
    prior = np.asarray(prior, dtype=float)
    model = PdcClassifier(config=PdcConfig())
    model.gamma_ = StubGamma(fn)
    model.anchors_X_ = anchors_X
    model.anchors_y_ = anchors_y
    model.prior_ = ClassPrior(prior)
    model.class_names_ = class_names or [f"c{k}" for k in range(prior.size)]
    return model


def brute_force_posterior(x, anchors_X, anchors_y, prior, fn=stub_gamma_fn):
    """Independent evaluation of symmetrization, per-anchor update, averaging."""
    x = np.asarray(x, dtype=float)
    prior = np.asarray(prior, dtype=float)
    K = prior.size
    total = np.zeros(K)
    for xa, ya in zip(np.asarray(anchors_X, dtype=float), anchors_y):
        g1 = fn(np.concatenate([x, xa, x - xa]))
        g2 = fn(np.concatenate([xa, x, xa - x]))
        g = (g1 + g2) / 2.0
        post = np.empty(K)
        for c in range(K):
            post[c] = g if c == ya else prior[c] * (1.0 - g) / (1.0 - prior[ya])
        total += post
    return total / len(anchors_y)


@pytest.fixture
def tiny_dataset():
    """Two well-separated 2-D classes, 3 points each."""
    X = np.array([[0.0, 0.0], [0.1, 0.2], [0.2, -0.1], [3.0, 3.0], [3.1, 2.8], [2.9, 3.2]])
    y = np.array([0, 0, 0, 1, 1, 1])
    return ProcessedDataset(X=X, y=y, class_names=["a", "b"])


def random_processed(rng, n, K, F=2):
    """Random dataset guaranteed to contain every class at least once."""
    X = rng.normal(size=(n, F))
    y = np.concatenate([np.arange(K), rng.integers(0, K, n - K)])
    rng.shuffle(y)
    return ProcessedDataset(X=X, y=y, class_names=[f"c{k}" for k in range(K)])
