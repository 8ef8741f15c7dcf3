import numpy as np
import pytest
from conftest import make_stub_model, random_processed

from pairdiff.pdc import PdcClassifier
from pairdiff.uncertainty import shannon_entropy, uncertainty_report


class TestShannonEntropy:
    def test_uniform_four(self):
        assert shannon_entropy([0.25] * 4) == pytest.approx(2.0)

    def test_degenerate(self):
        assert shannon_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_mixed(self):
        assert shannon_entropy([0.5, 0.25, 0.25]) == pytest.approx(1.5)

    def test_negative_entries_rejected(self):
        with pytest.raises(ValueError):
            shannon_entropy([1.1, -0.1])

    def test_bad_sum_rejected(self):
        with pytest.raises(ValueError):
            shannon_entropy([0.5, 0.4])


def model_with_fixed_posteriors(posteriors):
    """Stub PDC whose per-anchor posteriors are exactly the given K=2 rows."""
    posteriors = np.asarray(posteriors, dtype=float)
    # anchor i has class 0 and g_i = posterior[i, 0]; with prior (0.5, 0.5) the
    # other entry becomes 0.5 (1 - g) / 0.5 = 1 - g, matching posterior[i, 1]
    gs = posteriors[:, 0]

    def fn(z):
        a = z[0] if z[0] != 77.0 else z[1]
        return gs[int(a)]

    anchors = [[float(i)] for i in range(len(gs))]
    return make_stub_model(anchors, [0] * len(gs), [0.5, 0.5], fn)


class TestUncertaintyReport:
    def test_zero_disagreement(self):
        model = model_with_fixed_posteriors([[0.8, 0.2], [0.8, 0.2]])
        rep = uncertainty_report(model, [77.0])
        assert rep.eu == pytest.approx(0.0, abs=1e-12)
        assert rep.tu == pytest.approx(rep.au)

    def test_maximal_disagreement(self):
        model = model_with_fixed_posteriors([[1.0, 0.0], [0.0, 1.0]])
        rep = uncertainty_report(model, [77.0])
        assert rep.tu == pytest.approx(1.0)
        assert rep.au == pytest.approx(0.0)
        assert rep.eu == pytest.approx(1.0)

    def test_worked_example(self):
        model = model_with_fixed_posteriors([[0.9, 0.1], [0.7, 0.3]])
        rep = uncertainty_report(model, [77.0])
        assert rep.tu == pytest.approx(0.721928, abs=1e-4)
        assert rep.au == pytest.approx(0.675145, abs=1e-4)
        assert rep.eu == pytest.approx(0.046783, abs=1e-4)
        assert np.allclose(rep.per_anchor_entropies, [0.468996, 0.881291], atol=1e-4)

    def test_invariants_random(self, tiny_dataset):
        model = PdcClassifier("tree", {"seed": 0}).fit(tiny_dataset)
        rng = np.random.default_rng(0)
        for _ in range(50):
            rep = uncertainty_report(model, rng.normal(size=2))
            assert rep.eu >= -1e-9
            assert rep.tu <= 1.0 + 1e-9  # log2(K=2)
            assert rep.tu - rep.au == pytest.approx(rep.eu, abs=1e-12)

    def test_anchor_permutation_invariance(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(6, 2))
        y = np.array([0, 1, 0, 1, 0, 1])
        model = make_stub_model(X, y, [0.5, 0.5])
        q = rng.normal(size=2)
        rep = uncertainty_report(model, q)
        perm = rng.permutation(6)
        rep_p = uncertainty_report(make_stub_model(X[perm], y[perm], [0.5, 0.5]), q)
        assert rep.tu == pytest.approx(rep_p.tu, abs=1e-12)
        assert rep.au == pytest.approx(rep_p.au, abs=1e-12)
