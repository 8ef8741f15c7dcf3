import json

import numpy as np
import pytest

from pairdiff.base_learners import (
    DecisionTreeClassifier,
    ForestClassifier,
    KnnClassifier,
    fit_tree,
    gini_impurity,
    make_base_learner,
    model_from_dict,
    model_to_dict,
    predict_tree,
)


class TestGini:
    def test_symmetric_maximum(self):
        assert gini_impurity(2, 2) == pytest.approx(0.5)

    def test_pure_node(self):
        assert gini_impurity(3, 0) == 0.0

    def test_direct_substitution(self):
        assert gini_impurity(1, 3) == pytest.approx(0.375)

    def test_zero_mass_errors(self):
        with pytest.raises(ValueError):
            gini_impurity(0, 0)


class TestDecisionTree:
    def test_exact_split_at_midpoint(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 0, 1, 1])
        root = fit_tree(X, y)
        assert root.feature == 0
        assert root.threshold == pytest.approx(2.5)
        assert root.left.is_leaf and root.right.is_leaf
        assert root.left.leaf_probability() == 0.0
        assert root.right.leaf_probability() == 1.0

    def test_pure_labels_single_leaf(self):
        root = fit_tree(np.array([[1.0], [2.0]]), np.array([1, 1]))
        assert root.is_leaf
        assert root.leaf_probability() == 1.0

    def test_max_depth_zero(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 0, 1, 1])
        root = fit_tree(X, y, max_depth=0)
        assert root.is_leaf
        assert root.leaf_probability() == pytest.approx(0.5)

    def test_predict_routing(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 0, 1, 1])
        root = fit_tree(X, y)
        assert predict_tree(root, [1.0]) == 0.0
        assert predict_tree(root, [2.5]) == 0.0  # boundary routes left
        assert predict_tree(root, [4.0]) == 1.0

    def test_constant_leaf_prediction(self):
        root = fit_tree(np.zeros((4, 1)), np.array([1, 1, 1, 0]))
        assert predict_tree(root, [123.0]) == pytest.approx(0.75)

    def test_weight_scale_invariance(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 3))
        y = rng.integers(0, 2, 40)
        w = rng.uniform(0.5, 2.0, 40)
        a = DecisionTreeClassifier().fit(X, y, w, n_classes=2)
        b = DecisionTreeClassifier().fit(X, y, 2.0 * w, n_classes=2)
        Xq = rng.normal(size=(30, 3))
        assert np.array_equal(a.predict_prob(Xq), b.predict_prob(Xq))

    def test_separable_data_pure_leaves(self):
        rng = np.random.default_rng(6)
        X = np.vstack([rng.normal(-5, 0.5, (20, 1)), rng.normal(5, 0.5, (20, 1))])
        y = np.array([0] * 20 + [1] * 20)
        model = DecisionTreeClassifier().fit(X, y, n_classes=2)
        probs = model.predict_prob(X)
        assert np.array_equal(probs, y.astype(float))

    def test_tie_breaks_lowest_feature(self):
        # identical columns: both features give the same impurity; pick feature 0
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
        y = np.array([0, 0, 1, 1])
        root = fit_tree(X, y)
        assert root.feature == 0

    def test_random_mode_deterministic(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 2, 50)
        a = DecisionTreeClassifier(split_mode="random", seed=3).fit(X, y, n_classes=2)
        b = DecisionTreeClassifier(split_mode="random", seed=3).fit(X, y, n_classes=2)
        Xq = rng.normal(size=(20, 4))
        assert np.array_equal(a.predict_prob(Xq), b.predict_prob(Xq))

    def test_multiclass_probabilities(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(60, 2))
        y = rng.integers(0, 3, 60)
        model = DecisionTreeClassifier(max_depth=3).fit(X, y, n_classes=3)
        probs = model.predict_proba(X)
        assert probs.shape == (60, 3)
        assert np.allclose(probs.sum(axis=1), 1.0)

    def test_dimension_mismatch(self):
        model = DecisionTreeClassifier().fit(np.zeros((4, 2)), np.array([0, 1, 0, 1]))
        with pytest.raises(ValueError):
            model.predict_proba(np.zeros((2, 3)))


class TestDegenerateMidpoint:
    def test_adjacent_floats_never_produce_empty_child(self):
        # the midpoint of two adjacent floats rounds up to the upper value;
        # the split must then use the lower value so both children stay
        # non-empty and fitting terminates
        a = float(np.nextafter(1.0, np.inf))
        b = float(np.nextafter(a, np.inf))
        assert (a + b) / 2.0 == b
        X = np.array([[a], [a], [b], [b]])
        y = np.array([0, 1, 1, 1])
        tree = DecisionTreeClassifier().fit(X, y, n_classes=2)
        root = tree.root_
        assert root.threshold == a
        left = tree.predict_proba(np.array([[a]]))[0]
        right = tree.predict_proba(np.array([[b]]))[0]
        assert left[1] == pytest.approx(0.5)
        assert right[1] == 1.0

    def test_noisy_duplicate_heavy_data_terminates_quickly(self):
        rng = np.random.default_rng(13)
        X = np.round(rng.normal(size=(3000, 4)), 1)  # heavy value duplication
        y = rng.integers(0, 2, 3000)
        tree = DecisionTreeClassifier(seed=0).fit(X, y, n_classes=2)
        # every split must separate at least one sample from the rest
        ft = tree.tree_
        for i in range(ft.n_nodes):
            if ft.feature[i] >= 0:
                assert ft.masses[ft.left[i]].sum() > 0
                assert ft.masses[ft.right[i]].sum() > 0


class TestForest:
    def test_single_tree_no_bootstrap_equals_tree(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(30, 3))
        y = rng.integers(0, 2, 30)
        forest = ForestClassifier(n_trees=1, mode="bagging", bootstrap=False, seed=0)
        forest.fit(X, y, n_classes=2)
        tree = DecisionTreeClassifier(seed=0).fit(X, y, n_classes=2)
        Xq = rng.normal(size=(20, 3))
        assert np.array_equal(forest.predict_prob(Xq), tree.predict_prob(Xq))

    def test_prediction_is_mean_of_trees(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(40, 2))
        y = rng.integers(0, 2, 40)
        forest = ForestClassifier(n_trees=5, mode="extra", seed=1).fit(X, y, n_classes=2)
        Xq = rng.normal(size=(15, 2))
        member_mean = sum(t.predict_proba(Xq) for t in forest.trees_) / 5
        assert np.allclose(forest.predict_proba(Xq), member_mean, atol=1e-15)

    def test_seed_reproducibility(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(40, 2))
        y = rng.integers(0, 2, 40)
        Xq = rng.normal(size=(10, 2))
        a = ForestClassifier(n_trees=7, mode="bagging", seed=5).fit(X, y, n_classes=2)
        b = ForestClassifier(n_trees=7, mode="bagging", seed=5).fit(X, y, n_classes=2)
        assert np.array_equal(a.predict_prob(Xq), b.predict_prob(Xq))

    def test_zero_trees_rejected(self):
        with pytest.raises(ValueError):
            ForestClassifier(n_trees=0)


class TestKnn:
    def test_three_neighbor_vote(self):
        X = np.array([[0.0], [0.1], [0.2], [9.0]])
        y = np.array([1, 1, 0, 0])
        model = KnnClassifier(k=3).fit(X, y, n_classes=2)
        assert model.predict_prob(np.array([[0.05]]))[0] == pytest.approx(2 / 3)

    def test_k1_is_binary(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(20, 2))
        y = rng.integers(0, 2, 20)
        model = KnnClassifier(k=1).fit(X, y, n_classes=2)
        probs = model.predict_prob(rng.normal(size=(50, 2)))
        assert set(np.unique(probs)) <= {0.0, 1.0}

    def test_distance_tie_prefers_lower_index(self):
        # query at 0 is equidistant to -1 (index 1, label 0) and +1 (index 2, label 1)
        X = np.array([[5.0], [-1.0], [1.0]])
        y = np.array([0, 0, 1])
        model = KnnClassifier(k=2).fit(X, y, n_classes=2)
        nearest = model._neighbors(np.array([[0.0]]))
        assert nearest[0].tolist() == [1, 2]
        # k=1: the tie itself decides the winner
        model1 = KnnClassifier(k=1).fit(X, y, n_classes=2)
        assert model1.predict_prob(np.array([[0.0]]))[0] == 0.0

    def test_four_level_granularity(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(50, 2))
        y = rng.integers(0, 2, 50)
        model = KnnClassifier(k=3).fit(X, y, n_classes=2)
        probs = model.predict_prob(rng.normal(size=(200, 2)))
        assert set(np.round(probs, 9)) <= {0.0, round(1 / 3, 9), round(2 / 3, 9), 1.0}

    def test_k_exceeds_samples(self):
        with pytest.raises(ValueError):
            KnnClassifier(k=5).fit(np.zeros((3, 1)), np.array([0, 1, 0]))

    def test_weighted_vote(self):
        X = np.array([[0.0], [0.1], [0.2]])
        y = np.array([1, 0, 0])
        w = np.array([2.0, 1.0, 1.0])
        model = KnnClassifier(k=3).fit(X, y, w, n_classes=2)
        assert model.predict_prob(np.array([[0.0]]))[0] == pytest.approx(0.5)


class TestContract:
    @pytest.mark.parametrize("name", ["tree", "extra", "forest", "extra-forest", "knn"])
    def test_outputs_in_unit_interval_and_reproducible(self, name):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(60, 4))
        y = rng.integers(0, 2, 60)
        w = rng.uniform(0.5, 1.5, 60)
        Xq = rng.normal(size=(40, 4))
        params = {"seed": 3, "n_trees": 5, "k": 3}
        a = make_base_learner(name, params).fit(X, y, w, n_classes=2)
        b = make_base_learner(name, params).fit(X, y, w, n_classes=2)
        pa, pb = a.predict_prob(Xq), b.predict_prob(Xq)
        assert np.all((pa >= 0) & (pa <= 1))
        assert np.array_equal(pa, pb)

    def test_fit_does_not_mutate_inputs(self):
        rng = np.random.default_rng(15)
        X = rng.normal(size=(30, 3))
        y = rng.integers(0, 2, 30)
        w = rng.uniform(0.5, 1.5, 30)
        snapshot = (X.copy(), y.copy(), w.copy())
        make_base_learner("tree", {}).fit(X, y, w, n_classes=2)
        assert np.array_equal(X, snapshot[0])
        assert np.array_equal(y, snapshot[1])
        assert np.array_equal(w, snapshot[2])

    def test_unknown_learner(self):
        with pytest.raises(ValueError):
            make_base_learner("svm", {})


class TestSerialization:
    @pytest.mark.parametrize("name", ["tree", "extra", "forest", "extra-forest", "knn"])
    def test_json_roundtrip_bitwise(self, name):
        rng = np.random.default_rng(16)
        X = rng.normal(size=(40, 3))
        y = rng.integers(0, 2, 40)
        Xq = rng.normal(size=(25, 3))
        model = make_base_learner(name, {"seed": 2, "n_trees": 3, "k": 3})
        model.fit(X, y, n_classes=2)
        payload = json.dumps(model_to_dict(model))
        clone = model_from_dict(json.loads(payload))
        assert np.array_equal(model.predict_prob(Xq), clone.predict_prob(Xq))

    def test_version_check(self):
        with pytest.raises(ValueError):
            model_from_dict({"version": 99, "kind": "tree"})
