"""Built-in probabilistic classifiers: CART trees, forests, and k-NN.

All learners share the same contract: ``fit(X, y, sample_weight)`` and
``predict_proba(X)`` returning per-class probabilities; binary models also
expose ``predict_prob`` (probability of class 1).  Fitting is deterministic
given the seed, and fitted models are immutable.

Trees route a sample left when ``x[feature] <= threshold``.  Exact mode
scans midpoints between consecutive distinct sorted values and minimizes
weighted Gini impurity of the children; random mode (extremely randomized)
draws one uniform threshold per feature.  Ties are broken by lowest feature
index, then lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SERIALIZATION_VERSION = 1


def gini_impurity(pos_mass: float, neg_mass: float) -> float:
    """2 p (1-p) for the binary split criterion; in [0, 0.5]."""
    total = pos_mass + neg_mass
    if total <= 0:
        raise ValueError("total mass must be positive")
    p = pos_mass / total
    return 2.0 * p * (1.0 - p)


@dataclass
class TreeNode:
    """Either a split (feature, threshold, children) or a leaf (class masses)."""

    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    class_masses: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.class_masses is not None

    def leaf_probability(self) -> float:
        """Positive fraction of a binary leaf."""
        masses = self.class_masses
        return float(masses[1] / masses.sum())


class _FlatTree:
    """Array-of-nodes representation for fast batched routing."""

    def __init__(self, feature, threshold, left, right, masses):
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.masses = np.asarray(masses, dtype=float)  # node_count x C

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=int)
        while True:
            active = self.feature[node] >= 0
            if not active.any():
                break
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
        leaf_masses = self.masses[node]
        return leaf_masses / leaf_masses.sum(axis=1, keepdims=True)

    def to_nodes(self) -> TreeNode:
        nodes = [TreeNode() for _ in range(self.n_nodes)]
        for i in range(self.n_nodes):
            if self.feature[i] < 0:
                nodes[i].class_masses = self.masses[i].copy()
            else:
                nodes[i].feature = int(self.feature[i])
                nodes[i].threshold = float(self.threshold[i])
                nodes[i].left = nodes[self.left[i]]
                nodes[i].right = nodes[self.right[i]]
        return nodes[0]


def _class_weight_matrix(y, w, n_classes):
    mat = np.zeros((y.size, n_classes))
    mat[np.arange(y.size), y] = w
    return mat


def _best_split_exact(X, wc, min_samples_leaf, min_weight_leaf):
    """Scan all midpoint candidates; return (feature, threshold, cost) or None."""
    n, m = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    Xs = np.take_along_axis(X, order, axis=0)
    wc_sorted = wc[order]  # (n, m, C)
    csum = np.cumsum(wc_sorted, axis=0)
    total_c = csum[-1]  # (m, C), identical across features
    total_w = total_c.sum(axis=1)  # (m,)

    left_c = csum[:-1]  # split after position s: rows 0..s go left
    left_w = left_c.sum(axis=2)
    right_c = total_c[None, :, :] - left_c
    right_w = total_w[None, :] - left_w

    valid = Xs[:-1] < Xs[1:]
    counts_left = np.arange(1, n)[:, None]
    valid &= (counts_left >= min_samples_leaf) & (n - counts_left >= min_samples_leaf)
    valid &= (left_w >= min_weight_leaf) & (right_w >= min_weight_leaf)
    if not valid.any():
        return None

    with np.errstate(divide="ignore", invalid="ignore"):
        gini_l = 1.0 - np.square(left_c / left_w[:, :, None]).sum(axis=2)
        gini_r = 1.0 - np.square(right_c / right_w[:, :, None]).sum(axis=2)
    cost = left_w * gini_l + right_w * gini_r
    cost[~valid] = np.inf

    best = cost.min()
    positions, features = np.nonzero(cost == best)
    lower = Xs[positions, features]
    upper = Xs[positions + 1, features]
    thresholds = (lower + upper) / 2.0
    # the midpoint of two adjacent floats can round up to the upper value,
    # which would send the whole node left; fall back to the lower value,
    # which selects the same partition under the <=-goes-left rule
    thresholds = np.where(thresholds < upper, thresholds, lower)
    pick = np.lexsort((thresholds, features))[0]
    return int(features[pick]), float(thresholds[pick]), float(best)


def _best_split_random(X, wc, min_samples_leaf, min_weight_leaf, rng):
    """One uniform threshold per feature; pick the lowest-cost valid one."""
    n, m = X.shape
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    thresholds = rng.uniform(lo, hi)  # lo == hi yields lo, masked below

    left_mask = X <= thresholds  # (n, m)
    counts_left = left_mask.sum(axis=0)
    left_c = np.einsum("nc,nm->mc", wc, left_mask)
    total_c = wc.sum(axis=0)
    right_c = total_c[None, :] - left_c
    left_w = left_c.sum(axis=1)
    right_w = right_c.sum(axis=1)

    valid = (counts_left >= min_samples_leaf) & (n - counts_left >= min_samples_leaf)
    valid &= (counts_left > 0) & (counts_left < n)
    valid &= (left_w >= min_weight_leaf) & (right_w >= min_weight_leaf)
    if not valid.any():
        return None

    with np.errstate(divide="ignore", invalid="ignore"):
        gini_l = 1.0 - np.square(left_c / left_w[:, None]).sum(axis=1)
        gini_r = 1.0 - np.square(right_c / right_w[:, None]).sum(axis=1)
    cost = left_w * gini_l + right_w * gini_r
    cost[~valid] = np.inf

    best = cost.min()
    features = np.flatnonzero(cost == best)
    pick = np.lexsort((thresholds[features], features))[0]
    f = int(features[pick])
    return f, float(thresholds[f]), float(best)


class DecisionTreeClassifier:
    """Weighted CART with exact or random (extremely randomized) splits."""

    def __init__(
        self,
        max_depth: int | None = None,
        min_samples_leaf: int = 1,
        min_weight_fraction: float = 0.0,
        split_mode: str = "exact",
        seed: int | None = None,
    ):
        if split_mode not in ("exact", "random"):
            raise ValueError(f"unknown split_mode {split_mode!r}")
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.min_weight_fraction = min_weight_fraction
        self.split_mode = split_mode
        self.seed = seed
        self.tree_: _FlatTree | None = None
        self.n_classes_: int | None = None
        self.n_features_: int | None = None

    def get_params(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "min_weight_fraction": self.min_weight_fraction,
            "split_mode": self.split_mode,
            "seed": self.seed,
        }

    def fit(self, X, y, sample_weight=None, n_classes: int | None = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if X.ndim != 2 or X.shape[0] != y.size or y.size == 0:
            raise ValueError("X must be 2-D and aligned with a non-empty y")
        w = np.ones(y.size) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        if np.any(w <= 0):
            raise ValueError("sample weights must be positive")
        C = n_classes if n_classes is not None else int(y.max()) + 1
        self.n_classes_ = C
        self.n_features_ = X.shape[1]
        min_weight_leaf = self.min_weight_fraction * w.sum()
        rng = np.random.default_rng(self.seed)

        features, thresholds, lefts, rights, masses = [], [], [], [], []

        def new_node():
            features.append(-1)
            thresholds.append(0.0)
            lefts.append(-1)
            rights.append(-1)
            masses.append(np.zeros(C))
            return len(features) - 1

        root = new_node()
        stack = [(np.arange(y.size), 0, root)]
        while stack:
            idx, depth, node_id = stack.pop()
            y_node, w_node = y[idx], w[idx]
            wc = _class_weight_matrix(y_node, w_node, C)
            node_masses = wc.sum(axis=0)
            masses[node_id] = node_masses

            pure = np.count_nonzero(node_masses) <= 1
            depth_stop = self.max_depth is not None and depth >= self.max_depth
            if pure or depth_stop or idx.size < 2 * self.min_samples_leaf:
                continue

            X_node = X[idx]
            if self.split_mode == "exact":
                split = _best_split_exact(X_node, wc, self.min_samples_leaf, min_weight_leaf)
            else:
                split = _best_split_random(X_node, wc, self.min_samples_leaf, min_weight_leaf, rng)
            if split is None:
                continue
            f, t, _ = split
            go_left = X_node[:, f] <= t
            features[node_id] = f
            thresholds[node_id] = t
            left_id = new_node()
            right_id = new_node()
            lefts[node_id] = left_id
            rights[node_id] = right_id
            # push right first so left is processed first (deterministic RNG order)
            stack.append((idx[~go_left], depth + 1, right_id))
            stack.append((idx[go_left], depth + 1, left_id))

        self.tree_ = _FlatTree(features, thresholds, lefts, rights, masses)
        return self

    @property
    def root_(self) -> TreeNode:
        return self.tree_.to_nodes()

    def _check_query(self, X):
        X = np.asarray(X, dtype=float)
        if self.tree_ is None:
            raise RuntimeError("model is not fitted")
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(
                f"expected {self.n_features_} features, got {X.shape[1] if X.ndim == 2 else 'non-2D'}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        return self.tree_.predict_proba(self._check_query(X))

    def predict_prob(self, X) -> np.ndarray:
        if self.n_classes_ != 2:
            raise ValueError("predict_prob requires a binary model")
        return self.predict_proba(X)[:, 1]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


class ForestClassifier:
    """Bagged trees (bootstrap + exact splits) or extremely randomized trees.

    Per-tree seeds derive from the master seed as seed + tree index, so the
    ensemble is reproducible regardless of how trees are scheduled.
    """

    def __init__(
        self,
        n_trees: int = 100,
        mode: str = "bagging",
        max_depth: int | None = None,
        min_samples_leaf: int = 1,
        seed: int | None = None,
        bootstrap: bool | None = None,
    ):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if mode not in ("bagging", "extra"):
            raise ValueError(f"unknown forest mode {mode!r}")
        self.n_trees = n_trees
        self.mode = mode
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed
        self.bootstrap = (mode == "bagging") if bootstrap is None else bootstrap
        self.trees_: list[DecisionTreeClassifier] = []
        self.n_classes_: int | None = None

    def get_params(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "mode": self.mode,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
        }

    def fit(self, X, y, sample_weight=None, n_classes: int | None = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        w = np.ones(y.size) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        C = n_classes if n_classes is not None else int(y.max()) + 1
        self.n_classes_ = C
        base_seed = 0 if self.seed is None else self.seed
        split_mode = "exact" if self.mode == "bagging" else "random"

        self.trees_ = []
        for t in range(self.n_trees):
            tree_seed = base_seed + t
            tree = DecisionTreeClassifier(
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                split_mode=split_mode,
                seed=tree_seed,
            )
            if self.bootstrap:
                rng = np.random.default_rng(tree_seed)
                idx = rng.integers(0, y.size, y.size)
                tree.fit(X[idx], y[idx], w[idx], n_classes=C)
            else:
                tree.fit(X, y, w, n_classes=C)
            self.trees_.append(tree)
        return self

    def predict_proba(self, X) -> np.ndarray:
        acc = self.trees_[0].predict_proba(X)
        for tree in self.trees_[1:]:
            acc = acc + tree.predict_proba(X)
        return acc / self.n_trees

    def predict_prob(self, X) -> np.ndarray:
        if self.n_classes_ != 2:
            raise ValueError("predict_prob requires a binary model")
        return self.predict_proba(X)[:, 1]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


class KnnClassifier:
    """k nearest neighbors by Euclidean distance, weighted vote.

    Distance ties at the k-th slot are broken by lower stored index.  With
    unit weights and k=3 the binary output can only take the four values
    0, 1/3, 2/3, 1.
    """

    def __init__(self, k: int = 3):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.X_ = None
        self.y_ = None
        self.w_ = None
        self.n_classes_: int | None = None
        self._sq_norms = None

    def get_params(self) -> dict:
        return {"k": self.k}

    def fit(self, X, y, sample_weight=None, n_classes: int | None = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if self.k > y.size:
            raise ValueError(f"k={self.k} exceeds sample count {y.size}")
        self.X_ = X
        self.y_ = y
        self.w_ = np.ones(y.size) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        self.n_classes_ = n_classes if n_classes is not None else int(y.max()) + 1
        self._sq_norms = np.square(X).sum(axis=1)
        return self

    def _neighbors(self, Xq: np.ndarray) -> np.ndarray:
        """Indices of the k nearest stored points per query row."""
        n = self.y_.size
        k = self.k
        # squared distances via the expansion |q|^2 + |x|^2 - 2 q.x
        d = (
            np.square(Xq).sum(axis=1, keepdims=True)
            + self._sq_norms[None, :]
            - 2.0 * (Xq @ self.X_.T)
        )
        if k == n:
            return np.broadcast_to(np.arange(n), (Xq.shape[0], n)).copy()
        pad = min(n, k + 16)
        cand = np.argpartition(d, pad - 1, axis=1)[:, :pad]
        cand = np.sort(cand, axis=1)  # ascending index, so stable sort breaks ties low
        d_cand = np.take_along_axis(d, cand, axis=1)
        order = np.argsort(d_cand, axis=1, kind="stable")
        nearest = np.take_along_axis(cand, order[:, :k], axis=1)

        # a tie on the k-th distance may extend past the candidate window
        kth_val = np.take_along_axis(d_cand, order[:, k - 1 : k], axis=1)
        overflow = np.flatnonzero((d <= kth_val).sum(axis=1) > pad)
        for row in overflow:
            eligible = np.flatnonzero(d[row] <= kth_val[row, 0])
            eligible = eligible[np.argsort(d[row, eligible], kind="stable")]
            nearest[row] = eligible[:k]
        return nearest

    def predict_proba(self, Xq) -> np.ndarray:
        Xq = np.asarray(Xq, dtype=float)
        if self.X_ is None:
            raise RuntimeError("model is not fitted")
        if Xq.ndim != 2 or Xq.shape[1] != self.X_.shape[1]:
            raise ValueError("query feature count does not match training data")
        out = np.empty((Xq.shape[0], self.n_classes_))
        # chunk so the distance matrix stays bounded in memory
        chunk = max(1, int(5_000_000 / max(1, self.y_.size)))
        for start in range(0, Xq.shape[0], chunk):
            rows = slice(start, start + chunk)
            nearest = self._neighbors(Xq[rows])
            w = self.w_[nearest]  # (q, k)
            labels = self.y_[nearest]
            votes = np.zeros((nearest.shape[0], self.n_classes_))
            for c in range(self.n_classes_):
                votes[:, c] = np.where(labels == c, w, 0.0).sum(axis=1)
            out[rows] = votes / votes.sum(axis=1, keepdims=True)
        return out

    def predict_prob(self, Xq) -> np.ndarray:
        if self.n_classes_ != 2:
            raise ValueError("predict_prob requires a binary model")
        return self.predict_proba(Xq)[:, 1]

    def predict(self, Xq) -> np.ndarray:
        return np.argmax(self.predict_proba(Xq), axis=1)


# -- convenience wrappers around the tree, in terms of TreeNode ------------


def fit_tree(X, y, sample_weight=None, **params) -> TreeNode:
    model = DecisionTreeClassifier(**params)
    model.fit(X, y, sample_weight, n_classes=2)
    return model.root_


def predict_tree(node: TreeNode, x) -> float:
    x = np.asarray(x, dtype=float)
    while not node.is_leaf:
        if node.feature >= x.size:
            raise ValueError("feature count does not match training data")
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.leaf_probability()


# -- serialization ---------------------------------------------------------


def _flat_tree_to_dict(tree: _FlatTree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": [repr(float(t)) for t in tree.threshold],
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "masses": [[repr(float(v)) for v in row] for row in tree.masses],
    }


def _flat_tree_from_dict(d: dict) -> _FlatTree:
    return _FlatTree(
        d["feature"],
        [float(t) for t in d["threshold"]],
        d["left"],
        d["right"],
        [[float(v) for v in row] for row in d["masses"]],
    )


def model_to_dict(model) -> dict:
    if isinstance(model, DecisionTreeClassifier):
        return {
            "version": SERIALIZATION_VERSION,
            "kind": "tree",
            "params": model.get_params(),
            "n_classes": model.n_classes_,
            "n_features": model.n_features_,
            "tree": _flat_tree_to_dict(model.tree_),
        }
    if isinstance(model, ForestClassifier):
        return {
            "version": SERIALIZATION_VERSION,
            "kind": "forest",
            "params": model.get_params(),
            "n_classes": model.n_classes_,
            "trees": [model_to_dict(t) for t in model.trees_],
        }
    if isinstance(model, KnnClassifier):
        return {
            "version": SERIALIZATION_VERSION,
            "kind": "knn",
            "params": model.get_params(),
            "n_classes": model.n_classes_,
            "X": [[repr(float(v)) for v in row] for row in model.X_],
            "y": model.y_.tolist(),
            "w": [repr(float(v)) for v in model.w_],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    if d.get("version") != SERIALIZATION_VERSION:
        raise ValueError(f"unsupported model format version {d.get('version')!r}")
    kind = d["kind"]
    if kind == "tree":
        model = DecisionTreeClassifier(**d["params"])
        model.n_classes_ = d["n_classes"]
        model.n_features_ = d["n_features"]
        model.tree_ = _flat_tree_from_dict(d["tree"])
        return model
    if kind == "forest":
        model = ForestClassifier(**d["params"])
        model.n_classes_ = d["n_classes"]
        model.trees_ = [model_from_dict(t) for t in d["trees"]]
        return model
    if kind == "knn":
        model = KnnClassifier(**d["params"])
        model.X_ = np.array([[float(v) for v in row] for row in d["X"]])
        model.y_ = np.asarray(d["y"], dtype=int)
        model.w_ = np.array([float(v) for v in d["w"]])
        model.n_classes_ = d["n_classes"]
        model._sq_norms = np.square(model.X_).sum(axis=1)
        return model
    raise ValueError(f"unknown model kind {kind!r}")


BASE_LEARNERS = {
    "tree": lambda params: DecisionTreeClassifier(
        max_depth=params.get("max_depth"),
        min_samples_leaf=params.get("min_samples_leaf", 1),
        split_mode="exact",
        seed=params.get("seed"),
    ),
    "extra": lambda params: DecisionTreeClassifier(
        max_depth=params.get("max_depth"),
        min_samples_leaf=params.get("min_samples_leaf", 1),
        split_mode="random",
        seed=params.get("seed"),
    ),
    "forest": lambda params: ForestClassifier(
        n_trees=params.get("n_trees", 100),
        mode="bagging",
        max_depth=params.get("max_depth"),
        min_samples_leaf=params.get("min_samples_leaf", 1),
        seed=params.get("seed"),
    ),
    "extra-forest": lambda params: ForestClassifier(
        n_trees=params.get("n_trees", 100),
        mode="extra",
        max_depth=params.get("max_depth"),
        min_samples_leaf=params.get("min_samples_leaf", 1),
        seed=params.get("seed"),
    ),
    "knn": lambda params: KnnClassifier(k=params.get("k", 3)),
}


def make_base_learner(name: str, params: dict | None = None):
    if name not in BASE_LEARNERS:
        raise ValueError(f"unknown base learner {name!r}; choose from {sorted(BASE_LEARNERS)}")
    return BASE_LEARNERS[name](params or {})
