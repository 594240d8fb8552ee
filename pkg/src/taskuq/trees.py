"""Bagged CART-style classification trees.

Each tree is grown on a bootstrap resample with exhaustive axis-aligned
Gini splits (every feature, every midpoint between consecutive distinct
values). Leaves store Laplace-smoothed class frequencies
``(count_k + 1) / (n + K)``, so every member prediction is strictly inside
the simplex. The default is plain bagging (every node searches every
feature); ``max_features="sqrt"`` gives random-forest style per-node
feature subsampling.

Tree ``t`` draws its bootstrap from the stream ``rng(seed, t)``; trees are
therefore independent of fitting order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, SecondOrderEnsemble, rng


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, K) leaf distributions
    depth: int

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                break
            go_left = X[rows, np.where(internal, f, 0)] <= self.threshold[node]
            node = np.where(internal, np.where(go_left, self.left[node], self.right[node]), node)
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def _key(self):
        return tuple(a.tobytes() for a in (self.feature, self.threshold, self.left, self.right, self.value))


def _best_split(X: np.ndarray, y: np.ndarray, K: int, features=None):
    """Best (feature, threshold) by weighted Gini impurity, or ``None``.

    Only ``features`` (default: all) are searched. Ties resolve to the
    earliest feature in that sequence, then the lowest threshold.
    """
    n = y.size
    onehot = np.eye(K)[y]
    total = onehot.sum(axis=0)
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    best_score, best = -np.inf, None
    for f in range(X.shape[1]) if features is None else features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = total - left
        # n * weighted_gini = n - purity, so maximize purity
        purity = (left**2).sum(axis=1) / n_left + (right**2).sum(axis=1) / n_right
        purity = np.where(valid, purity, -np.inf)
        i = int(np.argmax(purity))
        if purity[i] > best_score:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:
                thr = xs[i]
            best_score, best = purity[i], (f, thr)
    return best


def _n_candidates(max_features, D: int) -> int:
    if max_features is None:
        return D
    if max_features == "sqrt":
        return max(1, int(np.sqrt(D)))
    if max_features == "log2":
        return max(1, int(np.log2(D)))
    k = int(max_features)
    if not 1 <= k <= D:
        raise ValueError(f"max_features must lie in 1..{D}, got {k}")
    return k


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    K: int,
    max_depth: int,
    max_features=None,
    g: np.random.Generator | None = None,
) -> Tree:
    """Grow one tree. With ``max_features`` set, each node searches a random
    subset of that many features drawn from ``g``; if none of them admits a
    split the node becomes a leaf."""
    D = X.shape[1]
    n_cand = _n_candidates(max_features, D)
    if n_cand < D and g is None:
        raise ValueError("feature subsampling needs a random generator")
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        counts = np.bincount(y[idx], minlength=K).astype(np.float64)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append((counts + 1.0) / (idx.size + K))
        if depth >= max_depth or idx.size < 2 or np.count_nonzero(counts) <= 1:
            return node
        cand = None if n_cand == D else np.sort(g.choice(D, size=n_cand, replace=False))
        split = _best_split(X[idx], y[idx], K, cand)
        if split is None:
            return node
        f, thr = split
        mask = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(y.size), 0)
    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
        depth=max_depth,
    )


@dataclass(frozen=True, eq=False)
class BaggedTreesModel:
    trees: tuple[Tree, ...]
    max_depth: int
    K: int
    D: int
    seed: int
    max_features: object = None

    @property
    def T(self) -> int:
        return len(self.trees)

    def predict_members(self, X) -> np.ndarray:
        """Member distributions for each row: shape ``(n, T, K)``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.D:
            raise ValueError(f"expected features of shape (n, {self.D}), got {X.shape}")
        return np.stack([t.predict_proba(X) for t in self.trees], axis=1)

    __call__ = predict_members

    def predict_proba(self, X) -> np.ndarray:
        return self.predict_members(X).mean(axis=1)

    def __eq__(self, other):
        return (
            isinstance(other, BaggedTreesModel)
            and (self.max_depth, self.K, self.D, self.seed) == (other.max_depth, other.K, other.D, other.seed)
            and [t._key() for t in self.trees] == [t._key() for t in other.trees]
        )


def fit_bagged_trees(
    train: Dataset,
    T: int = 20,
    max_depth: int = 5,
    seed: int = 0,
    max_features=None,
) -> BaggedTreesModel:
    """Fit ``T`` trees on bootstrap resamples drawn from ``rng(seed, t)``.

    ``max_features`` is ``"sqrt"``, ``"log2"``, an integer, or ``None`` for
    plain bagging (all features at every node).
    """
    if train.N == 0:
        raise ValueError("cannot fit on an empty dataset")
    if T < 1:
        raise ValueError("need at least one tree")
    X, y = train.features, train.labels
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    trees = []
    for t in range(T):
        g = rng(seed, t)
        boot = g.integers(0, train.N, size=train.N)
        trees.append(fit_tree(X[boot], y[boot], train.K, max_depth, max_features, g))
    return BaggedTreesModel(tuple(trees), max_depth, train.K, train.D, seed, max_features)


def predict_second_order(model: BaggedTreesModel, x) -> SecondOrderEnsemble:
    """Uniform ensemble of the ``T`` leaf distributions reached by ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a single feature vector")
    return SecondOrderEnsemble(model.predict_members(x[None, :])[0])
