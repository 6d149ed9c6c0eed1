"""From-scratch random forest: CART trees, Gini splits, seeded bootstrap.

Reproducibility contract
------------------------
Every tree consumes its own Philox4x32-10 counter-based stream keyed by
``(seed, tree_index)`` (two unsigned 64-bit words), so training is
bit-identical for identical inputs regardless of how trees are scheduled.
Per tree the draw order is fixed: first the bootstrap indices
(``rng.integers(0, n, size=n)``, skipped when bootstrap is off), then one
candidate-feature draw (``rng.permutation(dim)[:mtry]``) per split attempt,
visiting nodes depth-first, left subtree before right.

Split selection maximizes the Gini impurity decrease
``((sl/nl + sr/nr) - sp/m) / m`` where ``sl``, ``sr``, ``sp`` are the sums
of squared class counts of the left child, right child, and parent.  Ties
are broken by the lowest feature index, then the lowest threshold.
Thresholds sit at midpoints of consecutive distinct sorted values.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .exceptions import InvalidInputError, ModelError
from .validation import as_float_matrix, check_finite, check_labels

FOREST_FORMAT = "gaffect-forest"
FOREST_FORMAT_VERSION = 1


def gini_impurity(class_counts) -> float:
    """1 - sum((count/total)^2); 0 for a pure node, 2/3 for uniform 3-class."""
    counts = np.asarray(class_counts, dtype=np.int64)
    if counts.ndim != 1 or (counts < 0).any():
        raise InvalidInputError("class_counts must be 1-D nonnegative integers")
    total = int(counts.sum())
    if total == 0:
        raise InvalidInputError("class_counts sum to zero")
    frac = counts / total
    return float(1.0 - np.dot(frac, frac))


def best_split(
    X,
    y,
    sample_indices,
    candidate_features,
    *,
    n_classes: int = 3,
    min_samples_leaf: int = 1,
):
    """Best (feature, threshold, impurity_decrease) over the candidates.

    Evaluates every midpoint between consecutive distinct sorted values of
    every candidate feature and returns ``None`` when no split has a
    positive decrease.  Splits leaving a child below ``min_samples_leaf``
    are never considered.
    """
    X = np.asarray(X, dtype=np.float64)
    idx = np.asarray(sample_indices, dtype=np.intp)
    feats = np.unique(np.asarray(candidate_features, dtype=np.intp))
    m = idx.shape[0]
    if m < 2:
        raise InvalidInputError("best_split needs at least 2 samples")
    if feats.size == 0:
        raise InvalidInputError("candidate_features is empty")

    sub = X[np.ix_(idx, feats)]                      # (m, k)
    labels = np.asarray(y, dtype=np.int64)[idx]
    order = np.argsort(sub, axis=0)
    svals = np.take_along_axis(sub, order, axis=0)
    slab = labels[order]                             # (m, k)

    tot = np.bincount(labels, minlength=n_classes).astype(np.int64)
    sum_sq_parent = int(np.dot(tot, tot))

    # cumulative class counts above each boundary; boundary b splits rows
    # [0..b] | [b+1..m-1]
    left = np.stack(
        [np.cumsum(slab == c, axis=0, dtype=np.int64)[:-1] for c in range(n_classes)]
    )                                                # (C, m-1, k)
    right = tot[:, None, None] - left
    sl = np.einsum("cbk,cbk->bk", left, left)
    sr = np.einsum("cbk,cbk->bk", right, right)
    nl = np.arange(1, m, dtype=np.float64)[:, None]
    nr = float(m) - nl
    decrease = ((sl / nl + sr / nr) - sum_sq_parent / m) / m

    valid = svals[:-1] < svals[1:]
    if min_samples_leaf > 1:
        valid &= (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
    decrease = np.where(valid, decrease, -np.inf)

    # feature-major flat argmax realizes the (lowest feature, lowest
    # threshold) tie-break because feats is sorted ascending
    flat = np.ascontiguousarray(decrease.T).reshape(-1)
    pos = int(np.argmax(flat))
    best = float(flat[pos])
    if not best > 0.0:
        return None
    f_pos, b = divmod(pos, m - 1)
    threshold = float((svals[b, f_pos] + svals[b + 1, f_pos]) / 2.0)
    return int(feats[f_pos]), threshold, best


@dataclass
class Tree:
    """One CART tree as flat per-node arrays; node 0 is the root.

    ``feature[i] == -1`` marks a leaf.  Internal nodes route a sample left
    iff ``x[feature] <= threshold``.  ``counts`` holds the training class
    counts of every node (with bootstrap multiplicity).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    _dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        totals = self.counts.sum(axis=1, keepdims=True)
        self._dist = self.counts / np.where(totals == 0, 1, totals)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of X."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            feat = self.feature[node]
            active = np.nonzero(feat >= 0)[0]
            if active.size == 0:
                return node
            at = node[active]
            goes_left = X[active, feat[active]] <= self.threshold[at]
            node[active] = np.where(goes_left, self.left[at], self.right[at])

    def distributions(self, X: np.ndarray) -> np.ndarray:
        """Per-row leaf class distribution (counts normalized to sum 1)."""
        return self._dist[self.apply(X)]

    def to_payload(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Tree":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int32),
            threshold=np.asarray(payload["threshold"], dtype=np.float64),
            left=np.asarray(payload["left"], dtype=np.int32),
            right=np.asarray(payload["right"], dtype=np.int32),
            counts=np.asarray(payload["counts"], dtype=np.int64),
        )


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """The per-tree stream: Philox4x32-10 keyed with (seed, tree_index)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, tree_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def grow_tree(
    X,
    y,
    sample_indices,
    *,
    n_classes: int = 3,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    mtry: int,
    rng: np.random.Generator,
) -> Tree:
    """Grow one CART tree over ``sample_indices`` (repeats allowed).

    A node becomes a leaf when it is pure, holds fewer than
    ``2 * min_samples_leaf`` samples, sits at ``max_depth``, or no candidate
    split has a positive impurity decrease.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    idx0 = np.asarray(sample_indices, dtype=np.intp)
    if idx0.size == 0:
        raise InvalidInputError("sample_indices is empty")
    dim = X.shape[1]

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []

    stack = [(idx0, 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        slot = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = slot
            else:
                right[parent] = slot
        node_counts = np.bincount(y[idx], minlength=n_classes).astype(np.int64)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(node_counts)

        if (
            (max_depth is not None and depth >= max_depth)
            or idx.size < 2 * min_samples_leaf
            or (node_counts > 0).sum() <= 1
        ):
            continue
        cand = rng.permutation(dim)[:mtry]
        found = best_split(
            X, y, idx, cand, n_classes=n_classes, min_samples_leaf=min_samples_leaf
        )
        if found is None:
            continue
        feat, thr, _ = found
        goes_left = X[idx, feat] <= thr
        n_left = int(goes_left.sum())
        if n_left == 0 or n_left == idx.size:
            # midpoint of two adjacent representable values can round onto
            # one of them; such a split cannot partition, so leaf out
            continue
        feature[slot] = feat
        threshold[slot] = thr
        # push right first so the left subtree is grown (and draws rng) first
        stack.append((idx[~goes_left], depth + 1, slot, False))
        stack.append((idx[goes_left], depth + 1, slot, True))

    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        counts=np.asarray(counts, dtype=np.int64),
    )


def _grow_one(X, y, tree_index, seed, bootstrap, grow_kwargs) -> Tree:
    rng = tree_rng(seed, tree_index)
    n = X.shape[0]
    if bootstrap:
        idx = rng.integers(0, n, size=n)
    else:
        idx = np.arange(n)
    return grow_tree(X, y, idx, rng=rng, **grow_kwargs)


class RandomForest(BaseEstimator, ClassifierMixin):
    """Random forest of Gini CART trees with soft (mean-distribution) voting.

    Parameters
    ----------
    n_trees : trees in the ensemble.
    max_depth : depth cap, ``None`` for unlimited.
    min_samples_leaf : minimum training samples per leaf.
    mtry : features drawn per split; ``None`` means ``ceil(sqrt(dim))``.
    bootstrap : grow each tree on a with-replacement resample of n samples.
    seed : base seed for the per-tree Philox streams.
    n_classes : size of the label set; labels must lie in ``[0, n_classes)``.
    n_jobs : trees grown in parallel via joblib; results are identical to
        serial growth because streams are keyed per tree.
    modality : optional tag naming the feature space this forest scores.
    """

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int | None = None,
        min_samples_leaf: int = 1,
        mtry: int | None = None,
        bootstrap: bool = True,
        seed: int = 0,
        n_classes: int = 3,
        n_jobs: int = 1,
        modality: str | None = None,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.mtry = mtry
        self.bootstrap = bootstrap
        self.seed = seed
        self.n_classes = n_classes
        self.n_jobs = n_jobs
        self.modality = modality

    def _validate_params_against(self, dim: int) -> int:
        if self.n_trees < 1:
            raise InvalidInputError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise InvalidInputError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidInputError("max_depth must be >= 0 or None")
        mtry = self.mtry if self.mtry is not None else math.isqrt(dim - 1) + 1
        if not 1 <= mtry <= dim:
            raise InvalidInputError(f"mtry must lie in [1, {dim}], got {mtry}")
        return mtry

    def fit(self, X, y) -> "RandomForest":
        X = as_float_matrix(X, "X")
        check_finite(X, "X")
        y = check_labels(y, self.n_classes, "y")
        if X.shape[0] == 0:
            raise InvalidInputError("training set is empty")
        if y.shape[0] != X.shape[0]:
            raise InvalidInputError("X and y length mismatch")
        mtry = self._validate_params_against(X.shape[1])

        grow_kwargs = dict(
            n_classes=self.n_classes,
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            mtry=mtry,
        )
        if self.n_jobs == 1:
            trees = [
                _grow_one(X, y, t, self.seed, self.bootstrap, grow_kwargs)
                for t in range(self.n_trees)
            ]
        else:
            trees = Parallel(n_jobs=self.n_jobs)(
                delayed(_grow_one)(X, y, t, self.seed, self.bootstrap, grow_kwargs)
                for t in range(self.n_trees)
            )

        self.trees_ = trees
        self.classes_ = np.arange(self.n_classes)
        self.n_features_in_ = X.shape[1]
        self.mtry_ = mtry
        self.fingerprint_ = self._fingerprint(X, y)
        return self

    def _fingerprint(self, X: np.ndarray, y: np.ndarray) -> str:
        h = hashlib.sha256()
        h.update(b"gaffect-forest-fingerprint-v1\0")
        h.update(
            json.dumps(self.resolved_params(), sort_keys=True).encode("ascii")
        )
        h.update(b"\0")
        h.update(np.ascontiguousarray(X, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(y, dtype="<i8").tobytes())
        return h.hexdigest()

    def resolved_params(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "mtry": self.mtry,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "n_classes": self.n_classes,
            "modality": self.modality,
        }

    def _check_fitted(self):
        if not hasattr(self, "trees_"):
            raise NotFittedError("RandomForest is not fitted yet")

    def _check_X(self, X) -> np.ndarray:
        X = as_float_matrix(X, "X")
        check_finite(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise InvalidInputError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Mean of per-tree leaf distributions; rows sum to 1."""
        self._check_fitted()
        X = self._check_X(X)
        acc = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees_:
            acc += tree.distributions(X)
        return acc / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        """Argmax class per row; ties resolve to the lowest class index."""
        return np.argmax(self.predict_proba(X), axis=1)

    def to_payload(self) -> dict:
        self._check_fitted()
        return {
            "format": FOREST_FORMAT,
            "version": FOREST_FORMAT_VERSION,
            "params": self.resolved_params(),
            "feature_dim": int(self.n_features_in_),
            "mtry_resolved": int(self.mtry_),
            "fingerprint": self.fingerprint_,
            "trees": [tree.to_payload() for tree in self.trees_],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "RandomForest":
        if payload.get("format") != FOREST_FORMAT:
            raise ModelError(f"not a forest payload: format={payload.get('format')!r}")
        if payload.get("version") != FOREST_FORMAT_VERSION:
            raise ModelError(f"unsupported forest version {payload.get('version')!r}")
        params = dict(payload["params"])
        model = cls(**params)
        model.trees_ = [Tree.from_payload(t) for t in payload["trees"]]
        if len(model.trees_) != model.n_trees:
            raise ModelError(
                f"payload has {len(model.trees_)} trees, params say {model.n_trees}"
            )
        model.classes_ = np.arange(model.n_classes)
        model.n_features_in_ = int(payload["feature_dim"])
        model.mtry_ = int(payload["mtry_resolved"])
        model.fingerprint_ = payload["fingerprint"]
        return model


def dumps_forest(model: RandomForest) -> str:
    """Deterministic text serialization (sorted keys, repr-exact floats)."""
    return json.dumps(model.to_payload(), sort_keys=True, separators=(",", ":"))


def save_forest(model: RandomForest, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_forest(model))
        fh.write("\n")


def load_forest(path) -> RandomForest:
    try:
        with open(path, encoding="ascii") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ModelError(f"forest file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"corrupt forest file {path}: {exc}") from None
    return RandomForest.from_payload(payload)
