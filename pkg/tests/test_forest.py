import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaffect import (
    InvalidInputError,
    RandomForest,
    best_split,
    gini_impurity,
    grow_tree,
    load_forest,
    save_forest,
    tree_rng,
)
from gaffect.forest import dumps_forest

from oracles import ExhaustiveTreeOracle, NearestCentroidOracle


class TestGini:
    def test_pure_node(self):
        assert gini_impurity([10, 0, 0]) == 0.0

    def test_uniform_three_class(self):
        assert gini_impurity([1, 1, 1]) == pytest.approx(2 / 3, abs=1e-15)

    def test_mixed(self):
        assert gini_impurity([2, 1, 1]) == pytest.approx(0.625, abs=0)

    def test_all_zero_rejected(self):
        with pytest.raises(InvalidInputError):
            gini_impurity([0, 0, 0])

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            gini_impurity([3, -1, 0])


class TestBestSplit:
    def test_two_sample_split(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 2])
        feat, thr, dec = best_split(X, y, [0, 1], [0])
        assert feat == 0
        assert thr == 0.5
        assert dec == 0.5

    def test_identical_rows_mixed_labels(self):
        X = np.ones((4, 2))
        y = np.array([0, 1, 2, 0])
        assert best_split(X, y, range(4), [0, 1]) is None

    def test_pure_node_has_no_split(self):
        X = np.arange(8, dtype=float).reshape(4, 2)
        y = np.array([1, 1, 1, 1])
        assert best_split(X, y, range(4), [0, 1]) is None

    def test_tie_breaks_to_lowest_feature(self):
        # both features separate perfectly; feature 0 must win
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1])
        feat, thr, _ = best_split(X, y, [0, 1], [1, 0])
        assert feat == 0 and thr == 0.5

    def test_min_samples_leaf_filters_boundaries(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 0, 0, 2])
        # isolating the last sample is the best split but violates the leaf
        # minimum; the 2|2 boundary must be chosen instead
        feat, thr, _ = best_split(X, y, range(4), [0], min_samples_leaf=2)
        assert feat == 0 and thr == 1.5

    def test_matches_exhaustive_reference(self):
        rng = np.random.default_rng(7)
        for _ in range(150):
            n = int(rng.integers(2, 16))
            d = int(rng.integers(1, 4))
            X = rng.integers(0, 2, size=(n, d)).astype(float)
            y = rng.integers(0, 3, size=n)
            got = best_split(X, y, range(n), range(d))
            from oracles import exhaustive_best_split

            want = exhaustive_best_split(X.tolist(), y.tolist(), range(n), range(d))
            if want is None:
                assert got is None
            else:
                assert got == want


class TestGrowTree:
    def test_pure_input_is_single_leaf(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([2, 2, 2])
        tree = grow_tree(X, y, [0, 1, 2], mtry=1, rng=tree_rng(0, 0))
        assert tree.n_nodes == 1
        assert tree.is_leaf(0)
        assert tree.counts[0].tolist() == [0, 0, 3]

    def test_two_samples_split_to_pure_leaves(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([0, 2])
        tree = grow_tree(X, y, [0, 1], mtry=1, rng=tree_rng(0, 0))
        assert tree.n_nodes == 3
        assert not tree.is_leaf(0)
        assert tree.threshold[0] == 0.5
        np.testing.assert_array_equal(tree.distributions(X), [[1, 0, 0], [0, 0, 1]])

    def test_max_depth_zero_is_single_leaf(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 3))
        y = rng.integers(0, 3, size=20)
        tree = grow_tree(X, y, range(20), max_depth=0, mtry=3, rng=tree_rng(0, 0))
        assert tree.n_nodes == 1
        assert tree.counts[0].sum() == 20

    def test_min_samples_leaf_respected(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 2))
        y = rng.integers(0, 3, size=40)
        tree = grow_tree(
            X, y, range(40), min_samples_leaf=5, mtry=2, rng=tree_rng(3, 0)
        )
        leaf_sizes = tree.counts[tree.feature < 0].sum(axis=1)
        assert (leaf_sizes >= 5).all()


def make_blobs(rng, counts=(67, 67, 66), dim=8, distance=4.0):
    """Three unit-variance Gaussian blobs at pairwise centroid distance 4."""
    # equilateral triangle in the first two dimensions
    side = distance
    centers = np.zeros((3, dim))
    centers[1, 0] = side
    centers[2, 0] = side / 2
    centers[2, 1] = side * np.sqrt(3) / 2
    X = np.vstack([c + rng.normal(size=(n, dim)) for c, n in zip(centers, counts)])
    y = np.concatenate([np.full(n, i) for i, n in enumerate(counts)])
    return X, y


class TestRandomForest:
    def test_full_tree_shatters_label_consistent_data(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(60, 4))
        y = rng.integers(0, 3, size=60)
        model = RandomForest(n_trees=1, bootstrap=False, mtry=4, seed=9).fit(X, y)
        # independent replay: walk each sample down the single tree by hand
        tree = model.trees_[0]
        for row, label in zip(X, y):
            node = 0
            while not tree.is_leaf(node):
                if row[tree.feature[node]] <= tree.threshold[node]:
                    node = tree.left[node]
                else:
                    node = tree.right[node]
            counts = tree.counts[node]
            assert counts[label] == counts.sum()
        assert (model.predict(X) == y).all()

    def test_determinism_same_seed_same_model(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(80, 5))
        y = rng.integers(0, 3, size=80)
        probe = rng.normal(size=(30, 5))
        a = RandomForest(n_trees=12, seed=123).fit(X, y)
        b = RandomForest(n_trees=12, seed=123).fit(X, y)
        assert a.fingerprint_ == b.fingerprint_
        assert dumps_forest(a) == dumps_forest(b)
        np.testing.assert_array_equal(a.predict_proba(probe), b.predict_proba(probe))

    def test_different_seed_changes_model(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(80, 5))
        y = rng.integers(0, 3, size=80)
        a = RandomForest(n_trees=12, seed=1).fit(X, y)
        b = RandomForest(n_trees=12, seed=2).fit(X, y)
        assert dumps_forest(a) != dumps_forest(b)

    def test_parallel_training_matches_serial(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(60, 6))
        y = rng.integers(0, 3, size=60)
        serial = RandomForest(n_trees=8, seed=4, n_jobs=1).fit(X, y)
        parallel = RandomForest(n_trees=8, seed=4, n_jobs=2).fit(X, y)
        assert dumps_forest(serial) == dumps_forest(parallel)

    def test_blob_accuracy_beats_95_percent(self):
        rng = np.random.default_rng(4)
        X_train, y_train = make_blobs(rng)
        X_test, y_test = make_blobs(rng)
        oracle = NearestCentroidOracle().fit(X_train.tolist(), y_train.tolist())
        assert oracle.accuracy(X_test.tolist(), y_test.tolist()) >= 0.95
        model = RandomForest(n_trees=100, seed=0).fit(X_train, y_train)
        accuracy = float((model.predict(X_test) == y_test).mean())
        assert accuracy >= 0.95

    def test_proba_examples(self):
        # one pure leaf
        X = np.zeros((5, 2))
        y = np.zeros(5, dtype=int)
        model = RandomForest(n_trees=1, bootstrap=False, mtry=2, seed=0).fit(X, y)
        np.testing.assert_array_equal(model.predict_proba([[0.0, 0.0]]), [[1, 0, 0]])
        assert model.predict([[0.0, 0.0]])[0] == 0

    def test_leaf_count_normalization(self):
        X = np.zeros((4, 1))
        y = np.array([0, 0, 1, 2])
        model = RandomForest(
            n_trees=1, bootstrap=False, mtry=1, max_depth=0, seed=0
        ).fit(X, y)
        np.testing.assert_array_equal(
            model.predict_proba([[0.0]]), [[0.5, 0.25, 0.25]]
        )

    def test_two_tree_average(self):
        # trees trained on single-class data vote their pure distributions
        X = np.array([[0.0], [1.0]])
        model_a = RandomForest(n_trees=1, bootstrap=False, mtry=1, seed=0).fit(
            X, [0, 0]
        )
        model_b = RandomForest(n_trees=1, bootstrap=False, mtry=1, seed=0).fit(
            X, [1, 1]
        )
        combined = RandomForest(n_trees=2, bootstrap=False, mtry=1, seed=0)
        combined.fit(X, [0, 0])
        combined.trees_ = [model_a.trees_[0], model_b.trees_[0]]
        np.testing.assert_array_equal(
            combined.predict_proba([[0.5]]), [[0.5, 0.5, 0.0]]
        )

    def test_predict_tie_breaks_to_lowest_class(self):
        assert int(np.argmax(np.array([0.4, 0.4, 0.2]))) == 0
        assert int(np.argmax(np.array([0.2, 0.5, 0.3]))) == 1

    def test_dimension_mismatch_rejected(self):
        X = np.zeros((4, 3))
        y = np.zeros(4, dtype=int)
        model = RandomForest(n_trees=1, seed=0).fit(X, y)
        with pytest.raises(InvalidInputError):
            model.predict_proba(np.zeros((2, 4)))

    def test_empty_dataset_rejected(self):
        with pytest.raises(InvalidInputError):
            RandomForest(n_trees=1).fit(np.empty((0, 3)), [])

    def test_bad_labels_rejected(self):
        with pytest.raises(InvalidInputError):
            RandomForest(n_trees=1).fit(np.zeros((2, 1)), [0, 3])

    def test_monotone_capacity_in_depth(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(50, 3))
        y = rng.integers(0, 3, size=50)
        last = 0.0
        for depth in range(0, 9):
            model = RandomForest(
                n_trees=1, bootstrap=False, mtry=3, max_depth=depth, seed=0
            ).fit(X, y)
            accuracy = float((model.predict(X) == y).mean())
            assert accuracy >= last
            last = accuracy

    def test_label_permutation_equivariance(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(60, 4))
        y = rng.integers(0, 3, size=60)
        probe = rng.normal(size=(25, 4))
        perm = np.array([2, 0, 1])
        base = RandomForest(n_trees=10, seed=3).fit(X, y)
        permuted = RandomForest(n_trees=10, seed=3).fit(X, perm[y])
        np.testing.assert_array_equal(
            permuted.predict_proba(probe)[:, perm], base.predict_proba(probe)
        )

    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=15, deadline=None)
    def test_proba_rows_normalized(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(30, 4))
        y = rng.integers(0, 3, size=30)
        model = RandomForest(n_trees=7, seed=seed).fit(X, y)
        proba = model.predict_proba(rng.normal(size=(50, 4)))
        assert np.all(proba >= 0) and np.all(proba <= 1)
        assert np.all(np.abs(proba.sum(axis=1) - 1.0) <= 1e-9)

    def test_sklearn_get_params(self):
        model = RandomForest(n_trees=5, mtry=2)
        params = model.get_params()
        assert params["n_trees"] == 5 and params["mtry"] == 2


class TestOracleEquivalence:
    def test_single_tree_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(202)
        for _ in range(60):
            n = int(rng.integers(2, 21))
            d = int(rng.integers(1, 4))
            X = rng.integers(0, 2, size=(n, d)).astype(float)
            y = rng.integers(0, 3, size=n)
            model = RandomForest(
                n_trees=1, bootstrap=False, mtry=d, seed=0
            ).fit(X, y)
            oracle = ExhaustiveTreeOracle().fit(X.tolist(), y.tolist())
            np.testing.assert_array_equal(model.predict(X), oracle.predict(X.tolist()))


class TestSerialization:
    def test_round_trip_identical_predictions(self, tmp_path):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(70, 6))
        y = rng.integers(0, 3, size=70)
        probe = rng.normal(size=(40, 6))
        model = RandomForest(n_trees=9, seed=77, modality="avgpool_rgb").fit(X, y)
        path = tmp_path / "forest.json"
        save_forest(model, path)
        loaded = load_forest(path)
        np.testing.assert_array_equal(
            loaded.predict_proba(probe), model.predict_proba(probe)
        )
        assert loaded.fingerprint_ == model.fingerprint_
        assert loaded.modality == "avgpool_rgb"
        assert dumps_forest(loaded) == dumps_forest(model)

    def test_missing_file_is_model_error(self, tmp_path):
        from gaffect import ModelError

        with pytest.raises(ModelError):
            load_forest(tmp_path / "nope.json")

    def test_corrupt_file_is_model_error(self, tmp_path):
        from gaffect import ModelError

        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ModelError):
            load_forest(path)
