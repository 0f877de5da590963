import numpy as np
import pytest

from spikecode import svm
from spikecode.errors import ShapeError, TrainingError
from spikecode.vectorizers import FeatureVector


def as_data(X, labels):
    return [(FeatureVector(values=np.asarray(x, dtype=float), scheme="v1",
                           clip_id=str(i)), lab)
            for i, (x, lab) in enumerate(zip(X, labels))]


def blobs(n_classes, n_per_class, dim, separation=4.0, seed=0, spread=0.5):
    """Gaussian clusters around orthogonal centers (needs n_classes <= dim)."""
    rng = np.random.default_rng(seed)
    centers = separation * np.eye(n_classes, dim)
    X, labels = [], []
    for c in range(n_classes):
        for _ in range(n_per_class):
            X.append(centers[c] + spread * rng.normal(size=dim))
            labels.append("c%02d" % c)
    return np.array(X), labels


def perceptron_separable(X, labels, epochs=200):
    """Independent separability oracle: one-vs-rest perceptron convergence."""
    classes = sorted(set(labels))
    Xa = np.hstack([X, np.ones((len(X), 1))])
    for cls in classes:
        y = np.array([1.0 if l == cls else -1.0 for l in labels])
        w = np.zeros(Xa.shape[1])
        for _ in range(epochs):
            mistakes = 0
            for xi, yi in zip(Xa, y):
                if yi * (w @ xi) <= 0:
                    w += yi * xi
                    mistakes += 1
            if mistakes == 0:
                break
        else:
            return False
    return True


class TestTraining:
    def test_two_class_separable_blobs(self):
        X, labels = blobs(2, 20, 2, seed=1)
        data = as_data(X, labels)
        model = svm.train_ova_svm(data, seed=0)
        assert svm.accuracy(model, data) == 100.0

    def test_eleven_class_200dim_blobs(self):
        # mirrors population-latency V1 vectors: 200 dims, 11 classes
        X, labels = blobs(11, 10, 200, seed=2)
        assert perceptron_separable(X, labels)
        data = as_data(X, labels)
        model = svm.train_ova_svm(data, seed=0)
        assert svm.accuracy(model, data) == 100.0

    def test_identical_vectors_majority_fraction(self):
        X = np.ones((10, 3))
        labels = ["a"] * 7 + ["b"] * 3
        model = svm.train_ova_svm(as_data(X, labels), seed=0)
        assert svm.accuracy(model, as_data(X, labels)) == pytest.approx(70.0)

    def test_single_class_rejected(self):
        X = np.ones((4, 2))
        with pytest.raises(TrainingError):
            svm.train_ova_svm(as_data(X, ["a"] * 4))

    def test_inconsistent_dims_rejected(self):
        data = as_data([[1.0, 2.0]], ["a"]) + as_data([[1.0]], ["b"])
        with pytest.raises((ShapeError, ValueError)):
            svm.train_ova_svm(data)

    def test_objective_non_increasing(self):
        X, labels = blobs(3, 15, 10, seed=3)
        model = svm.train_ova_svm(as_data(X, labels), seed=0)
        h = model.objective_history.sum(axis=1)
        assert h[-1] <= h[0]
        increases = np.diff(h)
        transient = increases[increases > 0]
        assert np.all(transient <= 0.01 * h[0])

    def test_seeded_determinism(self):
        X, labels = blobs(3, 10, 5, seed=4)
        a = svm.train_ova_svm(as_data(X, labels), seed=7)
        b = svm.train_ova_svm(as_data(X, labels), seed=7)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.biases, b.biases)
        c = svm.train_ova_svm(as_data(X, labels), seed=8)
        assert not np.array_equal(a.weights, c.weights)


class TestPredict:
    def make_model(self, W, b, labels):
        return svm.LinearModel(weights=np.asarray(W, dtype=float),
                               biases=np.asarray(b, dtype=float),
                               class_labels=tuple(labels),
                               regularization_lambda=1e-4)

    def test_argmax_decision(self):
        m = self.make_model([[1, 0], [0, 1]], [0, 0], ["a", "b"])
        assert svm.predict(m, np.array([2.0, 1.0])) == "a"

    def test_tie_goes_to_lowest_index(self):
        m = self.make_model([[1, 0], [1, 0]], [0, 0], ["a", "b"])
        assert svm.predict(m, np.array([1.0, 5.0])) == "a"

    def test_constant_shift_invariance(self):
        m = self.make_model([[1, 0], [0, 1]], [0.5, -0.2], ["a", "b"])
        shifted = self.make_model([[1, 0], [0, 1]], [0.5 + 3, -0.2 + 3],
                                  ["a", "b"])
        for _ in range(10):
            x = np.random.default_rng(0).normal(size=2)
            assert svm.predict(m, x) == svm.predict(shifted, x)

    def test_held_out_blob_point(self):
        X, labels = blobs(3, 20, 4, seed=5)
        model = svm.train_ova_svm(as_data(X[:-1], labels[:-1]), seed=0)
        assert svm.predict(model, X[-1]) == labels[-1]

    def test_dim_mismatch(self):
        m = self.make_model([[1, 0]], [0], ["a"])
        with pytest.raises(ShapeError):
            svm.predict(m, np.array([1.0, 2.0, 3.0]))


class TestPersistence:
    def test_bit_exact_round_trip(self):
        X, labels = blobs(3, 10, 6, seed=6)
        model = svm.train_ova_svm(as_data(X, labels), seed=0,
                                  train_meta={"mean_duration": 0.5,
                                              "n_time_bins": 49})
        text = svm.save_model(model)
        back = svm.load_model(text)
        assert np.array_equal(back.weights, model.weights)
        assert np.array_equal(back.biases, model.biases)
        assert back.class_labels == model.class_labels
        assert back.train_meta["mean_duration"] == 0.5
        assert svm.save_model(back) == text
