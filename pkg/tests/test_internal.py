import math

import numpy as np
import pytest

from typweight.data import Dataset
from typweight.errors import ParameterError
from typweight.internal import (
    internal_entropy,
    internal_probability,
    snapshot_scores,
)
from typweight.mlp import Layer, MlpModel, TrainConfig, init_model, train


def logit_model(c):
    """Identity linear model: logits equal the input features, so tests
    can choose logits directly."""
    return MlpModel(layers=[Layer(np.eye(c), np.zeros(c), "identity")])


class TestInternalProbability:
    def test_uniform_logits(self):
        m = logit_model(6)
        assert internal_probability(m, np.zeros(6), 3) == pytest.approx(1 / 6, abs=1e-12)

    def test_dominant_logit(self):
        m = logit_model(3)
        z = internal_probability(m, np.array([10.0, 0.0, 0.0]), 0)
        expected = math.exp(10) / (math.exp(10) + 2)
        assert z == pytest.approx(expected, abs=1e-12)
        assert z == pytest.approx(0.99991, abs=1e-5)

    def test_shift_invariance(self):
        m = logit_model(4)
        x = np.array([0.3, -1.0, 2.2, 0.0])
        a = internal_probability(m, x, 2)
        b = internal_probability(m, x + 100.0, 2)
        assert a == pytest.approx(b, abs=1e-12)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(0)
        m = logit_model(5)
        for _ in range(20):
            x = rng.standard_normal(5) * 8
            total = sum(internal_probability(m, x, c) for c in range(5))
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_label_out_of_range(self):
        with pytest.raises(ParameterError):
            internal_probability(logit_model(3), np.zeros(3), 3)


class TestInternalEntropy:
    def test_certainty_is_zero(self):
        m = logit_model(3)
        assert internal_entropy(m, np.array([1000.0, 0.0, 0.0]), 0) == 0.0

    def test_at_one_over_e(self):
        # z0 = 1/e  <=>  logits (0, log(e - 1))
        m = logit_model(2)
        x = np.array([0.0, math.log(math.e - 1.0)])
        assert internal_entropy(m, x, 0) == pytest.approx(1 / math.e, abs=1e-9)

    def test_at_half(self):
        m = logit_model(2)
        e = internal_entropy(m, np.zeros(2), 0)
        assert e == pytest.approx(0.5 * math.log(2), abs=1e-12)

    def test_shift_invariance(self):
        m = logit_model(4)
        x = np.array([0.5, 1.5, -0.5, 0.0])
        assert internal_entropy(m, x, 1) == pytest.approx(
            internal_entropy(m, x + 100.0, 1), abs=1e-12)


def make_dataset(rng, n=40, dim=3, classes=3, sep=0.0):
    feats = rng.standard_normal((n, dim))
    labels = rng.integers(0, classes, n).astype(int)
    for c in range(classes):
        feats[labels == c, 0] += sep * c
    return Dataset(features=feats, labels=labels, sample_ids=np.arange(n),
                   num_classes=classes)


class TestSnapshot:
    def test_zero_model_uniform(self):
        rng = np.random.default_rng(1)
        d = make_dataset(rng, classes=4, dim=2)
        m = MlpModel(layers=[Layer(np.zeros((2, 4)), np.zeros(4), "identity")])
        table = snapshot_scores(m, d, epoch=1)
        np.testing.assert_allclose(table.z_true, 0.25, atol=1e-12)
        assert len(table) == len(d)

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        d = make_dataset(rng)
        m = init_model([3, 3], 3, seed=0)
        t1 = snapshot_scores(m, d, epoch=2)
        t2 = snapshot_scores(m, d, epoch=2)
        assert np.array_equal(t1.z_true, t2.z_true)
        assert np.array_equal(t1.entropy, t2.entropy)

    def test_epoch_must_be_positive(self):
        rng = np.random.default_rng(3)
        d = make_dataset(rng)
        with pytest.raises(ParameterError):
            snapshot_scores(init_model([3, 3], 3, seed=0), d, epoch=0)

    def test_trained_separable_model_confident(self):
        rng = np.random.default_rng(4)
        d = make_dataset(rng, n=90, dim=2, classes=2, sep=8.0)
        m = init_model([2, 2], 2, seed=0)
        train(m, d, TrainConfig(learning_rate=0.05, epochs=30,
                                loss_kind="softmax_log", seed=0))
        table = snapshot_scores(m, d, epoch=31)
        assert table.z_true.mean() > 0.9

    def test_entropy_column_nonnegative(self):
        rng = np.random.default_rng(5)
        d = make_dataset(rng)
        table = snapshot_scores(init_model([3, 3], 3, seed=1), d, epoch=1)
        assert np.all(table.entropy >= 0.0)

    def test_csv_dump(self, tmp_path):
        rng = np.random.default_rng(6)
        d = make_dataset(rng, n=5)
        table = snapshot_scores(init_model([3, 3], 3, seed=1), d, epoch=2)
        table.to_csv(tmp_path / "scores.csv")
        lines = (tmp_path / "scores.csv").read_text().strip().splitlines()
        assert lines[0] == "sample_id,epoch,z_true,entropy"
        assert len(lines) == 6
        assert lines[1].split(",")[1] == "2"
