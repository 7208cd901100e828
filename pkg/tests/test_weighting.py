import math

import numpy as np
import pytest

from typweight.data import Dataset
from typweight.errors import ConfigError, ParameterError
from typweight.internal import snapshot_scores
from typweight.mlp import TrainConfig, init_model, train
from typweight.ocsvm import ScoreTable
from typweight.weighting import (
    LOG_EPS,
    WeightingSpec,
    WeightSchedule,
    build_weight_table,
    compute_weight,
    polynomial_weight,
)


def spec(variant, **kw):
    return WeightingSpec(variant=variant, **kw)


class TestComputeWeight:
    def test_atypicality_complement(self):
        assert compute_weight(spec("atypicality"), 0.8) == pytest.approx(0.2, abs=1e-15)

    def test_exp_endpoints(self):
        assert compute_weight(spec("exp_typ"), 0.0) == 1.0
        assert compute_weight(spec("exp_typ"), 1.0) == pytest.approx(math.e, abs=1e-15)

    def test_log_of_fully_typical_is_zero(self):
        assert compute_weight(spec("log_typ"), 1.0) == 0.0

    def test_log_floor(self):
        assert compute_weight(spec("log_typ"), 0.0) == pytest.approx(-math.log(LOG_EPS))

    def test_log_cls_atyp_direction(self):
        # -log of the class-specific atypicality 1 - s
        assert compute_weight(spec("log_cls_atyp"), 0.0) == 0.0
        assert compute_weight(spec("log_cls_atyp"), 1.0) == pytest.approx(-math.log(LOG_EPS))

    def test_gamma_sqrt(self):
        assert compute_weight(spec("gamma_typ", gamma=2.0), 0.5) == pytest.approx(
            math.sqrt(2), abs=1e-12)

    def test_uniform(self):
        assert compute_weight(spec("uniform"), 0.123) == 1.0

    def test_random_uses_seed(self):
        a = compute_weight(spec("random", seed=5), 0.5)
        b = compute_weight(spec("random", seed=5), 0.9)
        assert a == b   # fresh generator per call with same seed
        assert 0.0 <= a < 1.0

    def test_identity_variants(self):
        for v in ("typicality", "cls_typicality", "internal_prob", "external_precomputed"):
            assert compute_weight(spec(v), 0.37) == 0.37

    def test_entropy_direction_and_flip(self):
        up = compute_weight(spec("internal_entropy"), 0.3)
        flipped = compute_weight(spec("internal_entropy", entropy_flip=True), 0.3)
        assert up == 0.3
        assert flipped == pytest.approx(1 / math.e - 0.3, abs=1e-15)

    def test_score_out_of_range(self):
        with pytest.raises(ParameterError):
            compute_weight(spec("typicality"), 1.2)

    def test_hybrid_is_schedule_level(self):
        with pytest.raises(ConfigError):
            compute_weight(spec("hybrid_atyp_then_internal"), 0.5)

    def test_monotonicity(self):
        scores = np.linspace(0.0, 1.0, 21)
        for v in ("typicality", "exp_typ"):
            w = [compute_weight(spec(v), s) for s in scores]
            assert np.all(np.diff(w) >= 0)
        w = [compute_weight(spec("gamma_typ", gamma=4.0), s) for s in scores]
        assert np.all(np.diff(w) >= 0)
        for v in ("atypicality", "log_typ"):
            w = [compute_weight(spec(v), s) for s in scores]
            assert np.all(np.diff(w) <= 0)


class TestPolynomialWeight:
    def test_vertex_value_is_beta(self):
        assert polynomial_weight(0.4, 0.4, alpha=2.0, beta=0.07, degree=4) == 0.07

    def test_symmetric_quadratic_endpoints(self):
        assert polynomial_weight(0.0, 0.5, 1.0, 0.0, 2) == pytest.approx(0.25, abs=1e-15)
        assert polynomial_weight(1.0, 0.5, 1.0, 0.0, 2) == pytest.approx(0.25, abs=1e-15)

    def test_quartic_value(self):
        assert polynomial_weight(0.9, 0.5, 1.0, 0.0, 4) == pytest.approx(0.4 ** 4, abs=1e-12)

    def test_odd_degree_rejected(self):
        with pytest.raises(ParameterError):
            polynomial_weight(0.5, 0.5, 1.0, 0.0, 3)

    def test_negative_alpha_rejected(self):
        with pytest.raises(ParameterError):
            polynomial_weight(0.5, 0.5, -1.0, 0.0, 2)

    def test_bit_exact_symmetry_on_dyadic_grid(self):
        # mu, t on a dyadic grid, so mu +/- t and (mu +/- t) - mu are exact
        rng = np.random.default_rng(0)
        for _ in range(300):
            mu = rng.integers(0, 1025) / 1024.0
            t = rng.integers(0, 1025) / 1024.0
            d = int(rng.choice([2, 4, 6]))
            alpha = float(rng.random() * 5)
            beta = float(rng.random())
            up = polynomial_weight(mu + t, mu, alpha, beta, d)
            down = polynomial_weight(mu - t, mu, alpha, beta, d)
            assert up == down   # bitwise

    def test_vectorized(self):
        s = np.array([0.1, 0.5, 0.9])
        w = polynomial_weight(s, 0.5, 1.0, 0.0, 2)
        np.testing.assert_allclose(w, [0.16, 0.0, 0.16], atol=1e-15)


def toy_train(rng, n=30, dim=2, classes=2):
    return Dataset(features=rng.standard_normal((n, dim)),
                   labels=rng.integers(0, classes, n).astype(int),
                   sample_ids=np.arange(n), num_classes=classes)


def table_for(d, probs, mode="general"):
    return ScoreTable(sample_ids=d.sample_ids, raw=probs * 2 - 1, prob=probs, mode=mode)


class TestBuildWeightTable:
    def setup_method(self):
        self.rng = np.random.default_rng(7)
        self.d = toy_train(self.rng)
        self.probs = self.rng.random(len(self.d))
        self.ext = table_for(self.d, self.probs)
        self.cls = table_for(self.d, self.probs, mode="class_specific")

    def test_uniform_all_exactly_one(self):
        t = build_weight_table(spec("uniform"), self.d)
        assert np.all(t.weights == 1.0)

    def test_random_deterministic(self):
        t1 = build_weight_table(spec("random", seed=3), self.d)
        t2 = build_weight_table(spec("random", seed=3), self.d)
        assert np.array_equal(t1.weights, t2.weights)
        assert not np.array_equal(
            t1.weights, build_weight_table(spec("random", seed=4), self.d).weights)

    def test_renormalized_mean_one(self):
        for v in ("typicality", "atypicality", "log_typ", "exp_typ", "polynomial"):
            t = build_weight_table(spec(v), self.d, external=self.ext)
            assert t.weights.mean() == pytest.approx(1.0, abs=1e-9)
            assert np.all(t.weights >= 0.0) and np.isfinite(t.weights).all()

    def test_raw_mode(self):
        t = build_weight_table(spec("atypicality", renormalize=False), self.d,
                               external=self.ext)
        np.testing.assert_allclose(t.weights, 1.0 - self.probs, atol=1e-15)

    def test_polynomial_mu_is_train_mean(self):
        s = self.probs
        t = build_weight_table(spec("polynomial", degree=2, alpha=1.0, beta=0.0,
                                    renormalize=False), self.d, external=self.ext)
        np.testing.assert_allclose(t.weights, (s - s.mean()) ** 2, atol=1e-12)

    def test_missing_source_raises(self):
        with pytest.raises(ConfigError):
            build_weight_table(spec("typicality"), self.d)
        with pytest.raises(ConfigError):
            build_weight_table(spec("internal_prob"), self.d)

    def test_mode_mismatch_raises(self):
        with pytest.raises(ConfigError):
            build_weight_table(spec("cls_typicality"), self.d, external=self.ext)
        with pytest.raises(ConfigError):
            build_weight_table(spec("typicality"), self.d, external=self.cls)

    def test_misaligned_ids_raise(self):
        other = ScoreTable(sample_ids=self.d.sample_ids + 1, raw=self.probs,
                           prob=self.probs, mode="general")
        with pytest.raises(ConfigError):
            build_weight_table(spec("typicality"), self.d, external=other)

    def test_external_precomputed_uses_column(self):
        col = self.rng.random(len(self.d))
        d = Dataset(features=self.d.features, labels=self.d.labels,
                    sample_ids=self.d.sample_ids, num_classes=self.d.num_classes,
                    ext_scores=col)
        t = build_weight_table(spec("external_precomputed", renormalize=False), d)
        np.testing.assert_array_equal(t.weights, col)

    def test_external_precomputed_missing_column(self):
        with pytest.raises(ConfigError):
            build_weight_table(spec("external_precomputed"), self.d)

    def test_internal_prob_from_snapshot(self):
        m = init_model([2, 2], 2, seed=0)
        snap = snapshot_scores(m, self.d, epoch=1)
        t = build_weight_table(spec("internal_prob", renormalize=False), self.d,
                               epoch=1, internal=snap)
        np.testing.assert_array_equal(t.weights, snap.z_true)
        assert t.epoch == 1

    def test_weight_table_csv(self, tmp_path):
        t = build_weight_table(spec("uniform"), self.d)
        t.to_csv(tmp_path / "w.csv")
        lines = (tmp_path / "w.csv").read_text().strip().splitlines()
        assert lines[0] == "sample_id,epoch,weight"
        assert len(lines) == len(self.d) + 1


class TestSchedule:
    def setup_method(self):
        self.rng = np.random.default_rng(8)
        self.d = toy_train(self.rng)
        self.probs = self.rng.random(len(self.d))
        self.ext = table_for(self.d, self.probs)
        self.model = init_model([2, 2], 2, seed=0)

    def test_static_variant_reuses_table(self):
        sched = WeightSchedule(spec("atypicality"), self.d, external=self.ext)
        t1 = sched.table_for_epoch(1, self.model)
        t2 = sched.table_for_epoch(5, self.model)
        assert t1 is t2

    def test_hybrid_epoch_one_equals_atypicality_table(self):
        sched = WeightSchedule(spec("hybrid_atyp_then_internal"), self.d,
                               external=self.ext)
        t1 = sched.table_for_epoch(1, self.model)
        ref = build_weight_table(spec("atypicality"), self.d, external=self.ext)
        assert np.array_equal(t1.weights, ref.weights)

    def test_hybrid_later_epochs_equal_internal_tables(self):
        sched = WeightSchedule(spec("hybrid_atyp_then_internal"), self.d,
                               external=self.ext)
        t2 = sched.table_for_epoch(2, self.model)
        snap = snapshot_scores(self.model, self.d, epoch=2)
        ref = build_weight_table(spec("internal_prob"), self.d, epoch=2, internal=snap)
        assert np.array_equal(t2.weights, ref.weights)

    def test_hybrid_requires_external(self):
        with pytest.raises(ConfigError):
            WeightSchedule(spec("hybrid_atyp_then_internal"), self.d)

    def test_internal_schedule_tracks_model_state(self):
        sched = WeightSchedule(spec("internal_prob"), self.d)
        before = sched.table_for_epoch(1, self.model)
        train(self.model, self.d,
              TrainConfig(learning_rate=0.1, epochs=2, loss_kind="softmax_log", seed=0))
        after = sched.table_for_epoch(3, self.model)
        assert not np.array_equal(before.weights, after.weights)


class TestSpecValidation:
    def test_unknown_variant(self):
        with pytest.raises(ParameterError):
            WeightingSpec(variant="magic")

    def test_odd_degree(self):
        with pytest.raises(ParameterError):
            WeightingSpec(variant="polynomial", degree=3)

    def test_nonpositive_gamma(self):
        with pytest.raises(ParameterError):
            WeightingSpec(variant="gamma_typ", gamma=0.0)

    def test_labels(self):
        assert WeightingSpec(variant="polynomial", degree=4).label() == "polynomial_d4"
        assert WeightingSpec(variant="gamma_typ", gamma=2.0).label() == "gamma_typ_g2"
        assert WeightingSpec(variant="uniform").label() == "uniform"
