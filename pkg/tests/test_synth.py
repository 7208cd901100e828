import numpy as np
import pytest

from typweight.errors import GenerationError, ParameterError
from typweight.ocsvm import fit_class_specific, fit_ocsvm
from typweight.synth import CloudSpec, generate, oracle_score_check

SMALL = dict(num_classes=3, dim=8, samples_per_class=50,
             test_typical_per_class=15, test_atypical_per_class=15)


def radii(split, spec):
    means = np.zeros((spec.num_classes, spec.dim))
    for c in range(spec.num_classes):
        means[c, c] = spec.mean_radius
    out = np.empty(len(split))
    for c in range(spec.num_classes):
        mask = split.labels == c
        diff = split.features[mask] - means[c]
        out[mask] = np.linalg.norm(diff, axis=1) / (spec.sigma * np.sqrt(spec.dim))
    return out


class TestGenerate:
    def test_counts_and_balance(self):
        spec = CloudSpec(**SMALL, seed=0)
        gen = generate(spec)
        assert len(gen.train) == 150
        assert len(gen.test_typical) == 45
        assert len(gen.test_atypical) == 45
        for split, per in ((gen.train, 50), (gen.test_typical, 15), (gen.test_atypical, 15)):
            counts = np.bincount(split.labels, minlength=3)
            assert np.all(counts == per)

    def test_ids_unique_across_splits(self):
        gen = generate(CloudSpec(**SMALL, seed=1))
        all_ids = np.concatenate([gen.train.sample_ids, gen.test_typical.sample_ids,
                                  gen.test_atypical.sample_ids])
        assert len(np.unique(all_ids)) == len(all_ids)

    def test_deterministic_per_seed(self):
        g1 = generate(CloudSpec(**SMALL, seed=5))
        g2 = generate(CloudSpec(**SMALL, seed=5))
        assert np.array_equal(g1.train.features, g2.train.features)
        assert np.array_equal(g1.test_atypical.features, g2.test_atypical.features)
        g3 = generate(CloudSpec(**SMALL, seed=6))
        assert not np.array_equal(g1.train.features, g3.train.features)

    def test_oracle_formula_matches_reconstruction(self):
        spec = CloudSpec(**SMALL, seed=2, sigma=1.7)
        gen = generate(spec)
        for split in (gen.train, gen.test_typical, gen.test_atypical):
            r = radii(split, spec)
            np.testing.assert_allclose(split.oracle_typ, np.exp(-0.5 * r * r), atol=1e-9)
            assert split.oracle_typ.max() <= 1.0 and split.oracle_typ.min() > 0.0

    def test_oracle_scalar_values(self):
        # the oracle map itself: r = 0 -> 1, r = 2 -> exp(-2)
        assert np.exp(-0.5 * 0.0 ** 2) == 1.0
        assert np.exp(-0.5 * 2.0 ** 2) == pytest.approx(np.exp(-2.0), abs=1e-15)

    def test_core_radius_below_shell(self):
        spec = CloudSpec(**SMALL, seed=3)
        gen = generate(spec)
        assert radii(gen.train, spec).max() < spec.atypical_shell[0]
        assert radii(gen.test_typical, spec).max() < spec.atypical_shell[0]

    def test_shell_radius_in_band(self):
        spec = CloudSpec(**SMALL, seed=4)
        gen = generate(spec)
        r = radii(gen.test_atypical, spec)
        lo, hi = spec.atypical_shell
        assert r.min() >= lo - 1e-9 and r.max() <= hi + 1e-9

    def test_lowrank_mode_band_and_subspace(self):
        spec = CloudSpec(**SMALL, seed=5, atypical_mode="lowrank", lowrank_directions=2)
        gen = generate(spec)
        r = radii(gen.test_atypical, spec)
        lo, hi = spec.atypical_shell
        assert r.min() >= lo - 1e-9 and r.max() <= hi + 1e-9
        # displacements of one class span at most lowrank_directions dimensions
        mask = gen.test_atypical.labels == 0
        disp = gen.test_atypical.features[mask]
        disp = disp - disp.mean(axis=0)
        rank = np.linalg.matrix_rank(disp, tol=1e-8)
        assert rank <= 2

    def test_impossible_core_raises(self):
        spec = CloudSpec(**SMALL, seed=6, atypical_shell=(0.2, 1.0), max_reject_rounds=5)
        with pytest.raises(GenerationError):
            generate(spec)

    def test_bad_shell_rejected(self):
        with pytest.raises(ParameterError):
            CloudSpec(atypical_shell=(2.0, 1.0))

    def test_too_many_classes_for_default_means(self):
        with pytest.raises(ParameterError):
            CloudSpec(num_classes=5, dim=3)

    def test_explicit_means_and_covariances(self):
        means = np.array([[0.0, 0.0], [6.0, 0.0]])
        covs = (np.diag([1.0, 0.25]), np.diag([0.5, 2.0]))
        spec = CloudSpec(num_classes=2, dim=2, samples_per_class=30,
                         test_typical_per_class=5, test_atypical_per_class=5,
                         class_means=means, covariances=covs, seed=7)
        gen = generate(spec)
        assert len(gen.train) == 60

    def test_non_pd_covariance_rejected(self):
        spec = CloudSpec(num_classes=1, dim=2, samples_per_class=5,
                         test_typical_per_class=2, test_atypical_per_class=2,
                         class_means=np.zeros((1, 2)),
                         covariances=(np.array([[1.0, 2.0], [2.0, 1.0]]),), seed=8)
        with pytest.raises(ParameterError, match="class 0"):
            generate(spec)


class TestOracleScoreCheck:
    def test_class_specific_scorer_tracks_oracle(self):
        gen = generate(CloudSpec(seed=0))   # default clouds
        bank = fit_class_specific(gen.train, nu=0.1, seed=0)
        res = oracle_score_check(bank, gen.train, mode="class_specific")
        assert not res.degenerate
        assert res.rho >= 0.9

    def test_constant_scorer_flagged(self):
        gen = generate(CloudSpec(**SMALL, seed=1))
        m = fit_ocsvm(gen.train, nu=0.2, seed=0)
        m.calibration = None    # probability() collapses to 0.5
        res = oracle_score_check(m, gen.train, mode="general")
        assert res.degenerate and res.rho == 0.0

    def test_anti_scorer_negative(self):
        gen = generate(CloudSpec(num_classes=1, dim=8, samples_per_class=300,
                                 test_typical_per_class=5, test_atypical_per_class=5,
                                 class_means=np.zeros((1, 8)), seed=2))
        m = fit_ocsvm(gen.train, nu=0.1, seed=0)
        flipped = type(m.calibration)(center=m.calibration.center,
                                      scale=-m.calibration.scale)
        m.calibration = flipped
        res = oracle_score_check(m, gen.train, mode="general")
        assert res.rho <= -0.9

    def test_missing_oracle_column(self):
        gen = generate(CloudSpec(**SMALL, seed=3))
        d = gen.train.with_features(gen.train.features)
        d.oracle_typ = None
        m = fit_ocsvm(gen.train, nu=0.2, seed=0)
        with pytest.raises(ParameterError):
            oracle_score_check(m, d, mode="general")
