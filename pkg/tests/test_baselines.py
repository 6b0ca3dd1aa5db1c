import math

import numpy as np
import pytest

from submatrix_mp.baselines import (
    brute_force_mle,
    brute_force_mle_bicluster,
    colsum_expected_error,
    colsum_threshold_bicluster,
    full_enumeration_bicluster,
    optimal_gamma,
    p_e,
    phi_cdf,
    q_function,
    rowsum_threshold,
)
from submatrix_mp.errors import TooLarge, ValidationError
from submatrix_mp.model import gen_bicluster, gen_symmetric


def symdiff(a, b):
    return len(set(map(int, a)) ^ set(map(int, b)))


def p_e_grid(pi1, s2, num=400001):
    s = math.sqrt(s2)
    g = np.linspace(-10, 10, num)
    return float(np.min(pi1 * q_function(s - g) + (1 - pi1) * q_function(g)))


class TestGaussian:
    def test_q_values(self):
        assert q_function(0) == 0.5
        assert abs(q_function(1) - 0.158655) < 1e-6
        x = np.linspace(-6, 6, 101)
        np.testing.assert_allclose(q_function(-x), 1 - q_function(x), atol=1e-15)
        assert np.abs(q_function(x) + phi_cdf(x) - 1).max() <= 1e-15

    def test_p_e_trivial(self):
        assert p_e(0.5, 0) == 0.5
        assert p_e(0.2, 0) == 0.2
        assert abs(p_e(0.5, 2.25) - q_function(0.75)) < 1e-15

    def test_p_e_grid_oracle(self):
        for pi1, s2 in [(0.1, 4.0), (0.3, 1.0), (0.05, 9.0), (0.5, 0.5)]:
            assert abs(p_e(pi1, s2) - p_e_grid(pi1, s2)) < 1e-6

    def test_p_e_example(self):
        g = optimal_gamma(0.1, 2.0)
        assert abs(g - (1 + math.log(9) / 2)) < 1e-12
        assert abs(p_e(0.1, 4.0) - 0.0700607) < 1e-6

    def test_p_e_monotone_and_bounded(self):
        for pi1 in (0.05, 0.3, 0.5, 0.8):
            vals = [p_e(pi1, s2) for s2 in np.linspace(0, 20, 60)]
            assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
            assert max(vals) <= min(pi1, 1 - pi1) + 1e-15

    def test_p_e_validation(self):
        with pytest.raises(ValidationError):
            p_e(0.0, 1.0)
        with pytest.raises(ValidationError):
            p_e(0.5, -1.0)


class TestRowsum:
    def test_noiseless(self):
        inst = gen_symmetric(50, 8, 1.0, seed=0, noiseless=True)
        np.testing.assert_array_equal(rowsum_threshold(inst.W, 50, 8, 1.0), inst.support)

    @pytest.mark.parametrize("n,K,mu,trials", [(100, 10, 2.0, 500), (200, 20, 1.5, 2000),
                                               (150, 10, 3.0, 2000)])
    def test_mean_error(self, n, K, mu, trials):
        errs = []
        for s in range(trials):
            inst = gen_symmetric(n, K, mu, seed=s)
            errs.append(symdiff(rowsum_threshold(inst.W, n, K, mu), inst.support))
        errs = np.array(errs, dtype=float)
        se = errs.std(ddof=1) / np.sqrt(len(errs))
        assert abs(errs.mean() - n * q_function(K * mu / (2 * np.sqrt(n)))) < 3 * se

    def test_huge_mu(self):
        for s in range(5):
            inst = gen_symmetric(60, 6, 1e3, seed=s)
            np.testing.assert_array_equal(rowsum_threshold(inst.W, 60, 6, 1e3), inst.support)

    def test_prior_rule_shifts_cut(self):
        inst = gen_symmetric(100, 10, 2.0, seed=1)
        mid = rowsum_threshold(inst.W, 100, 10, 2.0)
        prior = rowsum_threshold(inst.W, 100, 10, 2.0, rule="prior")
        assert set(prior) <= set(mid)
        with pytest.raises(ValidationError):
            rowsum_threshold(inst.W, 100, 10, 2.0, rule="other")


class TestColsum:
    def test_noiseless_both_axes(self):
        inst = gen_bicluster(40, 50, 5, 8, 1.0, seed=0, noiseless=True)
        np.testing.assert_array_equal(colsum_threshold_bicluster(inst.W, 5, 8, 1.0, axis=0),
                                      inst.col_support)
        np.testing.assert_array_equal(colsum_threshold_bicluster(inst.W, 5, 8, 1.0, axis=1),
                                      inst.row_support)

    def test_zero_signal_half(self):
        sizes = []
        for s in range(100):
            W = np.random.default_rng(s).standard_normal((40, 60))
            sizes.append(len(colsum_threshold_bicluster(W, 5, 8, 1e-12)))
        assert abs(np.mean(sizes) - 30) < 3 * np.std(sizes) / 10

    def test_error_rate_formula(self):
        n1, n2, K1, K2, mu = 400, 300, 40, 30, 1.0
        errs = []
        for s in range(200):
            inst = gen_bicluster(n1, n2, K1, K2, mu, seed=s)
            est = colsum_threshold_bicluster(inst.W, K1, K2, mu, axis=0, rule="prior")
            errs.append(symdiff(est, inst.col_support) / K2)
        errs = np.array(errs)
        se = errs.std(ddof=1) / np.sqrt(len(errs))
        assert abs(errs.mean() - colsum_expected_error(n1, n2, K1, K2, mu)) < 3 * se

    def test_validation(self):
        with pytest.raises(ValidationError):
            colsum_threshold_bicluster(np.zeros((3, 3)), 1, 1, 0.0)
        with pytest.raises(ValidationError):
            colsum_threshold_bicluster(np.zeros((3, 3)), 1, 1, 1.0, axis=2)


class TestMLE:
    def test_noiseless(self):
        inst = gen_symmetric(10, 3, 1.0, seed=2, noiseless=True)
        np.testing.assert_array_equal(brute_force_mle(inst.W, 3), inst.support)

    def test_high_snr(self):
        for s in range(10):
            inst = gen_symmetric(12, 3, 5.0, seed=s)
            np.testing.assert_array_equal(brute_force_mle(inst.W, 3), inst.support)

    def test_tie_lexicographic(self):
        np.testing.assert_array_equal(brute_force_mle(np.zeros((6, 6)), 3), [0, 1, 2])

    def test_too_large(self):
        with pytest.raises(TooLarge):
            brute_force_mle(np.zeros((40, 40)), 10)
        with pytest.raises(TooLarge):
            brute_force_mle_bicluster(np.zeros((30, 5)), 10, 2)

    def test_pruned_equals_full(self):
        rng = np.random.default_rng(0)
        for trial in range(30):
            n1, n2 = rng.integers(2, 9, size=2)
            K1, K2 = rng.integers(1, n1 + 1), rng.integers(1, n2 + 1)
            W = rng.standard_normal((n1, n2))
            W[:K1, :K2] += rng.uniform(0, 2)
            r1, c1 = brute_force_mle_bicluster(W, K1, K2)
            r2, c2 = full_enumeration_bicluster(W, K1, K2)
            v1 = W[np.ix_(r1, c1)].sum()
            v2 = W[np.ix_(r2, c2)].sum()
            assert abs(v1 - v2) < 1e-12
            np.testing.assert_array_equal(r1, r2)

    def test_bicluster_noiseless(self):
        inst = gen_bicluster(8, 9, 3, 4, 1.0, seed=1, noiseless=True)
        rows, cols = brute_force_mle_bicluster(inst.W, 3, 4)
        np.testing.assert_array_equal(rows, inst.row_support)
        np.testing.assert_array_equal(cols, inst.col_support)
