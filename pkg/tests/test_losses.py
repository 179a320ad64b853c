"""Loss-term spot values, invariants, and gradient checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrin import autodiff as ad
from vrin import losses as L


class TestKl:
    def test_identical_distributions(self):
        kl = L.kl_diag_gaussian(ad.constant([0.0]), ad.constant([0.0]))
        assert float(kl.data) == 0.0

    def test_unit_mean_shift(self):
        kl = L.kl_diag_gaussian(ad.constant([1.0]), ad.constant([0.0]))
        assert float(kl.data) == pytest.approx(0.5, abs=1e-12)

    def test_variance_four(self):
        kl = L.kl_diag_gaussian(ad.constant([0.0]), ad.constant([math.log(4.0)]))
        expected = 0.5 * (4.0 - 1.0 - math.log(4.0))
        assert float(kl.data) == pytest.approx(expected, abs=1e-12)
        assert float(kl.data) == pytest.approx(0.8068528194400547, abs=1e-12)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=100, deadline=None)
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        mu = rng.normal(size=7) * 3.0
        logvar = rng.uniform(-6.0, 6.0, size=7)
        kl = L.kl_diag_gaussian(ad.constant(mu), ad.constant(logvar))
        assert float(kl.data) >= 0.0

    def test_nonnegative_ten_thousand_draws(self):
        rng = np.random.default_rng(99)
        mu = rng.normal(size=10_000) * 3.0
        logvar = rng.uniform(-6.0, 6.0, size=10_000)
        per_draw = 0.5 * (np.exp(logvar) + mu ** 2 - 1.0 - logvar)
        assert np.all(per_draw >= 0.0)
        total = float(L.kl_diag_gaussian(ad.constant(mu), ad.constant(logvar)).data)
        assert total == pytest.approx(per_draw.sum(), rel=1e-12)

    def test_gradients(self):
        mu = ad.parameter(np.random.default_rng(0).normal(size=5))
        logvar = ad.parameter(np.random.default_rng(1).uniform(-2, 2, size=5))
        err = ad.grad_check(lambda: L.kl_diag_gaussian(mu, logvar), [mu, logvar])
        assert err < 1e-7


class TestGaussianLogLikelihood:
    def test_perfect_fit_single_entry(self):
        ll = L.gaussian_log_likelihood(ad.constant([2.0]), ad.constant([2.0]),
                                       ad.constant([0.0]), np.array([1.0]))
        assert float(ll.data) == pytest.approx(-0.9189385332046727, abs=1e-12)

    def test_all_missing_is_zero(self):
        ll = L.gaussian_log_likelihood(ad.constant([2.0, 3.0]), ad.constant([0.0, 0.0]),
                                       ad.constant([0.0, 0.0]), np.array([0.0, 0.0]))
        assert float(ll.data) == 0.0

    def test_unit_residual(self):
        ll = L.gaussian_log_likelihood(ad.constant([1.0]), ad.constant([0.0]),
                                       ad.constant([0.0]), np.array([1.0]))
        assert float(ll.data) == pytest.approx(-1.4189385332046727, abs=1e-12)


class TestMaskedMae:
    def test_both_observed(self):
        loss, n = L.masked_mae(ad.constant([1.0, 2.0]), ad.constant([2.0, 2.0]),
                               np.array([1.0, 1.0]))
        assert float(loss.data) == 0.5 and n == 2

    def test_only_first_observed(self):
        loss, _ = L.masked_mae(ad.constant([1.0, 2.0]), ad.constant([2.0, 2.0]),
                               np.array([1.0, 0.0]))
        assert float(loss.data) == 1.0

    def test_exact_match_is_zero(self):
        loss, _ = L.masked_mae(ad.constant([3.0, 4.0]), ad.constant([3.0, 4.0]),
                               np.array([1.0, 1.0]))
        assert float(loss.data) == 0.0

    def test_no_observed_entries_flagged(self):
        loss, n = L.masked_mae(ad.constant([1.0]), ad.constant([9.0]), np.array([0.0]))
        assert float(loss.data) == 0.0 and n == 0

    def test_invariant_to_unobserved_positions(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=6)
        est = rng.normal(size=6)
        mask = np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
        a, _ = L.masked_mae(ad.constant(x), ad.constant(est), mask)
        x2 = x.copy()
        x2[mask == 0.0] = 999.0
        b, _ = L.masked_mae(ad.constant(x2), ad.constant(est), mask)
        assert float(a.data) == float(b.data)


class TestBce:
    def test_half_probability(self):
        loss = L.bce_with_logits(ad.constant([0.0]), np.array([1.0]))
        assert float(loss.data) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_extreme_negative_logit_true_negative(self):
        loss = L.bce_with_logits(ad.constant([-100.0]), np.array([0.0]))
        assert float(loss.data) == pytest.approx(0.0, abs=1e-12)

    def test_stable_at_large_magnitude_logits(self):
        loss = L.bce_with_logits(ad.constant([100.0, -100.0]), np.array([0.0, 1.0]))
        assert np.isfinite(float(loss.data))

    @given(st.floats(-36.0, 36.0), st.integers(0, 1))
    @settings(max_examples=200, deadline=None)
    def test_matches_naive_formula(self, logit, y):
        # The float64 naive form cancels catastrophically at large |logit|,
        # so evaluate it in 50-digit arithmetic as the oracle.
        import mpmath

        stable = float(L.bce_with_logits(ad.constant([logit]), np.array([float(y)])).data)
        with mpmath.workdps(50):
            p = 1 / (1 + mpmath.exp(-mpmath.mpf(logit)))
            naive = float(-y * mpmath.log(p) - (1 - y) * mpmath.log(1 - p))
        assert stable == pytest.approx(naive, abs=1e-12)

    def test_gradient(self):
        logit = ad.parameter([0.3, -1.2, 2.0])
        y = np.array([1.0, 0.0, 1.0])
        assert ad.grad_check(lambda: L.bce_with_logits(logit, y), [logit]) < 1e-8


class TestConsistency:
    def test_identical_is_zero(self):
        a = ad.constant([[1.0, 2.0]])
        assert float(L.mean_absolute_difference(a, a).data) == 0.0

    def test_constant_offset(self):
        a = ad.constant(np.zeros((2, 3)))
        b = ad.constant(np.ones((2, 3)))
        assert float(L.mean_absolute_difference(a, b).data) == 1.0

    def test_mixed(self):
        a = ad.constant([0.0, 2.0])
        b = ad.constant([1.0, 1.0])
        assert float(L.mean_absolute_difference(a, b).data) == 1.0


class TestL1Penalty:
    def test_doubling_lambda_doubles_penalty(self):
        w = ad.constant([1.0, -2.0, 3.0])
        base = float((L.l1_penalty([w]) * 1e-5).data)
        doubled = float((L.l1_penalty([w]) * 2e-5).data)
        assert doubled == pytest.approx(2.0 * base, rel=1e-12)

    def test_value(self):
        w1 = ad.constant([1.0, -2.0])
        w2 = ad.constant([[0.5]])
        assert float(L.l1_penalty([w1, w2]).data) == 3.5


class TestCombineTotal:
    def test_alpha_beta_zero_leaves_prediction(self):
        total = L.combine_total(ad.constant(3.0), ad.constant(5.0), ad.constant(0.7),
                                alpha=0.0, beta=0.0)
        assert float(total.data) == pytest.approx(0.7, abs=1e-15)

    def test_weighted_sum(self):
        total = L.combine_total(ad.constant(2.0), ad.constant(4.0), ad.constant(1.0),
                                alpha=0.75, beta=0.25)
        assert float(total.data) == pytest.approx(0.75 * 2.0 + 0.25 * 4.0 + 1.0, abs=1e-12)

    def test_alpha_scaling_is_linear(self):
        l_vae, l_reg, l_pred = ad.constant(2.0), ad.constant(4.0), ad.constant(1.0)
        base = float(L.combine_total(l_vae, l_reg, l_pred, 0.4, 0.25).data)
        scaled = float(L.combine_total(l_vae, l_reg, l_pred, 0.8, 0.25).data)
        assert scaled - base == pytest.approx(0.4 * 2.0, abs=1e-12)

    def test_consistency_term_only_in_bi_mode(self):
        args = (ad.constant(1.0), ad.constant(1.0), ad.constant(1.0))
        uni = L.combine_total(*args, alpha=0.5, beta=0.5, l_cons=ad.constant(10.0),
                              xi=0.1, mode="uni")
        bi = L.combine_total(*args, alpha=0.5, beta=0.5, l_cons=ad.constant(10.0),
                             xi=0.1, mode="bi")
        assert float(bi.data) - float(uni.data) == pytest.approx(1.0, abs=1e-12)

    def test_bi_mode_requires_consistency(self):
        with pytest.raises(ValueError):
            L.combine_total(ad.constant(1.0), ad.constant(1.0), ad.constant(1.0),
                            alpha=0.5, beta=0.5, mode="bi")
