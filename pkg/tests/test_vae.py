"""Variational stage: shapes, determinism, clamping, merge semantics."""

import numpy as np
import pytest

from vrin import autodiff as ad
from vrin.params import ParameterStore
from vrin.vae import LOGVAR_CLAMP, VaeImputer, merge_and_uncertainty, reparameterize


@pytest.fixture
def vae():
    store = ParameterStore()
    return VaeImputer(n_features=5, latent_dim=3, hidden_sizes=(8, 6),
                      dropout_rate=0.2, store=store, rng=np.random.default_rng(0))


class TestEncode:
    def test_output_shapes(self, vae):
        mu, logvar = vae.encode(ad.constant(np.zeros((4, 5))))
        assert mu.shape == (4, 3) and logvar.shape == (4, 3)

    def test_eval_mode_deterministic(self, vae):
        x = ad.constant(np.random.default_rng(1).normal(size=(4, 5)))
        a = vae.encode(x)
        b = vae.encode(x)
        assert np.array_equal(a[0].data, b[0].data)
        assert np.array_equal(a[1].data, b[1].data)

    def test_zero_heads_give_zero_outputs(self, vae):
        for head in ("mu", "logvar"):
            vae.store[f"vae.enc.{head}.w"].data[:] = 0.0
            vae.store[f"vae.enc.{head}.b"].data[:] = 0.0
        mu, logvar = vae.encode(ad.constant(np.zeros((1, 5))))
        assert np.array_equal(mu.data, np.zeros((1, 3)))
        assert np.array_equal(logvar.data, np.zeros((1, 3)))

    def test_logvar_clamped_over_random_inputs(self, vae):
        # huge head weights force the pre-clamp value far outside the range
        vae.store["vae.enc.logvar.w"].data[:] = 100.0
        rng = np.random.default_rng(2)
        x = ad.constant(rng.normal(size=(10_000, 5)) * 10.0)
        _, logvar = vae.encode(x)
        assert np.all(logvar.data >= -LOGVAR_CLAMP)
        assert np.all(logvar.data <= LOGVAR_CLAMP)


class TestDecode:
    def test_output_shapes(self, vae):
        mu, logvar = vae.decode(ad.constant(np.zeros((7, 3))))
        assert mu.shape == (7, 5) and logvar.shape == (7, 5)

    def test_eval_mode_deterministic(self, vae):
        z = ad.constant(np.random.default_rng(3).normal(size=(2, 3)))
        a = vae.decode(z)
        b = vae.decode(z)
        assert np.array_equal(a[0].data, b[0].data)

    def test_gradient_flows_from_both_heads(self, vae):
        z = ad.parameter(np.random.default_rng(4).normal(size=(2, 3)))

        def fn():
            mu, logvar = vae.decode(z)
            return ad.sum_(mu) + ad.sum_(logvar)

        assert ad.grad_check(fn, [z]) < 1e-7
        z.zero_grad()
        with ad.record() as tape:
            loss = fn()
        tape.backward(loss)
        assert np.any(z.grad != 0.0)


class TestReparameterize:
    def test_zero_noise_returns_mean(self):
        mu = ad.constant([1.5, -2.0])
        z = reparameterize(mu, ad.constant([0.3, 0.3]), np.zeros(2))
        assert np.array_equal(z.data, mu.data)

    def test_unit_noise_unit_variance(self):
        z = reparameterize(ad.constant([0.0]), ad.constant([0.0]), np.array([1.0]))
        assert np.array_equal(z.data, [1.0])

    def test_sigma_two(self):
        mu = np.array([0.5, -0.5])
        z = reparameterize(ad.constant(mu), ad.constant(np.log(4.0) * np.ones(2)),
                           np.array([1.0, -1.0]))
        assert np.allclose(z.data, mu + np.array([2.0, -2.0]), atol=1e-12)

    def test_full_path_deterministic_with_frozen_noise(self, vae):
        x = ad.constant(np.random.default_rng(5).normal(size=(3, 5)))
        eps = np.random.default_rng(6).standard_normal((3, 3))

        def run():
            mu, logvar = vae.encode(x)
            z = reparameterize(mu, logvar, eps)
            return vae.decode(z)

        a, b = run(), run()
        assert np.array_equal(a[0].data, b[0].data)
        assert np.array_equal(a[1].data, b[1].data)


class TestMergeAndUncertainty:
    def test_fully_observed(self):
        x = ad.constant([[7.0, 3.0]])
        merged, unc = merge_and_uncertainty(x, np.ones((1, 2)),
                                            ad.constant([[9.0, 9.0]]),
                                            ad.constant([[3.0, 4.0]]))
        assert np.array_equal(merged.data, x.data)
        assert np.array_equal(unc.data, np.zeros((1, 2)))

    def test_fully_missing(self):
        merged, unc = merge_and_uncertainty(ad.constant([[0.0, 0.0]]), np.zeros((1, 2)),
                                            ad.constant([[9.0, 2.0]]),
                                            ad.constant([[3.0, 4.0]]))
        assert np.array_equal(merged.data, [[9.0, 2.0]])
        assert np.array_equal(unc.data, [[3.0, 4.0]])

    def test_elementwise_example(self):
        merged, unc = merge_and_uncertainty(ad.constant([[7.0, 0.0]]),
                                            np.array([[1.0, 0.0]]),
                                            ad.constant([[9.0, 2.0]]),
                                            ad.constant([[3.0, 4.0]]))
        assert np.array_equal(merged.data, [[7.0, 2.0]])
        assert np.array_equal(unc.data, [[0.0, 4.0]])

    def test_observed_passthrough_bit_exact_random(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            x = rng.normal(size=(6, 4))
            mask = (rng.random((6, 4)) < 0.5).astype(np.float64)
            x = np.where(mask == 1.0, x, 0.0)
            merged, unc = merge_and_uncertainty(
                ad.constant(x), mask, ad.constant(rng.normal(size=(6, 4))),
                ad.constant(np.abs(rng.normal(size=(6, 4)))))
            assert np.array_equal(merged.data * mask, x * mask)
            assert np.array_equal(unc.data * mask, np.zeros((6, 4)))
            assert np.all(unc.data >= 0.0)
