"""Per-timestep variational imputation: encode, sample, decode, merge.

The encoder consumes the zero-filled observation vector alone (no mask
concatenation) and yields a diagonal-Gaussian latent; the decoder returns
a per-variable mean and log-variance. Reconstructed means fill the missing
positions; the reconstructed standard deviation becomes the uncertainty,
zeroed wherever the value was actually observed.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .params import ParameterStore

LOGVAR_CLAMP = 10.0


class VaeImputer:
    """Feedforward inference/generative pair over single time steps.

    Hidden layers apply dropout before a tanh activation; the mean and
    log-variance heads are linear, with log-variance clamped to
    [-LOGVAR_CLAMP, LOGVAR_CLAMP] on both sides.
    """

    def __init__(self, n_features: int, latent_dim: int, hidden_sizes,
                 dropout_rate: float, store: ParameterStore,
                 rng: np.random.Generator, prefix: str = "vae"):
        self.n_features = n_features
        self.latent_dim = latent_dim
        self.hidden_sizes = tuple(hidden_sizes)
        self.dropout_rate = dropout_rate
        self.store = store
        self.prefix = prefix

        enc_dims = [n_features, *self.hidden_sizes]
        for i in range(len(enc_dims) - 1):
            store.add_weight(f"{prefix}.enc.{i}.w", (enc_dims[i], enc_dims[i + 1]), rng)
            store.add_zeros(f"{prefix}.enc.{i}.b", (enc_dims[i + 1],))
        store.add_weight(f"{prefix}.enc.mu.w", (enc_dims[-1], latent_dim), rng)
        store.add_zeros(f"{prefix}.enc.mu.b", (latent_dim,))
        store.add_weight(f"{prefix}.enc.logvar.w", (enc_dims[-1], latent_dim), rng)
        store.add_zeros(f"{prefix}.enc.logvar.b", (latent_dim,))

        dec_dims = [latent_dim, *reversed(self.hidden_sizes)]
        for i in range(len(dec_dims) - 1):
            store.add_weight(f"{prefix}.dec.{i}.w", (dec_dims[i], dec_dims[i + 1]), rng)
            store.add_zeros(f"{prefix}.dec.{i}.b", (dec_dims[i + 1],))
        store.add_weight(f"{prefix}.dec.mu.w", (dec_dims[-1], n_features), rng)
        store.add_zeros(f"{prefix}.dec.mu.b", (n_features,))
        store.add_weight(f"{prefix}.dec.logvar.w", (dec_dims[-1], n_features), rng)
        store.add_zeros(f"{prefix}.dec.logvar.b", (n_features,))

    def parameters(self) -> list[Tensor]:
        return self.store.tensors(prefix=f"{self.prefix}.")

    def _trunk(self, x: Tensor, side: str, n_layers: int, training: bool,
               dropout_rng) -> Tensor:
        h = x
        for i in range(n_layers):
            h = h @ self.store[f"{self.prefix}.{side}.{i}.w"] + self.store[f"{self.prefix}.{side}.{i}.b"]
            h = ad.dropout(h, self.dropout_rate, dropout_rng, training)
            h = ad.tanh(h)
        return h

    def encode(self, x: Tensor, training: bool = False, dropout_rng=None) -> tuple[Tensor, Tensor]:
        """(mu, clamped logvar) of the latent posterior for rows of x."""
        h = self._trunk(x, "enc", len(self.hidden_sizes), training, dropout_rng)
        mu = h @ self.store[f"{self.prefix}.enc.mu.w"] + self.store[f"{self.prefix}.enc.mu.b"]
        logvar = h @ self.store[f"{self.prefix}.enc.logvar.w"] + self.store[f"{self.prefix}.enc.logvar.b"]
        return mu, ad.clip(logvar, -LOGVAR_CLAMP, LOGVAR_CLAMP)

    def decode(self, z: Tensor, training: bool = False, dropout_rng=None) -> tuple[Tensor, Tensor]:
        """(mu, clamped logvar) of the reconstruction for rows of z."""
        h = self._trunk(z, "dec", len(self.hidden_sizes), training, dropout_rng)
        mu = h @ self.store[f"{self.prefix}.dec.mu.w"] + self.store[f"{self.prefix}.dec.mu.b"]
        logvar = h @ self.store[f"{self.prefix}.dec.logvar.w"] + self.store[f"{self.prefix}.dec.logvar.b"]
        return mu, ad.clip(logvar, -LOGVAR_CLAMP, LOGVAR_CLAMP)


def reparameterize(mu: Tensor, logvar: Tensor, eps) -> Tensor:
    """z = mu + exp(logvar / 2) * eps with injectable noise."""
    return mu + ad.exp(logvar * 0.5) * ad.as_tensor(eps)


def merge_and_uncertainty(x: Tensor, mask, recon_mu: Tensor,
                          recon_sigma: Tensor) -> tuple[Tensor, Tensor]:
    """Keep observed values, fill the rest with the reconstruction mean.

    Uncertainty is the reconstructed standard deviation at missing
    positions and exactly zero where observed.
    """
    m = ad.as_tensor(mask)
    one_minus = ad.constant(1.0 - m.data)
    merged = x * m + recon_mu * one_minus
    uncertainty = recon_sigma * one_minus
    return merged, uncertainty
