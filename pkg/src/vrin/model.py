"""Full network: variational stage feeding the recurrent completion stage.

One forward pass encodes every (sample, time step) observation vector,
draws a single latent sample, decodes a reconstruction distribution,
merges it with the observations, and unrolls the recurrent network over
the merged estimates and their uncertainties. Bidirectional mode unrolls a
second, independently parameterized recurrent network over the
time-reversed sequence (time gaps recomputed on reversed timestamps) and
averages the two outcome logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import losses as L
from .autodiff import Tensor
from .config import TrainConfig
from .data import MaskedBatch, build_delta
from .params import ParameterStore
from .recurrent import RecurrentImputer, StepTrace, reverse_timestamps
from .rng import RandomStreams
from .vae import VaeImputer, merge_and_uncertainty, reparameterize


@dataclass
class ImputationOutputs:
    """Arrays produced by one evaluation pass over a batch."""

    merged: np.ndarray       # variational estimates with observations kept, (N, T, D)
    uncertainty: np.ndarray  # zero at observed positions, (N, T, D)
    combined: np.ndarray     # blended recurrent/variational estimates, (N, T, D)
    completed: np.ndarray    # observations where available, else combined, (N, T, D)
    scores: np.ndarray       # outcome probabilities, (N,)


@dataclass
class ForwardPass:
    """Graph tensors and traces from one forward evaluation."""

    latent_mu: Tensor
    latent_logvar: Tensor
    recon_mu: Tensor
    recon_logvar: Tensor
    merged: Tensor        # (N, T, D)
    uncertainty: Tensor   # (N, T, D)
    forward_trace: StepTrace
    backward_trace: StepTrace | None
    logit: Tensor         # (N,)


def _np_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class VrinModel:
    """Variational-recurrent imputation network with outcome head."""

    def __init__(self, config: TrainConfig, init_rng: np.random.Generator | None = None):
        config.validate()
        self.config = config
        self.store = ParameterStore(dtype=config.dtype)
        rng = init_rng if init_rng is not None else RandomStreams(config.seed).init
        self.vae = VaeImputer(config.n_features, config.latent_dim, config.encoder_sizes,
                              config.dropout_rate, self.store, rng)
        gate = config.variant == "v_rin_full"
        self.forward_net = RecurrentImputer(config.n_features, config.hidden_size,
                                            self.store, rng, prefix="rnn.fwd",
                                            use_uncertainty_gate=gate)
        self.backward_net = None
        if config.direction == "bi":
            self.backward_net = RecurrentImputer(config.n_features, config.hidden_size,
                                                 self.store, rng, prefix="rnn.bwd",
                                                 use_uncertainty_gate=gate)

    def parameters(self):
        return self.store.tensors()

    # ------------------------------------------------------------------
    # forward

    def forward(self, batch: MaskedBatch, training: bool = False,
                streams: RandomStreams | None = None,
                frozen_eps: np.ndarray | None = None) -> ForwardPass:
        cfg = self.config
        n, t_len, d = batch.values.shape
        if (t_len, d) != (cfg.n_steps, cfg.n_features):
            raise ValueError(
                f"batch grid {(t_len, d)} does not match config "
                f"(n_steps={cfg.n_steps}, n_features={cfg.n_features})")
        dtype = cfg.dtype
        values = batch.values.astype(dtype, copy=False)
        mask = batch.mask.astype(dtype, copy=False)
        delta = batch.delta.astype(dtype, copy=False)

        flat_values = ad.constant(values.reshape(n * t_len, d), dtype=dtype)
        flat_mask = mask.reshape(n * t_len, d)

        dropout_rng = streams.dropout if (training and streams is not None) else None
        latent_mu, latent_logvar = self.vae.encode(flat_values, training, dropout_rng)
        if frozen_eps is not None:
            eps = frozen_eps.reshape(n * t_len, cfg.latent_dim)
        elif training:
            if streams is None:
                raise ValueError("training forward pass needs random streams")
            eps = streams.noise.standard_normal((n * t_len, cfg.latent_dim))
        else:
            eps = np.zeros((n * t_len, cfg.latent_dim))
        z = reparameterize(latent_mu, latent_logvar, eps.astype(dtype))
        recon_mu, recon_logvar = self.vae.decode(z, training, dropout_rng)

        sigma = ad.exp(recon_logvar * 0.5)
        merged_flat, unc_flat = merge_and_uncertainty(flat_values, flat_mask, recon_mu, sigma)
        merged = ad.reshape(merged_flat, (n, t_len, d))
        uncertainty = ad.reshape(unc_flat, (n, t_len, d))

        fwd_trace = self.forward_net.unroll(values, mask, delta, merged, uncertainty)
        bwd_trace = None
        logit = fwd_trace.logit
        if self.backward_net is not None:
            values_rev = values[:, ::-1, :]
            mask_rev = mask[:, ::-1, :]
            delta_rev = build_delta(mask_rev, reverse_timestamps(batch.timestamps)).astype(dtype)
            merged_rev = ad.flip(merged, axis=1)
            unc_rev = ad.flip(uncertainty, axis=1)
            bwd_trace = self.backward_net.unroll(values_rev, mask_rev, delta_rev,
                                                 merged_rev, unc_rev)
            logit = (fwd_trace.logit + bwd_trace.logit) * 0.5

        return ForwardPass(latent_mu=latent_mu, latent_logvar=latent_logvar,
                           recon_mu=recon_mu, recon_logvar=recon_logvar,
                           merged=merged, uncertainty=uncertainty,
                           forward_trace=fwd_trace, backward_trace=bwd_trace,
                           logit=logit)

    # ------------------------------------------------------------------
    # losses

    def _regression_loss(self, trace: StepTrace, values: np.ndarray,
                         mask: np.ndarray) -> tuple[Tensor, int]:
        total = None
        count = int(round(float(mask.sum())))
        for t, combined_t in enumerate(trace.combined):
            m_t = mask[:, t, :]
            if not m_t.any():
                continue
            term = ad.sum_(ad.absolute(ad.constant(values[:, t, :]) - combined_t)
                           * ad.constant(m_t))
            total = term if total is None else total + term
        if total is None or count == 0:
            return ad.constant(0.0), 0
        return total * (1.0 / count), count

    def compute_losses(self, batch: MaskedBatch, training: bool = False,
                       streams: RandomStreams | None = None,
                       frozen_eps: np.ndarray | None = None,
                       include_prediction: bool = True):
        """Forward pass plus every loss term.

        Returns (total loss tensor, LossBreakdown, ForwardPass).
        """
        cfg = self.config
        fp = self.forward(batch, training=training, streams=streams, frozen_eps=frozen_eps)
        n, t_len, d = batch.values.shape
        dtype = cfg.dtype
        values = batch.values.astype(dtype, copy=False)
        mask = batch.mask.astype(dtype, copy=False)

        kl = L.kl_diag_gaussian(fp.latent_mu, fp.latent_logvar)
        flat_values = ad.constant(values.reshape(n * t_len, d), dtype=dtype)
        ll_mask = mask.reshape(n * t_len, d) if cfg.likelihood_observed_only \
            else np.ones((n * t_len, d), dtype=dtype)
        loglik = L.gaussian_log_likelihood(flat_values, fp.recon_mu, fp.recon_logvar, ll_mask)
        penalty = L.l1_penalty(self.vae.parameters())
        l_vae = kl - loglik + penalty * cfg.l1_weight

        l_reg, count_f = self._regression_loss(fp.forward_trace, values, mask)
        l_cons = None
        if fp.backward_trace is not None:
            l_reg_b, _ = self._regression_loss(fp.backward_trace, values[:, ::-1, :],
                                               mask[:, ::-1, :])
            l_reg = (l_reg + l_reg_b) * 0.5
            diff_total = None
            for t in range(t_len):
                pair = ad.sum_(ad.absolute(fp.forward_trace.completed[t]
                                           - fp.backward_trace.completed[t_len - 1 - t]))
                diff_total = pair if diff_total is None else diff_total + pair
            l_cons = diff_total * (1.0 / (n * t_len * d))

        if include_prediction:
            l_pred = L.bce_with_logits(fp.logit, batch.labels.astype(dtype))
        else:
            l_pred = ad.constant(0.0)

        mode = "bi" if fp.backward_trace is not None else "uni"
        total = L.combine_total(l_vae, l_reg, l_pred, cfg.alpha, cfg.beta,
                                l_cons=l_cons, xi=cfg.xi, mode=mode)
        breakdown = L.LossBreakdown(
            l_vae=float(l_vae.data),
            l_reg=float(l_reg.data),
            l_pred=float(l_pred.data),
            l_cons=float(l_cons.data) if l_cons is not None else 0.0,
            l_total=float(total.data),
            l1_penalty=float(penalty.data),
            no_observed_entries=(count_f == 0),
        )
        return total, breakdown, fp

    # ------------------------------------------------------------------
    # evaluation-mode outputs

    def impute(self, batch: MaskedBatch) -> ImputationOutputs:
        """Deterministic outputs: dropout off, latent at its posterior mean.

        In bidirectional mode the two directions' combined and completed
        estimates are averaged after aligning the backward trace to the
        original time order; observed entries are preserved exactly either
        way.
        """
        fp = self.forward(batch, training=False)
        combined = fp.forward_trace.combined_array()
        completed = fp.forward_trace.completed_array()
        if fp.backward_trace is not None:
            combined_b = fp.backward_trace.combined_array()[:, ::-1, :]
            completed_b = fp.backward_trace.completed_array()[:, ::-1, :]
            combined = (combined + combined_b) * 0.5
            completed = (completed + completed_b) * 0.5
        return ImputationOutputs(
            merged=fp.merged.data.copy(),
            uncertainty=fp.uncertainty.data.copy(),
            combined=combined,
            completed=completed,
            scores=_np_sigmoid(fp.logit.data),
        )

    def predict_scores(self, batch: MaskedBatch) -> np.ndarray:
        fp = self.forward(batch, training=False)
        return _np_sigmoid(fp.logit.data)
