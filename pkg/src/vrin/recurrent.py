"""Uncertainty-aware recurrent completion network.

Per time step: an uncertainty decay gate reweights cross-feature
regressions of the merged estimates; a temporal decay factor derived from
observation gaps damps the hidden state; history regression plus a second
zero-diagonal feature regression yields a temporal estimate; a 1x1
convolution (two scalar channel weights and a bias) blends the two
estimates; observed values then overwrite the blend, and a gated recurrent
cell consumes the completed vector concatenated with its mask. The last
hidden state drives the outcome logit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .params import ParameterStore


@dataclass
class StepTrace:
    """Per-step intermediates from one unroll over a batch.

    Tensors needed by losses (combined and completed estimates, logit) are
    kept as graph nodes; everything else is a numpy snapshot stacked along
    time for diagnostics.
    """

    combined: list = field(default_factory=list)   # per t: (N, D) tensor
    completed: list = field(default_factory=list)  # per t: (N, D) tensor
    logit: Tensor | None = None
    unc_decay: np.ndarray | None = None    # (N, T, D)
    temp_decay: np.ndarray | None = None   # (N, T, H)
    hidden: np.ndarray | None = None       # (N, H) final

    def combined_array(self) -> np.ndarray:
        return np.stack([c.data for c in self.combined], axis=1)

    def completed_array(self) -> np.ndarray:
        return np.stack([c.data for c in self.completed], axis=1)


class RecurrentImputer:
    """One direction's recurrent parameters and step functions."""

    def __init__(self, n_features: int, hidden_size: int, store: ParameterStore,
                 rng: np.random.Generator, prefix: str = "rnn.fwd",
                 use_uncertainty_gate: bool = True):
        self.n_features = n_features
        self.hidden_size = hidden_size
        self.store = store
        self.prefix = prefix
        self.use_uncertainty_gate = use_uncertainty_gate

        d, h = n_features, hidden_size
        store.add_weight(f"{prefix}.unc_decay.w", (d, d), rng)
        store.add_zeros(f"{prefix}.unc_decay.b", (d,))
        store.add_weight(f"{prefix}.feat_reg.w", (d, d), rng, zero_diag=True)
        store.add_zeros(f"{prefix}.feat_reg.b", (d,))
        store.add_weight(f"{prefix}.temp_decay.w", (d, h), rng)
        store.add_zeros(f"{prefix}.temp_decay.b", (h,))
        store.add_weight(f"{prefix}.hist_reg.w", (h, d), rng)
        store.add_zeros(f"{prefix}.hist_reg.b", (d,))
        store.add_weight(f"{prefix}.feat_on_hist.w", (d, d), rng, zero_diag=True)
        store.add_zeros(f"{prefix}.feat_on_hist.b", (d,))
        store.add_weight(f"{prefix}.combine.w", (2,), rng, fan_in=2)
        store.add_zeros(f"{prefix}.combine.b", ())
        for gate in ("update", "reset", "cand"):
            store.add_weight(f"{prefix}.cell.{gate}.w_in", (2 * d, h), rng, fan_in=2 * d)
            store.add_weight(f"{prefix}.cell.{gate}.w_h", (h, h), rng, fan_in=h)
            store.add_zeros(f"{prefix}.cell.{gate}.b", (h,))
        store.add_weight(f"{prefix}.out.w", (h, 1), rng)
        store.add_zeros(f"{prefix}.out.b", (1,))

    def parameters(self) -> list[Tensor]:
        return self.store.tensors(prefix=f"{self.prefix}.")

    def _p(self, name: str) -> Tensor:
        return self.store[f"{self.prefix}.{name}"]

    def uncertainty_gated_estimate(self, merged_t: Tensor, unc_t: Tensor):
        """Decay factor in (0, 1] from the uncertainty, applied to a
        cross-feature regression of the merged estimates."""
        regressed = merged_t @ ad.zero_diagonal(self._p("feat_reg.w")) + self._p("feat_reg.b")
        if not self.use_uncertainty_gate:
            return None, regressed
        pre = unc_t @ self._p("unc_decay.w") + self._p("unc_decay.b")
        gate = ad.exp(ad.negate(ad.relu(pre)))
        return gate, regressed * gate

    def temporal_decayed_history(self, h_prev: Tensor, delta_t):
        """Decay factor in (0, 1] from observation gaps, applied to the
        hidden state elementwise."""
        pre = ad.as_tensor(delta_t) @ self._p("temp_decay.w") + self._p("temp_decay.b")
        decay = ad.exp(ad.negate(ad.relu(pre)))
        return decay, h_prev * decay

    def history_feature_estimate(self, h_decayed: Tensor):
        """Regression of the complete observation from decayed history,
        then a zero-diagonal cross-feature pass on top of it."""
        x_hist = h_decayed @ self._p("hist_reg.w") + self._p("hist_reg.b")
        x_feat = x_hist @ ad.zero_diagonal(self._p("feat_on_hist.w")) + self._p("feat_on_hist.b")
        return x_hist, x_feat

    def combine_and_complete(self, x_gated: Tensor, x_feat: Tensor, x_t, mask_t):
        """Blend the two estimate channels with shared scalars, then put
        observed values back in place."""
        w = self._p("combine.w")
        combined = x_gated * w[0] + x_feat * w[1] + self._p("combine.b")
        m = ad.as_tensor(mask_t)
        completed = ad.as_tensor(x_t) * m + combined * ad.constant(1.0 - m.data)
        return combined, completed

    def gated_cell_step(self, completed_t: Tensor, mask_t, h_decayed: Tensor) -> Tensor:
        """Update/reset-gated recurrent step over [completed, mask]."""
        inp = ad.concat([completed_t, ad.as_tensor(mask_t)], axis=1)
        z = ad.sigmoid(inp @ self._p("cell.update.w_in") + h_decayed @ self._p("cell.update.w_h")
                       + self._p("cell.update.b"))
        r = ad.sigmoid(inp @ self._p("cell.reset.w_in") + h_decayed @ self._p("cell.reset.w_h")
                       + self._p("cell.reset.b"))
        cand = ad.tanh(inp @ self._p("cell.cand.w_in") + (r * h_decayed) @ self._p("cell.cand.w_h")
                       + self._p("cell.cand.b"))
        return (1.0 - z) * h_decayed + z * cand

    def predict_outcome(self, h_last: Tensor) -> Tensor:
        """Pre-sigmoid outcome logit, shape (N,)."""
        return ad.reshape(h_last @ self._p("out.w") + self._p("out.b"), (-1,))

    def unroll(self, values: np.ndarray, mask: np.ndarray, delta: np.ndarray,
               merged: Tensor, uncertainty: Tensor) -> StepTrace:
        """Run all time steps from h0 = 0, collecting the trace.

        ``values``/``mask``/``delta`` are (N, T, D) data arrays; ``merged``
        and ``uncertainty`` are (N, T, D) graph tensors from the
        variational stage.
        """
        n, t_len, d = values.shape
        h = ad.constant(np.zeros((n, self.hidden_size)))
        trace = StepTrace()
        unc_decays = []
        temp_decays = []
        for t in range(t_len):
            merged_t = merged[:, t, :]
            unc_t = uncertainty[:, t, :]
            gate, x_gated = self.uncertainty_gated_estimate(merged_t, unc_t)
            decay, h_decayed = self.temporal_decayed_history(h, delta[:, t, :])
            _, x_feat = self.history_feature_estimate(h_decayed)
            combined, completed = self.combine_and_complete(
                x_gated, x_feat, values[:, t, :], mask[:, t, :])
            h = self.gated_cell_step(completed, mask[:, t, :], h_decayed)
            trace.combined.append(combined)
            trace.completed.append(completed)
            unc_decays.append(gate.data if gate is not None else np.ones((n, d)))
            temp_decays.append(decay.data)
        trace.logit = self.predict_outcome(h)
        trace.unc_decay = np.stack(unc_decays, axis=1)
        trace.temp_decay = np.stack(temp_decays, axis=1)
        trace.hidden = h.data
        return trace


def reverse_timestamps(timestamps: np.ndarray) -> np.ndarray:
    """Timestamps of the time-reversed sequence, increasing from 0."""
    return timestamps[:, -1:] - timestamps[:, ::-1]
