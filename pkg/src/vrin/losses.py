"""Loss terms for joint imputation-and-prediction training.

The variational term is a negative evidence lower bound summed over
samples and time steps plus an L1 sparsity penalty on the variational
network's parameters; the regression term scores combined estimates
against observed entries by masked mean absolute error; prediction is a
numerically stable binary cross-entropy on logits; bidirectional runs add
a mean absolute disagreement between the two directions' completions.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import autodiff as ad
from .autodiff import Tensor

LOG_TWO_PI = 1.8378770664093453


@dataclass
class LossBreakdown:
    """Scalar values of every loss term for one forward pass."""

    l_vae: float
    l_reg: float
    l_pred: float
    l_cons: float
    l_total: float
    l1_penalty: float
    no_observed_entries: bool = False

    def terms(self):
        return {"l_vae": self.l_vae, "l_reg": self.l_reg, "l_pred": self.l_pred,
                "l_cons": self.l_cons, "l_total": self.l_total,
                "l1_penalty": self.l1_penalty}


def kl_diag_gaussian(mu: Tensor, logvar: Tensor) -> Tensor:
    """KL(N(mu, diag(exp(logvar))) || N(0, I)), summed over all entries."""
    term = ad.exp(logvar) + ad.square(mu) - 1.0 - logvar
    return ad.sum_(term) * 0.5


def gaussian_log_likelihood(x: Tensor, mu: Tensor, logvar: Tensor, mask) -> Tensor:
    """Diagonal-Gaussian log density of x under (mu, logvar), observed entries only.

    Pass an all-ones mask to score every entry (the literal zero-filled
    variant).
    """
    mask = ad.as_tensor(mask)
    resid_sq = ad.square(x - mu)
    per_entry = (resid_sq * ad.exp(-logvar) + logvar + LOG_TWO_PI) * -0.5
    return ad.sum_(per_entry * mask)


def l1_penalty(tensors) -> Tensor:
    total = None
    for t in tensors:
        s = ad.sum_(ad.absolute(t))
        total = s if total is None else total + s
    if total is None:
        return ad.constant(0.0)
    return total


def masked_mae(x: Tensor, estimate: Tensor, mask) -> tuple[Tensor, int]:
    """Mean absolute error over observed entries; (0, 0) when none observed."""
    mask_t = ad.as_tensor(mask)
    count = int(round(float(mask_t.data.sum())))
    if count == 0:
        return ad.constant(0.0), 0
    total = ad.sum_(ad.absolute(x - estimate) * mask_t)
    return total * (1.0 / count), count


def mean_absolute_difference(a: Tensor, b: Tensor) -> Tensor:
    return ad.mean_(ad.absolute(a - b))


def bce_with_logits(logits: Tensor, targets) -> Tensor:
    """Binary cross-entropy from logits via the log-sum-exp identity, batch mean."""
    y = ad.as_tensor(targets)
    per_sample = ad.softplus(logits) - logits * y
    return ad.mean_(per_sample)


def combine_total(l_vae: Tensor, l_reg: Tensor, l_pred: Tensor,
                  alpha: float, beta: float,
                  l_cons: Tensor | None = None, xi: float = 0.0,
                  mode: str = "uni") -> Tensor:
    """alpha * l_vae + beta * l_reg + l_pred, plus xi * l_cons in 'bi' mode."""
    if mode not in ("uni", "bi"):
        raise ValueError(f"mode must be 'uni' or 'bi', got '{mode}'")
    total = l_vae * alpha + l_reg * beta + l_pred
    if mode == "bi":
        if l_cons is None:
            raise ValueError("bidirectional mode requires a consistency term")
        total = total + l_cons * xi
    return total
