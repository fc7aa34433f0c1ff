"""Composite branch losses.

Each branch is trained on two signals: a fused loss on the attention block's
single fused score and a patch loss averaged over every per-token score
source (attention token heads, plus the backbone's per-patch head for conv
branches).  The branch objective is the convex blend

    total = alpha * patch + (1 - alpha) * fused

with alpha defaulting to 0.6.  Cross-entropy terms are minimized directly
(the printed "score" convention elsewhere is the negated value).
"""

from dataclasses import dataclass

import numpy as np

from . import engine as E

DEFAULT_ALPHA = 0.6
DEFAULT_CLAMP = 1e-7


@dataclass
class LossReport:
    total: float
    patch: float
    fused: float
    alpha: float

    def identity_gap(self):
        """|total - (alpha*patch + (1-alpha)*fused)|, zero up to roundoff."""
        return abs(self.total - (self.alpha * self.patch + (1.0 - self.alpha) * self.fused))


def _mean_terms(terms):
    acc = terms[0]
    for t in terms[1:]:
        acc = E.add(acc, t)
    return E.scale(acc, 1.0 / len(terms))


def binary_losses(fused, labels, patch_terms, clamp=DEFAULT_CLAMP):
    """(fused loss, patch loss) Tensors for a binary branch.

    ``fused``: (B,1) probabilities; ``labels``: (B,) 0/1 ints.
    ``patch_terms``: list of (probs (K,1), labels (K,)) per-token score sources.
    """
    labels = np.asarray(labels, dtype=np.float64)
    l_fus = E.bce(fused, labels.reshape(-1, 1), clamp)
    l_pat = _mean_terms(
        [E.bce(p, np.asarray(y, dtype=np.float64).reshape(-1, 1), clamp) for p, y in patch_terms]
    )
    return l_fus, l_pat


def multiclass_losses(fused, labels, patch_terms, clamp=DEFAULT_CLAMP):
    """(fused loss, patch loss) Tensors for a type branch.

    ``fused``: (B,M) probability rows; ``labels``: (B,) class indices.
    ``patch_terms``: list of (probs (K,M), labels (K,)) pairs.
    """
    l_fus = E.cross_entropy(fused, labels, clamp)
    l_pat = _mean_terms([E.cross_entropy(p, y, clamp) for p, y in patch_terms])
    return l_fus, l_pat


def total_loss(l_pat, l_fus, alpha=DEFAULT_ALPHA):
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0,1]")
    return E.add(E.scale(l_pat, alpha), E.scale(l_fus, 1.0 - alpha))


def loss_report(l_pat, l_fus, total, alpha):
    return LossReport(total=total.item(), patch=l_pat.item(), fused=l_fus.item(), alpha=alpha)
