from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import Tensor


def focal_loss(logits: Tensor, targets, gamma: float = 2.0, mask=None) -> Tensor:
    """Mean focal loss ``-(1 - p_t)**gamma * log(p_t)`` over unmasked rows.

    ``logits`` is ``(..., n_classes)``; ``targets`` holds integer class ids
    with the leading shape of ``logits``. ``mask`` (bool, same shape as
    ``targets``) selects the positions that count; by default all do.
    ``p_t`` is taken through a log-sum-exp so it never underflows to log(0).
    """
    z = logits.data
    n_classes = z.shape[-1]
    z2 = z.reshape(-1, n_classes)
    t = np.asarray(targets, dtype=np.int64).reshape(-1)
    m = np.ones(t.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(-1)
    if t.shape[0] != z2.shape[0]:
        raise ValueError("targets do not match logits")
    count = int(m.sum())
    if count == 0:
        raise ValueError("no unmasked positions")

    logp = ag.numpy_log_softmax(z2)
    rows = np.arange(len(t))
    logp_t = logp[rows, t]
    p_t = np.exp(logp_t)
    one_minus = -np.expm1(logp_t)
    weight = one_minus ** gamma
    per = -weight * logp_t
    loss = np.sum(per * m) / count

    def backward(g):
        # d(per)/d(logp_t), then chain through log-softmax
        if gamma == 0:
            dl = -np.ones_like(logp_t)
        else:
            dl = gamma * one_minus ** (gamma - 1) * p_t * logp_t - weight
        dl = dl * m * (g / count)
        onehot = np.zeros_like(z2)
        onehot[rows, t] = 1.0
        dz = dl[:, None] * (onehot - np.exp(logp))
        logits._accumulate(dz.reshape(z.shape))

    return ag._make(np.asarray(loss, dtype=z.dtype), (logits,), backward)


def cross_entropy(logits: Tensor, targets, mask=None) -> Tensor:
    return focal_loss(logits, targets, gamma=0.0, mask=mask)
