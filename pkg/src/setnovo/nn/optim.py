"""Adam and the plateau learning-rate halving schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence

import numpy as np

from .autograd import Tensor


@dataclass
class AdamState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {name} {p.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


class Adam:
    def __init__(self, params: Mapping[str, Tensor], lr: float = 1e-3):
        self.params = params
        self.lr = lr
        self.state = AdamState()

    def step(self):
        adam_step({k: p.data for k, p in self.params.items()},
                  {k: p.grad for k, p in self.params.items() if p.grad is not None},
                  self.state, self.lr)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None


class PlateauHalving:
    """Halve the learning rate after ``patience`` evaluations without a new low.

    The counter restarts after each halving, so a long plateau halves once
    every ``patience`` evaluations.
    """

    def __init__(self, patience: int = 10, factor: float = 0.5):
        self.patience = patience
        self.factor = factor
        self.best = np.inf
        self.since_best = 0
        self.history: List[float] = []

    def update(self, loss: float) -> float:
        """Record one validation loss; returns the lr multiplier to apply now."""
        self.history.append(float(loss))
        if loss < self.best:
            self.best = float(loss)
            self.since_best = 0
            return 1.0
        self.since_best += 1
        if self.since_best >= self.patience:
            self.since_best = 0
            return self.factor
        return 1.0


def halving_points(history: Sequence[float], patience: int = 10) -> List[int]:
    """Indices of the evaluations at which the lr gets halved."""
    sched = PlateauHalving(patience)
    return [i for i, loss in enumerate(history) if sched.update(loss) != 1.0]


def lr_schedule(history: Sequence[float], patience: int = 10, factor: float = 0.5) -> float:
    """Cumulative lr multiplier after the given validation-loss history."""
    return factor ** len(halving_points(history, patience))
