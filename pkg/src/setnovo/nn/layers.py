"""Parameterised layers built on the autograd tensors."""

from __future__ import annotations

from collections import OrderedDict
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from . import autograd as ag
from .autograd import Tensor


class Module:
    """Holds parameters and submodules as attributes, in assignment order."""

    def __init__(self):
        object.__setattr__(self, "_params", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())

    def __setattr__(self, name, value):
        if isinstance(value, Tensor):
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, p in self._params.items():
            yield prefix + name, p
        for name, m in self._modules.items():
            yield from m.named_parameters(prefix + name + ".")

    def parameters(self) -> Dict[str, Tensor]:
        return OrderedDict(self.named_parameters())

    def zero_grad(self):
        for p in self.parameters().values():
            p.grad = None

    def astype(self, dtype):
        for p in self.parameters().values():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Linear(Module):
    """Affine map over the last axis, weight stored as (in, out)."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        super().__init__()
        self.d_in, self.d_out = d_in, d_out
        self.weight = Tensor(_glorot(rng, d_in, d_out, (d_in, d_out)), requires_grad=True)
        self.bias = Tensor(np.zeros(d_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return ag.matmul(x, self.weight) + self.bias


class PointwiseConv1d(Module):
    """1-d convolution with kernel size one over a ``(..., n, channels)`` input.

    The weight keeps the usual convolution layout ``(out, in, kernel=1)``.
    """

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator):
        super().__init__()
        self.c_in, self.c_out = c_in, c_out
        self.weight = Tensor(_glorot(rng, c_in, c_out, (c_out, c_in, 1)), requires_grad=True)
        self.bias = Tensor(np.zeros(c_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        kernel = ag.reshape(self.weight, (self.c_out, self.c_in))
        return ag.matmul(x, _transpose(kernel)) + self.bias


def _transpose(x: Tensor) -> Tensor:
    def backward(g):
        x._accumulate(g.T)
    return ag._make(x.data.T, (x,), backward)


class TNet(Module):
    """Order-invariant encoder of a peak feature set.

    Three pointwise convolutions, a max over the peak axis, then three fully
    connected layers, each followed by ReLU.
    """

    def __init__(self, d_in: int, conv: Sequence[int], fc: Sequence[int], rng: np.random.Generator):
        super().__init__()
        if len(conv) != 3 or len(fc) != 3:
            raise ValueError("T-Net needs three conv widths and three fc widths")
        widths = [d_in, *conv]
        self.conv1 = PointwiseConv1d(widths[0], widths[1], rng)
        self.conv2 = PointwiseConv1d(widths[1], widths[2], rng)
        self.conv3 = PointwiseConv1d(widths[2], widths[3], rng)
        widths = [conv[-1], *fc]
        self.fc1 = Linear(widths[0], widths[1], rng)
        self.fc2 = Linear(widths[1], widths[2], rng)
        self.fc3 = Linear(widths[2], widths[3], rng)
        self.d_out = fc[-1]

    def __call__(self, x: Tensor) -> Tensor:
        """``x`` has shape ``(..., n_peaks, d_in)``; returns ``(..., d_out)``."""
        if not np.all(np.isfinite(x.data)):
            raise ValueError("non-finite values in T-Net input")
        h = ag.relu(self.conv1(x))
        h = ag.relu(self.conv2(h))
        h = ag.relu(self.conv3(h))
        h = ag.max_reduce(h, axis=-2)
        h = ag.relu(self.fc1(h))
        h = ag.relu(self.fc2(h))
        return ag.relu(self.fc3(h))


class LSTMCell(Module):
    """Standard LSTM cell; gate order in the fused weights is i, f, g, o."""

    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator):
        super().__init__()
        self.d_in, self.d_hidden = d_in, d_hidden
        self.w_input = Tensor(_glorot(rng, d_in, 4 * d_hidden, (d_in, 4 * d_hidden)), requires_grad=True)
        self.w_hidden = Tensor(_glorot(rng, d_hidden, 4 * d_hidden, (d_hidden, 4 * d_hidden)),
                               requires_grad=True)
        bias = np.zeros(4 * d_hidden)
        bias[d_hidden:2 * d_hidden] = 1.0
        self.bias = Tensor(bias, requires_grad=True)

    def __call__(self, x: Tensor, state: Tuple[Tensor, Tensor]) -> Tuple[Tensor, Tensor]:
        h, c = state
        if x.shape[-1] != self.d_in or h.shape[-1] != self.d_hidden or c.shape[-1] != self.d_hidden:
            raise ValueError("LSTM input or state has the wrong width")
        d = self.d_hidden
        z = ag.matmul(x, self.w_input) + ag.matmul(h, self.w_hidden) + self.bias
        i = ag.sigmoid(z[..., :d])
        f = ag.sigmoid(z[..., d:2 * d])
        g = ag.tanh(z[..., 2 * d:3 * d])
        o = ag.sigmoid(z[..., 3 * d:])
        c_new = f * c + i * g
        h_new = o * ag.tanh(c_new)
        return h_new, c_new


class Embedding(Module):
    def __init__(self, n: int, d: int, rng: np.random.Generator):
        super().__init__()
        self.table = Tensor(rng.normal(0.0, 1.0 / np.sqrt(d), size=(n, d)), requires_grad=True)

    def __call__(self, ids) -> Tensor:
        return ag.embedding(self.table, ids)
