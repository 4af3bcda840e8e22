"""The sequencing network: T-Net over peak features, LSTM over the prefix."""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from ..chem import N_VOCAB
from ..features import N_FEATURES
from . import autograd as ag
from .autograd import Tensor
from .layers import Embedding, Linear, LSTMCell, Module, TNet

State = Tuple[Tensor, Tensor]


class SequencingModel(Module):
    """Scores the next token given the step's peak features and the prefix.

    With ``use_lstm`` the T-Net output is concatenated with the LSTM hidden
    state before the final linear layer; without it the logits depend on the
    T-Net alone.
    """

    def __init__(self, conv: Sequence[int] = (64, 128, 256), fc: Sequence[int] = (256, 128, 128),
                 d_lstm: int = 512, use_lstm: bool = True, seed: int = 0,
                 n_features: int = N_FEATURES):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.use_lstm = use_lstm
        self.d_lstm = d_lstm
        self.tnet = TNet(n_features, conv, fc, rng)
        if use_lstm:
            self.embedding = Embedding(N_VOCAB, d_lstm, rng)
            self.lstm = LSTMCell(d_lstm, d_lstm, rng)
            self.out = Linear(self.tnet.d_out + d_lstm, N_VOCAB, rng)
        else:
            self.out = Linear(self.tnet.d_out, N_VOCAB, rng)

    @property
    def dtype(self):
        return self.out.weight.data.dtype

    def initial_state(self, summary) -> Optional[State]:
        """LSTM state with both h0 and c0 set to the spectrum summary vector."""
        if not self.use_lstm:
            return None
        s = np.asarray(summary, dtype=self.dtype)
        if s.shape[-1] != self.d_lstm:
            raise ValueError(f"summary has width {s.shape[-1]}, expected {self.d_lstm}")
        return Tensor(s), Tensor(s.copy())

    def lstm_step(self, prev_tokens, state: State) -> Tuple[Tensor, State]:
        x = self.embedding(prev_tokens)
        h, c = self.lstm(x, state)
        return h, (h, c)

    def combine_and_score(self, tnet_out: Tensor, lstm_hidden: Optional[Tensor] = None) -> Tensor:
        if self.use_lstm:
            if lstm_hidden is None:
                raise ValueError("model uses the LSTM branch; hidden state required")
            return self.out(ag.concat([tnet_out, lstm_hidden], axis=-1))
        return self.out(tnet_out)

    def forward(self, features, prev_tokens, summary=None) -> Tensor:
        """Teacher-forced logits for a batch.

        features : (B, T, P, F) array
        prev_tokens : (B, T) int array; token fed to the LSTM at each step
        summary : (B, d_lstm) spectrum summary, required with the LSTM
        Returns a (B, T, N_VOCAB) tensor.
        """
        enc = self.tnet(Tensor(np.asarray(features, dtype=self.dtype)))
        if not self.use_lstm:
            return self.combine_and_score(enc)
        prev_tokens = np.asarray(prev_tokens)
        state = self.initial_state(summary)
        hidden = []
        for t in range(prev_tokens.shape[1]):
            h, state = self.lstm_step(prev_tokens[:, t], state)
            hidden.append(h)
        return self.combine_and_score(enc, ag.stack(hidden, axis=1))

    def step(self, features, prev_tokens, state: Optional[State]) -> Tuple[Tensor, Optional[State]]:
        """One decoding step for K partial peptides.

        features : (K, P, F); prev_tokens : (K,); state : ((K, d), (K, d)) or None.
        """
        enc = self.tnet(Tensor(np.asarray(features, dtype=self.dtype)))
        if not self.use_lstm:
            return self.combine_and_score(enc), None
        h, state = self.lstm_step(np.asarray(prev_tokens), state)
        return self.combine_and_score(enc, h), state

    def architecture(self) -> dict:
        return {
            "conv": [self.tnet.conv1.c_out, self.tnet.conv2.c_out, self.tnet.conv3.c_out],
            "fc": [self.tnet.fc1.d_out, self.tnet.fc2.d_out, self.tnet.fc3.d_out],
            "d_lstm": self.d_lstm,
            "use_lstm": self.use_lstm,
        }
