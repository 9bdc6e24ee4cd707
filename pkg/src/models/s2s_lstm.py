"""
Sequence-to-sequence LSTM

An encoder LSTM reads the user's action sequence; its final state seeds both
decoder directions of the outfit LSTM.
"""
from typing import Tuple
import numpy as np

from ..nn import LSTMCell, Tensor, stack
from .encoders import ActionEncoder
from .lstm import LSTMModel


class Seq2SeqLSTMModel(LSTMModel):
    def _build_encoder(self, rng: np.random.Generator) -> None:
        size = self.config.hidden_size
        self.use_encoder = True
        self.actions = ActionEncoder(self.store, "actions", self.items, size, rng, self.config.max_actions)
        self.encoder_cell = LSTMCell(self.store, "encoder.cell", size, size, rng)

    def encode(self, contexts) -> Tuple[Tensor, Tensor]:
        """Final encoder (h, c) of every action sequence"""
        encoded, lengths = self.actions(contexts)
        batch = len(contexts)
        state = self.encoder_cell.zero_state(batch, self.store.dtype)
        hs, cs = [], []
        for t in range(encoded.shape[1]):
            h, c, _ = self.encoder_cell(state, self.dropout(encoded[:, t, :]))
            state = (h, c)
            hs.append(h)
            cs.append(c)
        last = (np.arange(batch), lengths - 1)
        return stack(hs, axis=1)[last], stack(cs, axis=1)[last]

    def _initial_state(self, contexts, batch: int) -> Tuple[Tensor, Tensor]:
        if not self.use_encoder:
            return super()._initial_state(contexts, batch)
        return self.encode(contexts)
