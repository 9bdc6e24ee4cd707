"""
Bidirectional outfit LSTM

Two independent LSTMs read the canonically ordered outfit, one head to toe
and one toe to head. Each direction starts from the start token and predicts
the next item, ending with the stop token.
"""
from typing import List, Optional, Sequence, Tuple
import numpy as np

from ..catalog import UserContext
from ..errors import InputError
from ..nn import Dense, Dropout, LSTMCell, Tensor, cross_entropy, log_softmax_array, no_grad, stack
from .base import Example, OutfitModel, pad_tokens, targets_with_stop
from .encoders import ItemEncoder

DIRECTIONS = ("forward", "backward")


def oriented(sequence: np.ndarray, direction: str) -> np.ndarray:
    if direction not in DIRECTIONS:
        raise InputError(f"Unknown direction '{direction}'")
    sequence = np.asarray(sequence, dtype=np.int64)
    return sequence if direction == "forward" else sequence[::-1]


class LSTMModel(OutfitModel):
    def _build(self, rng: np.random.Generator) -> None:
        c = self.config
        size = c.hidden_size
        self.items = ItemEncoder(self.store, "items", self.catalog, self.vocab_rows, size, rng, c.attribute_dims)
        self.cells = {d: LSTMCell(self.store, f"{d}.cell", size, size, rng) for d in DIRECTIONS}
        self.heads = {d: Dense(self.store, f"{d}.head", size, self.vocab_size, rng, init_scale=0.1)
                      for d in DIRECTIONS}
        self.dropout = Dropout(c.dropout_rate, self.dropout_control)
        self._build_encoder(rng)

    def _build_encoder(self, rng: np.random.Generator) -> None:
        """Hook for the sequence-to-sequence variant"""

    def _initial_state(self, contexts, batch: int) -> Tuple[Tensor, Tensor]:
        return self.cells["forward"].zero_state(batch, self.store.dtype)

    def direction_logits(self, sequences: Sequence[np.ndarray], direction: str,
                         contexts: Optional[Sequence[UserContext]] = None) -> Tuple[Tensor, np.ndarray]:
        """Logits [B, max_len + 1, V] for sequences already in reading order"""
        contexts = self._require_contexts(contexts, len(sequences))
        cell, head = self.cells[direction], self.heads[direction]
        tokens, lengths = pad_tokens(sequences)
        batch = len(sequences)
        state = self._initial_state(contexts, batch)
        outputs = []
        step_input = self.items.start(batch)
        for t in range(tokens.shape[1] + 1):
            h, c, out = cell(state, self.dropout(step_input))
            state = (h, c)
            outputs.append(self.dropout(out))
            if t < tokens.shape[1]:
                step_input = self.items.tokens(tokens[:, t])
        self.forward_passes += 1
        return head(stack(outputs, axis=1)), lengths

    def direction_loss(self, sequences: Sequence[np.ndarray], direction: str,
                       contexts: Optional[Sequence[UserContext]] = None) -> Tensor:
        readings = [oriented(s, direction) for s in sequences]
        logits, _ = self.direction_logits(readings, direction, contexts)
        batch, width, vocab = logits.shape
        targets = targets_with_stop(readings, width)
        return cross_entropy(logits.reshape(batch * width, vocab), targets.reshape(-1))

    def sequence_loss(self, sequences: Sequence[np.ndarray],
                      contexts: Optional[Sequence[UserContext]] = None) -> Tensor:
        """Mean forward NLL plus mean backward NLL"""
        if any(len(s) < 2 for s in sequences):
            raise InputError("LSTM sequences need at least two items")
        return (self.direction_loss(sequences, "forward", contexts)
                + self.direction_loss(sequences, "backward", contexts))

    def loss(self, examples: Sequence[Example], rng: np.random.Generator) -> Tensor:
        return self.sequence_loss([e.tokens for e in examples], [e.context for e in examples])

    def direction_log_probs(self, prefixes: Sequence[np.ndarray], direction: str,
                            contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray:
        """Next-token log-probs after prefixes given in reading order"""
        with no_grad():
            logits, lengths = self.direction_logits(
                [np.asarray(p, dtype=np.int64) for p in prefixes], direction, contexts)
        return log_softmax_array(logits.data[np.arange(len(prefixes)), lengths], axis=-1)

    def next_log_probs(self, prefixes: Sequence[np.ndarray],
                       contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray:
        return self.direction_log_probs(prefixes, "forward", contexts)

    def blank_log_probs(self, prefixes: Sequence[np.ndarray], suffixes: Sequence[np.ndarray],
                        contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray:
        """Joint score of a blank between prefix and suffix: forward(prefix) + backward(suffix)"""
        backward_prefixes = [oriented(s, "backward") for s in suffixes]
        return (self.direction_log_probs(prefixes, "forward", contexts)
                + self.direction_log_probs(backward_prefixes, "backward", contexts))

    def item_log_likelihoods(self, sequences: Sequence[np.ndarray],
                             contexts: Optional[Sequence[UserContext]] = None) -> List[np.ndarray]:
        """Per item, the mean of the forward and backward log-probabilities"""
        sequences = [np.asarray(s, dtype=np.int64) for s in sequences]
        with no_grad():
            forward, _ = self.direction_logits(sequences, "forward", contexts)
            backward, _ = self.direction_logits([s[::-1] for s in sequences], "backward", contexts)
        forward = log_softmax_array(forward.data, axis=-1)
        backward = log_softmax_array(backward.data, axis=-1)
        scores = []
        for b, sequence in enumerate(sequences):
            n = len(sequence)
            ahead = forward[b, np.arange(n), sequence]
            behind = backward[b, np.arange(n), sequence[::-1]][::-1]
            scores.append(0.5 * (ahead + behind))
        return scores
