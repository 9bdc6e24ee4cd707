"""
BERT and contextual BERT

Position-free bidirectional encoder trained to recover one masked item per
outfit. The user context, when present, is appended as an extra token that
is never masked.
"""
from typing import List, Optional, Sequence
import numpy as np

from ..catalog import MASK, UserContext
from ..errors import InputError, UsageError
from ..nn import AttentionConfig, AttentionStack, Dense, Tensor, concat, cross_entropy, log_softmax_array, no_grad
from .base import Example, OutfitModel, pad_tokens
from .config import Family
from .encoders import ContextEncoder, ItemEncoder


class BERTModel(OutfitModel):
    def _build(self, rng: np.random.Generator) -> None:
        c = self.config
        self.items = ItemEncoder(self.store, "items", self.catalog, self.vocab_rows, c.model_dim, rng,
                                 c.attribute_dims)
        self.context_encoder: Optional[ContextEncoder] = None
        if c.family == Family.CTX_BERT:
            self.context_encoder = ContextEncoder(self.store, "context", c.context_mode.value, self.items,
                                                  self.catalog, c.model_dim, c.field_dim,
                                                  c.num_style_archetypes, c.max_actions, rng)
        cfg = AttentionConfig(model_dim=c.model_dim, num_heads=c.num_heads, num_layers=c.num_layers,
                              dropout_rate=c.dropout_rate, causal=False)
        self.encoder = AttentionStack(self.store, "encoder", cfg, rng, self.dropout_control)
        self.head = Dense(self.store, "head", c.model_dim, self.vocab_size, rng, init_scale=0.1)

    def _masked_inputs(self, sequences: Sequence[np.ndarray], positions: Sequence[int]) -> List[np.ndarray]:
        if len(positions) != len(sequences):
            raise InputError(f"{len(positions)} mask positions for {len(sequences)} outfits")
        masked = []
        for sequence, position in zip(sequences, positions):
            sequence = np.array(sequence, dtype=np.int64)
            if position == len(sequence) and self.context_encoder is not None:
                raise UsageError("The context token cannot be masked")
            if not 0 <= position < len(sequence):
                raise InputError(f"Mask position {position} outside outfit of length {len(sequence)}")
            sequence[position] = MASK
            masked.append(sequence)
        return masked

    def masked_logits(self, sequences: Sequence[np.ndarray], positions: Sequence[int],
                      contexts: Optional[Sequence[UserContext]] = None) -> Tensor:
        """Logits [B, V] at the masked slot of each outfit"""
        contexts = self._require_contexts(contexts, len(sequences))
        tokens, lengths = pad_tokens(self._masked_inputs(sequences, positions))
        batch, width = tokens.shape
        x = self.items.tokens(tokens)
        valid = np.arange(width)[None, :] < lengths[:, None]
        if self.context_encoder is not None:
            context = self.context_encoder(contexts).reshape(batch, 1, self.config.model_dim)
            x = concat([x, context], axis=1)
            valid = np.concatenate([valid, np.ones((batch, 1), dtype=bool)], axis=1)
        hidden = self.encoder(x, valid[:, None, None, :])
        self.forward_passes += 1
        return self.head(hidden[np.arange(batch), np.asarray(positions, dtype=np.int64)])

    def masked_loss(self, sequences: Sequence[np.ndarray], positions: Sequence[int],
                    contexts: Optional[Sequence[UserContext]] = None) -> Tensor:
        targets = [sequence[position] for sequence, position in zip(sequences, positions)]
        return cross_entropy(self.masked_logits(sequences, positions, contexts), targets)

    def loss(self, examples: Sequence[Example], rng: np.random.Generator) -> Tensor:
        positions = [int(rng.integers(len(e.tokens))) for e in examples]
        return self.masked_loss([e.tokens for e in examples], positions, [e.context for e in examples])

    def masked_log_probs(self, outfits: Sequence[np.ndarray], mask_positions: Sequence[int],
                         contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray:
        with no_grad():
            logits = self.masked_logits(outfits, mask_positions, contexts)
        return log_softmax_array(logits.data, axis=-1)

    def item_log_likelihoods(self, sequences: Sequence[np.ndarray],
                             contexts: Optional[Sequence[UserContext]] = None) -> List[np.ndarray]:
        """Left-to-right scoring: item t is masked and everything to its right is removed"""
        inputs, positions, owners = [], [], []
        for b, sequence in enumerate(sequences):
            for t in range(len(sequence)):
                inputs.append(np.asarray(sequence[:t + 1]))
                positions.append(t)
                owners.append(b)
        owner_contexts = [contexts[b] for b in owners] if contexts is not None else None
        log_probs = self.masked_log_probs(inputs, positions, owner_contexts)
        targets = np.concatenate([np.asarray(s, dtype=np.int64) for s in sequences])
        picked = log_probs[np.arange(len(targets)), targets]
        bounds = np.cumsum([len(s) for s in sequences])[:-1]
        return list(np.split(picked, bounds))
