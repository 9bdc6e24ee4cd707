"""
Encoder-decoder Transformer for personalized outfits

The encoder reads the user's action sequence (item features, event type,
action age) without positional encoding; the prefix-set decoder generates the
outfit and cross-attends to the encoded actions. Encoder and decoder share
the item attribute embeddings.
"""
from typing import Optional, Tuple
import numpy as np

from ..nn import AttentionConfig, AttentionStack, Dense, Tensor, concat, padding_mask
from .encoders import ActionEncoder
from .gpt import GPTModel


class TransformerModel(GPTModel):
    cross_attention = True

    def _build(self, rng: np.random.Generator) -> None:
        super()._build(rng)
        c = self.config
        self.use_context = True
        self.actions = ActionEncoder(self.store, "actions", self.items, c.model_dim, rng, c.max_actions)
        cfg = AttentionConfig(model_dim=c.model_dim, num_heads=c.num_heads, num_layers=c.num_layers,
                              dropout_rate=c.dropout_rate, causal=False)
        self.encoder = AttentionStack(self.store, "encoder", cfg, rng, self.dropout_control)
        self.slots: Optional[Tensor] = None
        if c.context_slots:
            # reserved encoder positions carrying a summary of the whole history
            self.slots = self.store.add("encoder.slots", rng.uniform(-0.1, 0.1, size=(c.context_slots, c.model_dim)))
            self.slot_summary = Dense(self.store, "encoder.slot_summary", c.model_dim, c.model_dim, rng)

    def encode(self, contexts) -> Tuple[Tensor, np.ndarray]:
        """Encoded actions [B, S, d] and the padding mask over them"""
        encoded, lengths = self.actions(contexts)
        batch, width, dim = encoded.shape
        if self.slots is not None:
            valid = (np.arange(width)[None, :] < lengths[:, None]).astype(encoded.dtype)
            summary = self.slot_summary((encoded * (valid / lengths[:, None])[..., None]).sum(axis=1))
            reserved = self.slots + summary.reshape(batch, 1, dim)
            encoded = concat([reserved, encoded], axis=1)
            lengths = lengths + self.slots.shape[0]
            # reserved positions come first, so valid actions stay contiguous
            width = encoded.shape[1]
        mask = padding_mask(lengths, width)
        return self.encoder(encoded, mask), mask

    def _cross_context(self, contexts):
        if not self.use_context:
            return None, None
        return self.encode(contexts)
