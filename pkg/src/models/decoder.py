"""
Prefix-set causal decoder

A learned query vector is broadcast to every position and attends causally
over the memory [start-or-context, x1, ..., xn]. Position t therefore sees
the first t items as a set, so its next-item distribution does not depend
on the order of the prefix. One pass yields the predictions for every
prefix length at once.
"""
from typing import Optional
import numpy as np

from ..nn import AttentionConfig, AttentionStack, Dense, DropoutControl, ParamStore, Tensor, padding_mask


class PrefixSetDecoder:
    def __init__(self, store: ParamStore, name: str, cfg: AttentionConfig, vocab_size: int,
                 rng: np.random.Generator, control: DropoutControl, cross_attention: bool = False):
        if not cfg.causal:
            cfg = AttentionConfig(cfg.model_dim, cfg.num_heads, cfg.num_layers, cfg.dropout_rate, causal=True,
                                  ff_multiplier=cfg.ff_multiplier)
        self.cfg = cfg
        self.query = store.add(f"{name}.query", rng.uniform(-0.1, 0.1, size=cfg.model_dim))
        self.stack = AttentionStack(store, f"{name}.stack", cfg, rng, control, cross_attention)
        # small output weights keep the initial next-item distribution close to uniform
        self.head = Dense(store, f"{name}.head", cfg.model_dim, vocab_size, rng, init_scale=0.1)

    def __call__(self, memory: Tensor, lengths: np.ndarray, context: Optional[Tensor] = None,
                 context_mask: Optional[np.ndarray] = None, context_scale: float = 1.0) -> Tensor:
        """memory [B, S, d] with lengths counting the leading token -> logits [B, S, V]"""
        batch, width, dim = memory.shape
        queries = self.query + np.zeros((batch, width, dim), dtype=memory.dtype)
        hidden = self.stack(queries, padding_mask(lengths, width), memory, context, context_mask, context_scale)
        return self.head(hidden)
