"""
GPT and contextual GPT

Position-free decoder over outfit items. Training sequences are shuffled
permutations of the outfit, so the model learns to predict any missing item
from any subset; with a user context the context vector takes the place of
the start token.
"""
from typing import List, Optional, Sequence, Tuple
import numpy as np

from ..catalog import UserContext
from ..nn import AttentionConfig, Tensor, concat, cross_entropy, log_softmax_array, no_grad
from .base import Example, OutfitModel, pad_tokens, targets_with_stop
from .config import Family
from .decoder import PrefixSetDecoder
from .encoders import ContextEncoder, ItemEncoder


class GPTModel(OutfitModel):
    cross_attention = False

    def _attention_config(self) -> AttentionConfig:
        c = self.config
        return AttentionConfig(model_dim=c.model_dim, num_heads=c.num_heads, num_layers=c.num_layers,
                               dropout_rate=c.dropout_rate, causal=True)

    def _build(self, rng: np.random.Generator) -> None:
        c = self.config
        self.context_scale = 1.0
        self.items = ItemEncoder(self.store, "items", self.catalog, self.vocab_rows, c.model_dim, rng,
                                 c.attribute_dims)
        self.context_encoder: Optional[ContextEncoder] = None
        if c.family == Family.CTX_GPT:
            self.context_encoder = ContextEncoder(self.store, "context", c.context_mode.value, self.items,
                                                  self.catalog, c.model_dim, c.field_dim,
                                                  c.num_style_archetypes, c.max_actions, rng)
        self.decoder = PrefixSetDecoder(self.store, "decoder", self._attention_config(), self.vocab_size, rng,
                                        self.dropout_control, cross_attention=self.cross_attention)

    def _leading_token(self, batch: int, contexts) -> Tensor:
        if self.context_encoder is not None:
            return self.context_encoder(contexts)
        return self.items.start(batch)

    def _cross_context(self, contexts) -> Tuple[Optional[Tensor], Optional[np.ndarray]]:
        return None, None

    def logits(self, sequences: Sequence[np.ndarray],
               contexts: Optional[Sequence[UserContext]] = None) -> Tuple[Tensor, np.ndarray]:
        """Next-item logits after every prefix: ([B, max_len + 1, V], lengths)"""
        contexts = self._require_contexts(contexts, len(sequences))
        tokens, lengths = pad_tokens(sequences)
        batch, dim = len(sequences), self.config.model_dim
        leading = self._leading_token(batch, contexts).reshape(batch, 1, dim)
        memory = concat([leading, self.items.tokens(tokens)], axis=1)
        cross, cross_mask = self._cross_context(contexts)
        self.forward_passes += 1
        return self.decoder(memory, lengths + 1, cross, cross_mask, self.context_scale), lengths

    def sequence_loss(self, sequences: Sequence[np.ndarray],
                      contexts: Optional[Sequence[UserContext]] = None) -> Tensor:
        """Mean NLL of [x1..xn, STOP] in the given order"""
        logits, _ = self.logits(sequences, contexts)
        batch, width, vocab = logits.shape
        targets = targets_with_stop(sequences, width)
        return cross_entropy(logits.reshape(batch * width, vocab), targets.reshape(-1))

    def loss(self, examples: Sequence[Example], rng: np.random.Generator) -> Tensor:
        sequences = [rng.permutation(e.tokens) for e in examples]
        return self.sequence_loss(sequences, [e.context for e in examples])

    def next_log_probs(self, prefixes: Sequence[np.ndarray],
                       contexts: Optional[Sequence[UserContext]] = None) -> np.ndarray:
        with no_grad():
            logits, lengths = self.logits(prefixes, contexts)
        return log_softmax_array(logits.data[np.arange(len(prefixes)), lengths], axis=-1)

    def item_log_likelihoods(self, sequences: Sequence[np.ndarray],
                             contexts: Optional[Sequence[UserContext]] = None) -> List[np.ndarray]:
        """log p(x_t | x_<t) for every item, all prefixes scored in one pass"""
        with no_grad():
            logits, lengths = self.logits(sequences, contexts)
        log_probs = log_softmax_array(logits.data, axis=-1)
        return [log_probs[b, np.arange(n), sequences[b]] for b, n in enumerate(lengths)]
