"""
Autoregressive outfit generation

Works with any model exposing next-token log-probabilities (GPT, contextual
GPT, Transformer, the LSTMs). Items already in the outfit are suppressed,
the mask token is never produced and the stop token ends the outfit.
"""
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence
import logging
import numpy as np

from ..catalog import ACCESSORY, MASK, NUM_SPECIAL, STOP, UNK, Outfit, OutfitSource, UserContext
from ..errors import GenerationError, InputError
from ..nn import rng_stream, softmax_array

logger = logging.getLogger(__name__)

ScoreFn = Callable[[List[np.ndarray]], np.ndarray]


@dataclass
class SamplingOptions:
    max_len: int = 7
    min_len: int = 2
    temperature: float = 1.0
    suppress_duplicates: bool = True
    fixed_length: Optional[int] = None
    category_cap: bool = False

    def __post_init__(self):
        if self.temperature < 0:
            raise InputError(f"temperature must be non-negative, got {self.temperature}")
        if self.fixed_length is not None:
            self.max_len = self.min_len = self.fixed_length


def encode_seed(model, seed_items: Sequence[str]) -> np.ndarray:
    tokens = model.vocab.encode(seed_items)
    if np.any(tokens == UNK):
        unknown = [item for item, token in zip(seed_items, tokens) if token == UNK]
        raise InputError(f"Seed items not in the vocabulary: {unknown}")
    return tokens


def allowed_tokens(model, tokens: Sequence[int], options: SamplingOptions) -> np.ndarray:
    """Boolean mask over the vocabulary of tokens that may come next"""
    allowed = np.ones(model.vocab_size, dtype=bool)
    allowed[MASK] = False
    if len(tokens) < options.min_len:
        allowed[STOP] = False
    if options.fixed_length is not None and len(tokens) >= options.fixed_length:
        allowed[NUM_SPECIAL:] = False
    if options.suppress_duplicates and len(tokens):
        allowed[np.asarray(tokens, dtype=np.int64)] = False
    if options.category_cap and len(tokens):
        codes = model.catalog.attribute_codes[:, 0]
        item_categories = codes[model.vocab_rows[NUM_SPECIAL:]]
        taken = {int(c) for c in item_categories[np.asarray(tokens, dtype=np.int64) - NUM_SPECIAL]} - {ACCESSORY}
        if taken:
            allowed[NUM_SPECIAL:] &= ~np.isin(item_categories, list(taken))
    return allowed


def choose_token(log_probs: np.ndarray, allowed: np.ndarray, temperature: float,
                 rng: np.random.Generator) -> int:
    if not allowed.any():
        raise GenerationError("No candidate token left to generate")
    scores = np.where(allowed, log_probs, -np.inf)
    if temperature == 0.0:
        return int(np.argmax(scores))
    probs = softmax_array(np.where(allowed, log_probs / temperature, -np.inf))
    return int(rng.choice(len(probs), p=probs))


def extend(score: ScoreFn, model, tokens: np.ndarray, options: SamplingOptions,
           rng: np.random.Generator) -> np.ndarray:
    """Append tokens until stop or options.max_len"""
    tokens = [int(t) for t in tokens]
    while len(tokens) < options.max_len:
        log_probs = score([np.array(tokens, dtype=np.int64)])[0]
        allowed = allowed_tokens(model, tokens, options)
        token = choose_token(log_probs, allowed, options.temperature, rng)
        if token == STOP:
            break
        tokens.append(token)
    return np.array(tokens, dtype=np.int64)


def _contexts(context: Optional[UserContext]):
    return None if context is None else [context]


def to_outfit(model, tokens: Sequence[int]) -> Outfit:
    return Outfit(tuple(model.vocab.decode(tokens)), source=OutfitSource.GENERATED)


def autoregressive_generate(model, seed_items: Sequence[str] = (), context: Optional[UserContext] = None,
                            max_len: int = 7, temperature: float = 1.0, rng_seed: int = 0,
                            options: Optional[SamplingOptions] = None) -> Outfit:
    """Sample an outfit item by item, starting from seed_items

    temperature 0 gives the deterministic argmax continuation. With
    options.fixed_length the stop token is suppressed until that length is
    reached and the outfit ends there.
    """
    options = options or SamplingOptions(max_len=max_len, temperature=temperature)
    tokens = encode_seed(model, seed_items)
    rng = rng_stream(rng_seed, "generate")
    contexts = _contexts(context)
    model.eval_mode()
    tokens = extend(lambda prefixes: model.next_log_probs(prefixes, contexts), model, tokens, options, rng)
    logger.debug(f"Generated {len(tokens)} items from {len(seed_items)} seed items")
    return to_outfit(model, tokens)


def bidirectional_generate(model, anchor_items: Sequence[str], context: Optional[UserContext] = None,
                           max_len: int = 7, temperature: float = 1.0, rng_seed: int = 0,
                           options: Optional[SamplingOptions] = None) -> Outfit:
    """Complete around anchor items: the backward model extends toward the head, then the forward model toward the toe"""
    options = options or SamplingOptions(max_len=max_len, temperature=temperature)
    anchor = encode_seed(model, anchor_items)
    rng = rng_stream(rng_seed, "generate", "bidirectional")
    contexts = _contexts(context)
    model.eval_mode()
    # the head side may stay empty and must leave room for at least one item toward the toe
    toward_head = replace(options, min_len=0, max_len=max(options.max_len - 1, len(anchor)), fixed_length=None)
    backward = extend(lambda p: model.direction_log_probs(p, "backward", contexts), model, anchor[::-1],
                      toward_head, rng)
    head_first = backward[::-1]
    tokens = extend(lambda p: model.direction_log_probs(p, "forward", contexts), model, head_first, options, rng)
    return to_outfit(model, tokens)
