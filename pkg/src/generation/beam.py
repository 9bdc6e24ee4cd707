"""
Beam search over outfit perplexity

Hypotheses are ranked by exp(mean NLL) of the tokens predicted so far,
including the stop token when a hypothesis ends on it. Finished hypotheses
leave the beam; the result lists them by ascending perplexity.
"""
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple
import math
import numpy as np

from ..catalog import STOP, Outfit, UserContext
from ..errors import InputError
from .sampling import SamplingOptions, allowed_tokens, encode_seed, to_outfit


@dataclass(frozen=True)
class Hypothesis:
    tokens: Tuple[int, ...]
    total_nll: float = 0.0
    steps: int = 0
    finished: bool = False

    @property
    def perplexity(self) -> float:
        return math.exp(self.total_nll / self.steps) if self.steps else 1.0

    def sort_key(self):
        return (self.perplexity, self.tokens)


@dataclass
class Beam:
    width: int
    hypotheses: List[Hypothesis] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 1:
            raise InputError(f"Beam width must be at least 1, got {self.width}")

    def prune(self, candidates: Sequence[Hypothesis]) -> None:
        self.hypotheses = sorted(candidates, key=Hypothesis.sort_key)[:self.width]


def _score_fn(model, direction: str, context: Optional[UserContext]):
    contexts = None if context is None else [context]
    if direction == "forward" and not hasattr(model, "direction_log_probs"):
        return lambda prefixes: model.next_log_probs(prefixes, contexts)
    return lambda prefixes: model.direction_log_probs(prefixes, direction, contexts)


def beam_search_tokens(model, seed: Sequence[int], width: int, max_len: int = 7, direction: str = "forward",
                       context: Optional[UserContext] = None,
                       options: Optional[SamplingOptions] = None) -> List[Hypothesis]:
    """Ranked hypotheses (token level); at most width of them"""
    options = options or SamplingOptions(max_len=max_len)
    score = _score_fn(model, direction, context)
    beam = Beam(width, [Hypothesis(tuple(int(t) for t in seed))])
    finished: List[Hypothesis] = []
    model.eval_mode()
    while beam.hypotheses:
        growing = [h for h in beam.hypotheses if len(h.tokens) < options.max_len]
        finished.extend(replace(h, finished=True) for h in beam.hypotheses if len(h.tokens) >= options.max_len)
        if not growing:
            break
        log_probs = score([np.array(h.tokens, dtype=np.int64) for h in growing])
        candidates = []
        for hypothesis, row in zip(growing, log_probs):
            allowed = allowed_tokens(model, hypothesis.tokens, options)
            for token in np.flatnonzero(allowed):
                candidates.append(Hypothesis(
                    hypothesis.tokens if token == STOP else hypothesis.tokens + (int(token),),
                    hypothesis.total_nll - float(row[token]), hypothesis.steps + 1, token == STOP))
        beam.prune(candidates)
        finished.extend(h for h in beam.hypotheses if h.finished)
        beam.hypotheses = [h for h in beam.hypotheses if not h.finished]
    return sorted(finished, key=Hypothesis.sort_key)[:width]


def beam_search(model, seed_items: Sequence[str], width: int, max_len: int = 7, direction: str = "forward",
                context: Optional[UserContext] = None, options: Optional[SamplingOptions] = None) -> List[Outfit]:
    """Outfits sorted by perplexity, best first; width 1 is greedy decoding

    In the backward direction seed_items are given head to toe and the
    search extends toward the head.
    """
    seed = encode_seed(model, seed_items)
    if direction == "backward":
        seed = seed[::-1]
    ranked = beam_search_tokens(model, seed, width, max_len, direction, context, options)
    if direction == "backward":
        return [to_outfit(model, h.tokens[::-1]) for h in ranked]
    return [to_outfit(model, h.tokens) for h in ranked]


def bidirectional_beam_search(model, anchor_items: Sequence[str], width: int, max_len: int = 7,
                              context: Optional[UserContext] = None) -> List[Outfit]:
    """Best backward completion toward the head, then a forward beam toward the toe"""
    anchor = encode_seed(model, anchor_items)
    toward_head = SamplingOptions(max_len=max(max_len - 1, len(anchor)), min_len=0)
    head = beam_search_tokens(model, anchor[::-1], width, direction="backward", context=context,
                              options=toward_head)
    head_first = head[0].tokens[::-1] if head else tuple(anchor)
    ranked = beam_search_tokens(model, head_first, width, max_len, "forward", context)
    return [to_outfit(model, h.tokens) for h in ranked]
