"""
Model-specific evaluation protocols

Perplexity, fill-in-the-blank recall and compatibility AUC. Each protocol
dispatches on what the model can do rather than on its family: masked models
predict the blank in place, bidirectional models join a forward and a
backward prediction, outfit scorers rank completions directly and every
other sequential model predicts the removed item after the remainder.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math
import numpy as np

from ..catalog import NUM_SPECIAL, UNK, Catalog, Outfit, UserSample, Vocabulary
from ..errors import MetricError
from ..models.base import (
    BidirectionalModel, Example, MaskedItemModel, NextItemModel, OutfitScoringModel, SequenceScoringModel,
    encode_outfit,
)
from ..nn import rng_stream
from ..synthgen import replace_one
from .metrics import RankCutoffs, perplexity_from_log_likelihoods, rank_of, recall_at, roc_auc

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 256


@dataclass
class PerplexityResult:
    value: float
    scored: int
    skipped: int = 0


@dataclass
class FITBResult:
    recall: Dict[int, float]
    ranks: List[int] = field(default_factory=list)
    skipped: int = 0

    @property
    def scored(self) -> int:
        return len(self.ranks)


@dataclass
class CompatibilityResult:
    auc: float
    positive_scores: np.ndarray
    negative_scores: np.ndarray
    skipped: int = 0


def evaluation_examples(outfits: Sequence[Outfit], vocab: Vocabulary, catalog: Catalog,
                        samples: Optional[Sequence[UserSample]] = None,
                        min_length: int = 2) -> Tuple[List[Example], int]:
    """Examples for scoring; outfits with any out-of-vocabulary item are skipped whole"""
    sources = samples if samples is not None else [None] * len(outfits)
    examples: List[Example] = []
    skipped = 0
    for position, sample in enumerate(sources):
        outfit = sample.outfit if sample is not None else outfits[position]
        tokens = encode_outfit(outfit, vocab, catalog)
        if np.any(tokens == UNK) or len(tokens) < min_length:
            skipped += 1
            continue
        examples.append(Example(tokens, sample.context if sample is not None else None, outfit,
                                sample.anchor if sample is not None else None))
    if skipped:
        logger.warning(f"{skipped} outfits skipped for evaluation (out-of-vocabulary items or too short)")
    return examples, skipped


def _batches(examples: Sequence[Example], batch_size: int):
    for start in range(0, len(examples), batch_size):
        yield examples[start:start + batch_size]


def _contexts(batch: Sequence[Example]):
    contexts = [e.context for e in batch]
    return None if all(c is None for c in contexts) else contexts


def item_log_likelihoods(model, examples: Sequence[Example],
                         batch_size: int = DEFAULT_BATCH_SIZE) -> List[np.ndarray]:
    """Per-item log-likelihoods of every example under the model's sequential scoring"""
    if not isinstance(model, SequenceScoringModel):
        raise MetricError(f"{type(model).__name__} does not score outfits sequentially")
    model.eval_mode()
    scores: List[np.ndarray] = []
    for batch in _batches(examples, batch_size):
        scores.extend(model.item_log_likelihoods([e.tokens for e in batch], _contexts(batch)))
    return scores


def perplexity(model, examples: Sequence[Example], skipped: int = 0,
               batch_size: int = DEFAULT_BATCH_SIZE) -> PerplexityResult:
    """Mean over outfits of exp(mean per-item cross-entropy)

    Masked models are scored left to right: item t is predicted at a masked
    slot after items 1..t-1, with everything to its right removed.
    """
    if not examples:
        raise MetricError("Perplexity needs at least one in-vocabulary outfit")
    value = perplexity_from_log_likelihoods(item_log_likelihoods(model, examples, batch_size))
    return PerplexityResult(value, len(examples), skipped)


def fitb_positions(examples: Sequence[Example], rng_seed: int) -> np.ndarray:
    """One uniformly chosen blank per outfit"""
    rng = rng_stream(rng_seed, "fitb")
    return np.array([int(rng.integers(len(e))) for e in examples], dtype=np.int64)


def _blank_scores(model, batch: Sequence[Example], positions: np.ndarray) -> np.ndarray:
    """[B, V] scores for the blank of every outfit in batch"""
    contexts = _contexts(batch)
    if isinstance(model, MaskedItemModel):
        return model.masked_log_probs([e.tokens for e in batch], positions, contexts)
    if isinstance(model, BidirectionalModel):
        return model.blank_log_probs([e.tokens[:p] for e, p in zip(batch, positions)],
                                     [e.tokens[p + 1:] for e, p in zip(batch, positions)], contexts)
    if isinstance(model, OutfitScoringModel) and hasattr(model, "blank_scores"):
        candidates = np.arange(NUM_SPECIAL, model.vocab_size)
        scores = np.full((len(batch), model.vocab_size), -np.inf)
        for row, (example, position) in enumerate(zip(batch, positions)):
            remainder = np.delete(example.tokens, position)
            scores[row, NUM_SPECIAL:] = model.blank_scores(model.vocab_rows[remainder],
                                                           model.vocab_rows[candidates])
        return scores
    if isinstance(model, NextItemModel):
        return model.next_log_probs([np.delete(e.tokens, p) for e, p in zip(batch, positions)], contexts)
    raise MetricError(f"{type(model).__name__} cannot fill in a blank")


def fitb(model, examples: Sequence[Example], cutoffs: Optional[RankCutoffs] = None, rng_seed: int = 0,
         skipped: int = 0, batch_size: int = DEFAULT_BATCH_SIZE) -> FITBResult:
    """Recall@r of the masked item among all vocabulary items

    Special tokens and the items remaining in the outfit are not candidates.
    """
    if not examples:
        raise MetricError("FITB needs at least one in-vocabulary outfit")
    cutoffs = (cutoffs or RankCutoffs()).for_vocabulary(model.vocab_size - NUM_SPECIAL)
    positions = fitb_positions(examples, rng_seed)
    model.eval_mode()
    ranks: List[int] = []
    for start in range(0, len(examples), batch_size):
        batch = examples[start:start + batch_size]
        batch_positions = positions[start:start + batch_size]
        scores = _blank_scores(model, batch, batch_positions)
        for row, (example, position) in enumerate(zip(batch, batch_positions)):
            allowed = np.ones(model.vocab_size, dtype=bool)
            allowed[:NUM_SPECIAL] = False
            allowed[np.delete(example.tokens, position)] = False
            ranks.append(rank_of(scores[row], int(example.tokens[position]), allowed))
    recall = recall_at(ranks, cutoffs)
    logger.debug(f"FITB over {len(ranks)} outfits: {recall}")
    return FITBResult(recall, ranks, skipped)


def outfit_scores(model, examples: Sequence[Example], batch_size: int = DEFAULT_BATCH_SIZE) -> np.ndarray:
    """Compatibility score per outfit: the model's own score, else exp(-mean cross-entropy)"""
    model.eval_mode()
    if isinstance(model, OutfitScoringModel):
        return np.concatenate([model.outfit_scores([e.tokens for e in batch])
                               for batch in _batches(examples, batch_size)])
    return np.array([math.exp(float(np.mean(ll))) for ll in item_log_likelihoods(model, examples, batch_size)])


def corrupt(examples: Sequence[Example], vocab: Vocabulary, catalog: Catalog, rng_seed: int,
            category_matched: bool = False) -> List[Example]:
    """One negative per positive: a single position replaced by a random vocabulary item"""
    rng = rng_stream(rng_seed, "compatibility")
    pool = vocab.item_ids
    negatives = []
    for example in examples:
        positive = Outfit(tuple(vocab.decode(example.tokens)))
        negative = replace_one(positive, pool, rng, catalog=catalog, category_matched=category_matched)
        negatives.append(Example(encode_outfit(negative, vocab, catalog), example.context, negative,
                                 example.anchor))
    return negatives


def compatibility_auc(model, examples: Sequence[Example], rng_seed: int = 0, category_matched: bool = False,
                      skipped: int = 0, batch_size: int = DEFAULT_BATCH_SIZE) -> CompatibilityResult:
    """ROC-AUC separating real outfits from their one-item corruptions"""
    if len(examples) < 2:
        raise MetricError(f"Compatibility AUC needs at least 2 outfits, got {len(examples)}")
    negatives = corrupt(examples, model.vocab, model.catalog, rng_seed, category_matched)
    positive_scores = outfit_scores(model, examples, batch_size)
    negative_scores = outfit_scores(model, negatives, batch_size)
    return CompatibilityResult(roc_auc(positive_scores, negative_scores), positive_scores, negative_scores,
                               skipped)
