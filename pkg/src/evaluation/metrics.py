"""
Metric folds

Pure functions over scores, ranks and recommended outfits. Model-specific
scoring lives in protocols.py; this module only aggregates.
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging
import math
import numpy as np
import pandas as pd

from ..catalog import Catalog, Outfit
from ..errors import ConfigurationError, MetricError

logger = logging.getLogger(__name__)

MATCH_SCHEMAS: Dict[str, Tuple[str, ...]] = {
    "brand-category": ("brand", "category"),
    "color-category": ("color", "category"),
    "brand-color-category": ("brand", "color", "category"),
}


@dataclass(frozen=True)
class RankCutoffs:
    values: Tuple[int, ...] = (1, 5, 25, 250)

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        if not values or values[0] < 1 or any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigurationError(f"Rank cutoffs must be positive and strictly increasing, got {values}")
        object.__setattr__(self, "values", values)

    def for_vocabulary(self, num_items: int) -> "RankCutoffs":
        """Drop cutoffs larger than the number of rankable items"""
        kept = tuple(v for v in self.values if v <= num_items)
        if len(kept) < len(self.values):
            logger.warning(f"Dropping rank cutoffs {[v for v in self.values if v > num_items]} "
                           f"above the {num_items} rankable items")
        if not kept:
            raise ConfigurationError(f"No rank cutoff fits a vocabulary of {num_items} items")
        return RankCutoffs(kept)


def roc_auc(positive_scores: Sequence[float], negative_scores: Sequence[float]) -> float:
    """Mann-Whitney AUC with midranks, so tied pairs count one half"""
    positive = np.asarray(positive_scores, dtype=np.float64)
    negative = np.asarray(negative_scores, dtype=np.float64)
    if len(positive) == 0 or len(negative) == 0:
        raise MetricError("AUC needs at least one positive and one negative score")
    ranks = pd.Series(np.concatenate([positive, negative])).rank(method="average").to_numpy()
    rank_sum = ranks[:len(positive)].sum()
    u = rank_sum - len(positive) * (len(positive) + 1) / 2.0
    return float(u / (len(positive) * len(negative)))


def rank_of(scores: np.ndarray, target: int, allowed: Optional[np.ndarray] = None) -> int:
    """1 + number of allowed candidates scoring strictly higher than the target"""
    scores = np.asarray(scores, dtype=np.float64)
    higher = scores > scores[target]
    if allowed is not None:
        higher &= allowed
    return 1 + int(higher.sum())


def recall_at(ranks: Sequence[int], cutoffs: RankCutoffs) -> Dict[int, float]:
    ranks = np.asarray(ranks)
    if len(ranks) == 0:
        raise MetricError("Recall needs at least one ranked outfit")
    return {r: float(np.mean(ranks <= r)) for r in cutoffs.values}


def perplexity_from_log_likelihoods(per_outfit: Iterable[np.ndarray]) -> float:
    """Mean over outfits of exp(mean per-item cross-entropy)"""
    values = [math.exp(-float(np.mean(ll))) for ll in per_outfit if len(ll)]
    if not values:
        raise MetricError("Perplexity needs at least one scored outfit")
    return float(np.mean(values))


def _signature(catalog: Catalog, item_id: str, attributes: Tuple[str, ...]) -> Tuple[int, ...]:
    return tuple(catalog.attribute(item_id, name) for name in attributes)


def attribute_match_rate(recommended: Sequence[Optional[Outfit]], references: Sequence[Sequence[str]],
                         schema: str, catalog: Catalog) -> float:
    """Fraction of (user, reference item) events matched by some recommended item

    A match means equal values on every attribute of the schema. A missing
    recommendation (None) matches nothing.
    """
    if schema not in MATCH_SCHEMAS:
        raise ConfigurationError(f"Unknown match schema '{schema}'; choose from {sorted(MATCH_SCHEMAS)}")
    if len(recommended) != len(references):
        raise MetricError(f"{len(recommended)} recommendations for {len(references)} reference sets")
    attributes = MATCH_SCHEMAS[schema]
    events = hits = 0
    for outfit, reference_items in zip(recommended, references):
        offered = set() if outfit is None else {_signature(catalog, i, attributes) for i in outfit.items}
        for item_id in reference_items:
            events += 1
            hits += _signature(catalog, item_id, attributes) in offered
    if events == 0:
        raise MetricError("No reference events to match against")
    return hits / events


def personalization_rate(recommendations: Sequence[Outfit]) -> float:
    """Distinct outfits (as item sets) per user served"""
    if len(recommendations) == 0:
        raise MetricError("Personalization rate needs at least one recommendation")
    return len({outfit.item_set for outfit in recommendations}) / len(recommendations)


def item_diversity(recommendations: Sequence[Outfit]) -> float:
    """Unique items over total items across all recommendations"""
    total = sum(len(outfit) for outfit in recommendations)
    if total == 0:
        raise MetricError("Item diversity needs at least one recommended item")
    return len({item for outfit in recommendations for item in outfit.items}) / total


def validity_rate(outfits: Sequence[Outfit], is_valid) -> float:
    """Fraction of outfits accepted by is_valid (the world oracle)"""
    if len(outfits) == 0:
        raise MetricError("Validity rate needs at least one outfit")
    return sum(bool(is_valid(outfit)) for outfit in outfits) / len(outfits)


def random_base_rate(catalog: Catalog, is_valid, lengths: Sequence[int], rng: np.random.Generator,
                     pool: Optional[Sequence[str]] = None) -> float:
    """Validity rate of uniformly random item sets with the given lengths"""
    pool = list(pool) if pool is not None else [item.item_id for item in catalog.items]
    outfits: List[Outfit] = []
    for length in lengths:
        picked = rng.choice(len(pool), size=min(int(length), len(pool)), replace=False)
        outfits.append(Outfit(tuple(pool[i] for i in picked)))
    return validity_rate(outfits, is_valid)
