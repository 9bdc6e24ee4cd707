"""
Personalized recommendation metrics

One outfit is recommended per evaluation sample, deterministically, and the
recommendations are folded into attribute match rates (CTR on click data,
KR on questionnaire data), personalization rate and item diversity.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
import logging

from ..catalog import ActionSequence, Catalog, Outfit, UserSample
from ..errors import AnchorNotFoundError, GenerationError, InputError, MetricError
from ..generation import (
    DEFAULT_GIBBS_LENGTH, CandidateOutfitIndex, SamplingOptions, autoregressive_generate, bidirectional_generate, gibbs_generate,
    personalized_siamese_recommend,
)
from ..models.config import Family
from .metrics import MATCH_SCHEMAS, attribute_match_rate, item_diversity, personalization_rate

logger = logging.getLogger(__name__)

CTR = "ctr"
KR = "kr"

AUTOREGRESSIVE_FAMILIES = {Family.GPT, Family.CTX_GPT, Family.TRANSFORMER}
BIDIRECTIONAL_FAMILIES = {Family.LSTM, Family.S2S_LSTM}
GIBBS_FAMILIES = {Family.BERT, Family.CTX_BERT}


@dataclass
class PersonalizedResult:
    mode: str
    match_rates: Dict[str, float]
    personalization_rate: Optional[float]
    item_diversity: Optional[float]
    served: int
    missing: int = 0
    recommendations: List[Optional[Outfit]] = field(default_factory=list)


def references_for(sample: UserSample, mode: str) -> List[str]:
    """Clicked outfit items other than the anchor (CTR) or the items the user kept (KR)"""
    if mode == KR:
        return list(sample.kept_items)
    return [item for item in sample.outfit.items if item != sample.anchor]


def recommend(model, sample: UserSample, seed: int = 0, fixed_length: bool = True,
              index: Optional[CandidateOutfitIndex] = None) -> Optional[Outfit]:
    """Deterministic recommendation for one sample; None when the model has nothing to offer

    Generative models build around the anchor item at temperature 0 (Gibbs
    samplers run a seeded chain with the anchor pinned). Models receive the
    clicked outfit's length only with fixed_length. The Siamese model ranks
    the anchor's precomputed candidates by similarity to the user's history.
    """
    family = model.config.family
    context = sample.context if model.config.contextual else None
    length = len(sample.outfit) if fixed_length else None
    anchor = [sample.anchor] if sample.anchor is not None else []
    options = SamplingOptions(temperature=0.0, fixed_length=length)
    try:
        if family in AUTOREGRESSIVE_FAMILIES:
            return autoregressive_generate(model, anchor, context, options=options)
        if family in BIDIRECTIONAL_FAMILIES:
            if not anchor:
                return autoregressive_generate(model, (), context, options=options)
            return bidirectional_generate(model, anchor, context, options=options)
        if family in GIBBS_FAMILIES:
            return gibbs_generate(model, max(length or DEFAULT_GIBBS_LENGTH, 2), context, rng_seed=seed,
                                  anchor=sample.anchor)
        if family == Family.SIAMESE:
            if index is None or sample.anchor is None or not isinstance(sample.context, ActionSequence):
                return None
            return personalized_siamese_recommend(sample.context, sample.anchor, index, model.catalog)
    except AnchorNotFoundError:
        return None
    except (InputError, GenerationError) as e:
        logger.debug(f"No recommendation for sample {sample.sample_id}: {e}")
        return None
    raise MetricError(f"No recommendation protocol for family '{family.value}'")


def personalized_metrics(model, samples: Sequence[UserSample], catalog: Catalog, mode: str = CTR,
                         seed: int = 0, fixed_length: bool = True,
                         index: Optional[CandidateOutfitIndex] = None) -> PersonalizedResult:
    """Match rates under every schema plus personalization rate and item diversity"""
    if mode not in (CTR, KR):
        raise MetricError(f"Unknown personalized mode '{mode}'; choose from {[CTR, KR]}")
    if not samples:
        raise MetricError("Personalized evaluation needs at least one sample")
    model.eval_mode()
    recommendations = [recommend(model, s, seed + i, fixed_length, index) for i, s in enumerate(samples)]
    references = [references_for(s, mode) for s in samples]
    served = [r for r in recommendations if r is not None]
    missing = len(recommendations) - len(served)
    if missing:
        logger.warning(f"{missing} of {len(samples)} samples received no {model.family} recommendation")
    rates = {schema: attribute_match_rate(recommendations, references, schema, catalog)
             for schema in MATCH_SCHEMAS}
    return PersonalizedResult(
        mode=mode,
        match_rates=rates,
        personalization_rate=personalization_rate(served) if served else None,
        item_diversity=item_diversity(served) if served else None,
        served=len(served),
        missing=missing,
        recommendations=recommendations,
    )
