"""
Generation by model capability

Picks the construction procedure a model supports: beam search or sampling
for sequential models (completing around the anchor when the model reads in
both directions), Gibbs chains for masked models and the candidate index
for the Siamese scorer.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence
import logging

from ..catalog import ActionSequence, Outfit, UserContext
from ..errors import UsageError
from ..models.base import BidirectionalModel, MaskedItemModel, NextItemModel, OutfitScoringModel
from .beam import beam_search, bidirectional_beam_search
from .gibbs import gibbs_generate
from .nearest_neighbor import CandidateOutfitIndex, personalized_siamese_recommend
from .sampling import SamplingOptions, autoregressive_generate, bidirectional_generate

logger = logging.getLogger(__name__)

DEFAULT_GIBBS_LENGTH = 4


@dataclass
class GenerationRequest:
    anchor: Optional[str] = None
    context: Optional[UserContext] = None
    count: int = 1
    beam_width: Optional[int] = None
    temperature: float = 1.0
    gibbs_iters: Optional[int] = None
    fixed_length: Optional[int] = None
    max_len: int = 7
    seed: int = 0


def generate_outfits(model, request: GenerationRequest,
                     index: Optional[CandidateOutfitIndex] = None) -> List[Outfit]:
    """Outfits for one request; beam search returns up to beam_width ranked outfits"""
    anchor: Sequence[str] = [request.anchor] if request.anchor else []
    context = request.context if model.config.contextual else None
    if isinstance(model, OutfitScoringModel):
        if index is None or not anchor or not isinstance(request.context, ActionSequence):
            raise UsageError("The Siamese model recommends from a candidate index and needs an anchor "
                             "and an action history")
        return [personalized_siamese_recommend(request.context, request.anchor, index, model.catalog)]
    if request.beam_width is not None:
        if anchor and isinstance(model, BidirectionalModel):
            return bidirectional_beam_search(model, anchor, request.beam_width, request.max_len, context)
        if isinstance(model, NextItemModel):
            return beam_search(model, anchor, request.beam_width, request.max_len, context=context)
        raise UsageError(f"{model.family} does not support beam search")
    outfits = []
    for i in range(request.count):
        seed = request.seed + i
        if isinstance(model, MaskedItemModel):
            outfits.append(gibbs_generate(model, request.fixed_length or DEFAULT_GIBBS_LENGTH, context,
                                          request.gibbs_iters, rng_seed=seed, temperature=request.temperature,
                                          anchor=request.anchor))
            continue
        options = SamplingOptions(max_len=request.max_len, temperature=request.temperature,
                                  fixed_length=request.fixed_length)
        if anchor and isinstance(model, BidirectionalModel):
            outfits.append(bidirectional_generate(model, anchor, context, rng_seed=seed, options=options))
        else:
            outfits.append(autoregressive_generate(model, anchor, context, rng_seed=seed, options=options))
    logger.debug(f"{model.family} generated {len(outfits)} outfits")
    return outfits
