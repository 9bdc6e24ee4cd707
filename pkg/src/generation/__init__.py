"""
Generation Module

Outfit construction: autoregressive sampling, beam search over perplexity,
Gibbs sampling from masked models, and the nearest-neighbour personalized
ranking over precomputed candidates.
"""
from .sampling import (
    SamplingOptions, allowed_tokens, autoregressive_generate, bidirectional_generate, choose_token, encode_seed,
    to_outfit,
)
from .beam import Beam, Hypothesis, beam_search, beam_search_tokens, bidirectional_beam_search
from .gibbs import SCANS, gibbs_generate, gibbs_trajectory
from .nearest_neighbor import (
    DEFAULT_CANDIDATE_CAP, DEFAULT_SCORE_THRESHOLD, CandidateOutfitIndex, build_candidate_index, nn_rank, nn_score,
    personalized_siamese_recommend,
)
from .dispatch import DEFAULT_GIBBS_LENGTH, GenerationRequest, generate_outfits

__all__ = [
    "SamplingOptions", "allowed_tokens", "autoregressive_generate", "bidirectional_generate", "choose_token",
    "encode_seed", "to_outfit",
    "Beam", "Hypothesis", "beam_search", "beam_search_tokens", "bidirectional_beam_search",
    "SCANS", "gibbs_generate", "gibbs_trajectory",
    "DEFAULT_CANDIDATE_CAP", "DEFAULT_SCORE_THRESHOLD", "CandidateOutfitIndex", "build_candidate_index",
    "nn_rank", "nn_score", "personalized_siamese_recommend",
    "DEFAULT_GIBBS_LENGTH", "GenerationRequest", "generate_outfits",
]
