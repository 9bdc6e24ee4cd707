"""
Validity of generated outfits

Samples outfits from a generative model and measures the share the world
oracle accepts, next to the same measure for uniformly random item sets of
matching lengths.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence
import logging

from ..catalog import Catalog, Outfit, UserContext
from ..errors import GenerationError, InputError, MetricError
from ..generation import SamplingOptions, autoregressive_generate, gibbs_generate
from ..models.base import MaskedItemModel, NextItemModel
from ..nn import rng_stream
from ..synthgen import StyleWorld, oracle_compatible
from .metrics import random_base_rate, validity_rate

logger = logging.getLogger(__name__)


@dataclass
class ValidityResult:
    rate: float
    base_rate: float
    generated: int

    @property
    def lift(self) -> float:
        return self.rate / self.base_rate if self.base_rate > 0 else float("inf")


def sample_outfits(model, count: int, lengths: Sequence[int], contexts: Optional[Sequence[UserContext]] = None,
                   seed: int = 0, temperature: float = 1.0, max_workers: int = 1) -> List[Outfit]:
    """count outfits sampled from scratch; masked models use Gibbs chains with the given lengths

    Sample i always uses seed + i, so the result does not depend on max_workers.
    """
    if not lengths:
        raise MetricError("Validity sampling needs at least one reference length")
    if not isinstance(model, (MaskedItemModel, NextItemModel)):
        raise MetricError(f"{type(model).__name__} does not generate outfits")

    def one(i: int) -> Optional[Outfit]:
        context = contexts[i % len(contexts)] if contexts and model.config.contextual else None
        try:
            if isinstance(model, MaskedItemModel):
                return gibbs_generate(model, max(2, lengths[i % len(lengths)]), context, rng_seed=seed + i,
                                      temperature=temperature)
            return autoregressive_generate(model, (), context, rng_seed=seed + i,
                                           options=SamplingOptions(temperature=temperature))
        except (GenerationError, InputError) as e:
            logger.debug(f"Sample {i} failed: {e}")
            return None

    if max_workers <= 1:
        results = [one(i) for i in range(count)]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            results = list(executor.map(one, range(count)))
    return [outfit for outfit in results if outfit is not None]


def generated_validity(model, world: StyleWorld, catalog: Catalog, count: int, lengths: Sequence[int],
                       contexts: Optional[Sequence[UserContext]] = None, seed: int = 0,
                       max_workers: int = 1) -> ValidityResult:
    outfits = sample_outfits(model, count, lengths, contexts, seed, max_workers=max_workers)
    is_valid = lambda outfit: oracle_compatible(outfit, world, catalog)
    rate = validity_rate(outfits, is_valid)
    base = random_base_rate(catalog, is_valid, [len(o) for o in outfits], rng_stream(seed, "base-rate"),
                            pool=model.vocab.item_ids)
    logger.info(f"{model.family}: {rate:.3f} of {len(outfits)} generated outfits valid "
                f"(random sets {base:.3f})")
    return ValidityResult(rate, base, len(outfits))
