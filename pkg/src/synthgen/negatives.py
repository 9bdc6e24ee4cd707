"""
Negative outfits for compatibility training and evaluation
"""
from typing import Optional, Sequence, Union
import numpy as np

from ..catalog import Catalog, Outfit, OutfitSource
from ..errors import InputError
from ..nn import rng_stream

SeedOrRng = Union[int, np.random.Generator]


def _generator(seed: SeedOrRng) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return rng_stream(seed, "negatives")


def _replacement(pool: Sequence[str], taken: set, rng: np.random.Generator) -> str:
    for _ in range(1000):
        candidate = pool[int(rng.integers(len(pool)))]
        if candidate not in taken:
            return candidate
    remaining = [item_id for item_id in pool if item_id not in taken]
    if not remaining:
        raise InputError("No replacement item left in the candidate pool")
    return remaining[int(rng.integers(len(remaining)))]


def negative_sample(outfit: Outfit, catalog: Catalog, seed: SeedOrRng,
                    pool: Optional[Sequence[str]] = None) -> Outfit:
    """Swap k ~ Uniform{1..n} positions for random items of any category"""
    pool = list(pool) if pool is not None else [item.item_id for item in catalog.items]
    if len(pool) <= len(outfit):
        raise InputError(f"Need more than {len(outfit)} candidate items to corrupt an outfit")
    rng = _generator(seed)
    n = len(outfit)
    k = int(rng.integers(1, n + 1))
    positions = rng.choice(n, size=k, replace=False)
    items = list(outfit.items)
    taken = set(items)
    for position in positions:
        items[position] = _replacement(pool, taken, rng)
        taken.add(items[position])
    return Outfit(tuple(items), source=OutfitSource.GENERATED)


def replace_one(outfit: Outfit, pool: Sequence[str], seed: SeedOrRng, catalog: Optional[Catalog] = None,
                category_matched: bool = False) -> Outfit:
    """Replace exactly one uniformly chosen position

    With category_matched the replacement is drawn among pool items of the
    replaced item's category (the hard-negative mode), which needs a catalog.
    """
    rng = _generator(seed)
    position = int(rng.integers(len(outfit)))
    candidates = list(pool)
    if category_matched:
        if catalog is None:
            raise InputError("Category-matched replacement needs the catalog")
        category = catalog.category_of(outfit.items[position])
        matched = [item_id for item_id in candidates if catalog.category_of(item_id) == category]
        candidates = matched if len(set(matched) - outfit.item_set) else candidates
    items = list(outfit.items)
    items[position] = _replacement(candidates, set(items), rng)
    return Outfit(tuple(items), source=OutfitSource.GENERATED)
