"""
Train/validation splits
"""
from typing import List, Sequence, Tuple, TypeVar
import logging
import numpy as np

from ..errors import ConfigurationError
from ..nn import rng_stream

logger = logging.getLogger(__name__)

T = TypeVar("T")


def random_split(samples: Sequence[T], seed: int, validation_fraction: float = 0.1) -> Tuple[List[T], List[T]]:
    """Seeded permutation; validation gets round(fraction * n) samples"""
    n = len(samples)
    n_validation = int(round(validation_fraction * n))
    if n_validation < 1 or n_validation >= n:
        raise ConfigurationError(f"Cannot split {n} samples with validation fraction {validation_fraction}")
    order = rng_stream(seed, "split").permutation(n)
    validation = set(order[:n_validation].tolist())
    train = [s for i, s in enumerate(samples) if i not in validation]
    held_out = [s for i, s in enumerate(samples) if i in validation]
    return train, held_out


def time_split(samples: Sequence[T], validation_fraction: float = 0.1) -> Tuple[List[T], List[T]]:
    """Hold out the last days: validation is every sample on or after a cut day

    The cut is the day whose tail share comes closest to validation_fraction
    while leaving both sides non-empty, so every training day precedes every
    validation day.
    """
    days = [getattr(s, "day", None) for s in samples]
    if any(day is None for day in days):
        raise ConfigurationError("Time-based split needs a day on every sample")
    days = np.asarray(days)
    distinct = np.unique(days)
    if len(distinct) < 2:
        raise ConfigurationError(f"Time-based split needs at least two distinct days, got {len(distinct)}")
    target = validation_fraction * len(samples)
    tail_sizes = np.array([(days >= day).sum() for day in distinct[1:]])
    cut = distinct[1:][int(np.argmin(np.abs(tail_sizes - target)))]
    train = [s for s, day in zip(samples, days) if day < cut]
    validation = [s for s, day in zip(samples, days) if day >= cut]
    logger.info(f"Time-based split at day {int(cut)}: {len(train)} train, {len(validation)} validation")
    return train, validation


def split(samples: Sequence[T], policy: str, seed: int = 0,
          validation_fraction: float = 0.1) -> Tuple[List[T], List[T]]:
    """Disjoint, exhaustive (train, validation) partition"""
    if policy == "random_90_10":
        return random_split(samples, seed, validation_fraction)
    if policy == "time_based":
        return time_split(samples, validation_fraction)
    raise ConfigurationError(f"Unknown split policy '{policy}'; choose from ['random_90_10', 'time_based']")
