"""
Gibbs sampling from a masked outfit model

Starting from uniformly random items, each iteration masks one position and
resamples it from the model's conditional given every other position (and
the user context, which stays pinned). An anchor item is pinned the same way:
it holds the first position from initialization on and that position is never
resampled. The random scan picks a free position uniformly; the systematic
scan sweeps the free positions in order.
"""
from typing import List, Optional
import logging
import numpy as np

from ..catalog import MASK, NUM_SPECIAL, STOP, Outfit, UserContext
from ..errors import ConfigurationError, InputError
from ..nn import rng_stream
from .sampling import choose_token, encode_seed, to_outfit

logger = logging.getLogger(__name__)

SCANS = ("random", "systematic")


def gibbs_trajectory(model, length: int, context: Optional[UserContext] = None, num_iters: Optional[int] = None,
                     rng_seed: int = 0, scan: str = "random", temperature: float = 1.0,
                     suppress_duplicates: bool = True, anchor: Optional[str] = None) -> List[np.ndarray]:
    """States after initialization and after every iteration"""
    if length < 2:
        raise InputError(f"Gibbs sampling needs an outfit length of at least 2, got {length}")
    num_iters = 10 * length if num_iters is None else num_iters
    if num_iters < 10 * length:
        raise ConfigurationError(f"num_iters {num_iters} must be at least 10x the outfit length {length}")
    if scan not in SCANS:
        raise ConfigurationError(f"Unknown scan '{scan}'; choose from {SCANS}")
    items = np.arange(NUM_SPECIAL, model.vocab_size)
    if suppress_duplicates and len(items) < length:
        raise InputError(f"Vocabulary has {len(items)} items, fewer than the outfit length {length}")

    rng = rng_stream(rng_seed, "gibbs")
    if anchor is None:
        state = rng.choice(items, size=length, replace=not suppress_duplicates).astype(np.int64)
        free = np.arange(length)
    else:
        pinned = int(encode_seed(model, [anchor])[0])
        pool = items[items != pinned] if suppress_duplicates else items
        rest = rng.choice(pool, size=length - 1, replace=not suppress_duplicates)
        state = np.concatenate([[pinned], rest]).astype(np.int64)
        free = np.arange(1, length)
    contexts = None if context is None else [context]
    trajectory = [state.copy()]
    model.eval_mode()
    for step in range(num_iters):
        position = int(free[rng.integers(len(free))] if scan == "random" else free[step % len(free)])
        log_probs = model.masked_log_probs([state], [position], contexts)[0]
        allowed = np.ones(model.vocab_size, dtype=bool)
        allowed[[STOP, MASK]] = False
        if suppress_duplicates:
            allowed[np.delete(state, position)] = False
        state[position] = choose_token(log_probs, allowed, temperature, rng)
        trajectory.append(state.copy())
    logger.debug(f"Gibbs chain of length {length} ran {num_iters} iterations ({scan} scan)")
    return trajectory


def gibbs_generate(model, length: int, context: Optional[UserContext] = None, num_iters: Optional[int] = None,
                   rng_seed: int = 0, scan: str = "random", temperature: float = 1.0,
                   anchor: Optional[str] = None) -> Outfit:
    """Final state of the chain as an outfit"""
    final = gibbs_trajectory(model, length, context, num_iters, rng_seed, scan, temperature, anchor=anchor)[-1]
    return to_outfit(model, final)
