"""
Item vocabulary with frequency thresholding

Index layout: 0 is the stop token, 1 the mask token, items start at 2 in
order of descending frequency (ties by item id). Items outside the
vocabulary map to UNK, which is never a prediction target.
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Tuple
import logging
import numpy as np

from ..errors import ConfigurationError, InputError
from .types import Outfit

logger = logging.getLogger(__name__)

STOP = 0
MASK = 1
UNK = -1
NUM_SPECIAL = 2
SPECIAL_NAMES = ("<stop>", "<mask>")


@dataclass(frozen=True)
class Vocabulary:
    item_ids: Tuple[str, ...]
    counts: Tuple[int, ...]
    threshold: int
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "item_ids", tuple(self.item_ids))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "_index", {item_id: NUM_SPECIAL + i for i, item_id in enumerate(self.item_ids)})
        if len(self._index) != len(self.item_ids):
            raise ConfigurationError("Vocabulary contains duplicate item ids")

    @property
    def size(self) -> int:
        """Softmax width: items plus the special tokens"""
        return len(self.item_ids) + NUM_SPECIAL

    @property
    def num_items(self) -> int:
        return len(self.item_ids)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._index

    def index(self, item_id: str) -> int:
        return self._index.get(item_id, UNK)

    def encode(self, item_ids: Iterable[str]) -> np.ndarray:
        return np.array([self.index(item_id) for item_id in item_ids], dtype=np.int64)

    def item_at(self, index: int) -> str:
        if index < NUM_SPECIAL or index >= self.size:
            raise InputError(f"Index {index} is not an item token")
        return self.item_ids[index - NUM_SPECIAL]

    def decode(self, indices: Iterable[int]) -> List[str]:
        return [self.item_at(int(i)) for i in indices]

    def item_indices(self) -> np.ndarray:
        return np.arange(NUM_SPECIAL, self.size)

    def to_dict(self) -> Dict[str, Any]:
        return {"threshold": self.threshold, "item_ids": list(self.item_ids), "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Vocabulary":
        return cls(tuple(payload["item_ids"]), tuple(payload["counts"]), int(payload["threshold"]))


def build_vocabulary(outfits: Iterable[Outfit], threshold: int = 8) -> Vocabulary:
    """Keep items occurring at least `threshold` times across the outfits"""
    if threshold < 1:
        raise ConfigurationError(f"Vocabulary threshold must be >= 1, got {threshold}")
    counts = Counter()
    for outfit in outfits:
        counts.update(outfit.items)
    kept = sorted(((item_id, n) for item_id, n in counts.items() if n >= threshold),
                  key=lambda pair: (-pair[1], pair[0]))
    if not kept:
        raise ConfigurationError(f"No item occurs at least {threshold} times; vocabulary would be empty")
    logger.info(f"Vocabulary: kept {len(kept)} of {len(counts)} items (threshold {threshold})")
    return Vocabulary(tuple(i for i, _ in kept), tuple(n for _, n in kept), threshold)
