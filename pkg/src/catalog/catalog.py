"""
Item catalog with array views for featurization
"""
from typing import Dict, Iterable, List, Optional, Sequence
import logging
import numpy as np

from ..errors import InputError
from .types import ACCESSORY, ATTRIBUTES, CATEGORIES, IMAGE_DIM, CatalogSchema, Item, Outfit, OutfitSource

logger = logging.getLogger(__name__)

MIN_OUTFIT_LENGTH = 2
MAX_OUTFIT_LENGTH = 7


class Catalog:
    """Immutable collection of items addressable by id or row"""

    def __init__(self, items: Sequence[Item], schema: Optional[CatalogSchema] = None):
        self.schema = schema or CatalogSchema()
        self.items: List[Item] = list(items)
        self._rows: Dict[str, int] = {}
        for row, item in enumerate(self.items):
            if item.item_id in self._rows:
                raise InputError(f"Duplicate item id {item.item_id}")
            item.validate(self.schema)
            self._rows[item.item_id] = row
        self.attribute_codes = np.array([item.attribute_codes() for item in self.items],
                                        dtype=np.int64).reshape(len(self.items), len(ATTRIBUTES))
        self.image_matrix = np.array([item.image_vec for item in self.items],
                                     dtype=np.float64).reshape(len(self.items), IMAGE_DIM)
        self.attribute_codes.setflags(write=False)
        self.image_matrix.setflags(write=False)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._rows

    def __iter__(self):
        return iter(self.items)

    def row(self, item_id: str) -> int:
        try:
            return self._rows[item_id]
        except KeyError:
            raise InputError(f"Unknown item {item_id}") from None

    def rows(self, item_ids: Iterable[str]) -> np.ndarray:
        return np.array([self.row(item_id) for item_id in item_ids], dtype=np.int64)

    def get(self, item_id: str) -> Item:
        return self.items[self.row(item_id)]

    def attribute(self, item_id: str, name: str) -> int:
        return int(self.attribute_codes[self.row(item_id), ATTRIBUTES.index(name)])

    def category_of(self, item_id: str) -> int:
        return self.attribute(item_id, "category")

    def items_in_category(self, category: int) -> List[str]:
        column = self.attribute_codes[:, 0]
        return [self.items[row].item_id for row in np.flatnonzero(column == category)]

    def validate_outfit(self, outfit: Outfit) -> None:
        """Length bounds, known items, and one item per body part for curated outfits"""
        if not MIN_OUTFIT_LENGTH <= len(outfit) <= MAX_OUTFIT_LENGTH:
            raise InputError(f"Outfit length {len(outfit)} outside [{MIN_OUTFIT_LENGTH}, {MAX_OUTFIT_LENGTH}]")
        categories = [self.category_of(item_id) for item_id in outfit.items]
        if outfit.source == OutfitSource.CURATED:
            core = [c for c in categories if c != ACCESSORY]
            if len(core) != len(set(core)):
                raise InputError(f"Curated outfit {outfit.outfit_id} has two items for one body part")


def category_rank(order: Sequence[str] = CATEGORIES) -> Dict[int, int]:
    """Category code -> position in the head-to-toe order"""
    return {CATEGORIES.index(name): rank for rank, name in enumerate(order)}


def canonical_order(outfit: Outfit, catalog: Catalog, order: Sequence[str] = CATEGORIES) -> List[str]:
    """Sort by category rank (head to toe), ties by item id"""
    ranks = category_rank(order)
    return sorted(outfit.items, key=lambda item_id: (ranks[catalog.category_of(item_id)], item_id))
