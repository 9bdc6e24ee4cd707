"""
Catalog data model

Items with categorical attribute codes and a dense pseudo-image vector,
outfits as sets of item ids, and the two kinds of user context (action
sequences and questionnaires).
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple, Union
import numpy as np

from ..errors import InputError

IMAGE_DIM = 128

# head to toe; also the canonical sequence order
CATEGORIES: Tuple[str, ...] = ("jacket", "sweater", "top", "dress", "pants", "shoes", "accessory")
ACCESSORY = CATEGORIES.index("accessory")
SEASONS: Tuple[str, ...] = ("spring", "summer", "autumn", "winter")
GENDERS: Tuple[str, ...] = ("female", "male")
MATERIALS: Tuple[str, ...] = ("cotton", "denim", "wool", "leather", "silk", "linen", "synthetic", "cashmere")
PATTERNS: Tuple[str, ...] = ("plain", "striped", "checked", "floral", "dotted", "printed", "animal", "camouflage")

ATTRIBUTES: Tuple[str, ...] = ("category", "brand", "color", "season", "gender", "material", "pattern")

# attribute -> embedding width; widths sum to 68, so featurized items have 196 dims
DEFAULT_ATTRIBUTE_DIMS: Dict[str, int] = {
    "category": 16, "brand": 16, "color": 8, "season": 8, "gender": 4, "material": 8, "pattern": 8,
}


@dataclass(frozen=True)
class CatalogSchema:
    """Dictionary sizes for every categorical attribute"""
    num_brands: int = 40
    num_colors: int = 12
    categories: Tuple[str, ...] = CATEGORIES

    def cardinalities(self) -> Dict[str, int]:
        return {
            "category": len(self.categories),
            "brand": self.num_brands,
            "color": self.num_colors,
            "season": len(SEASONS),
            "gender": len(GENDERS),
            "material": len(MATERIALS),
            "pattern": len(PATTERNS),
        }


@dataclass(frozen=True, eq=False)
class Item:
    item_id: str
    category: int
    brand: int
    color: int
    season: int
    gender: int
    material: int
    pattern: int
    image_vec: np.ndarray
    style: Optional[int] = None  # generator-only latent cluster

    def attribute(self, name: str) -> int:
        return getattr(self, name)

    def attribute_codes(self) -> Tuple[int, ...]:
        return tuple(getattr(self, name) for name in ATTRIBUTES)

    def validate(self, schema: CatalogSchema) -> None:
        for name, size in schema.cardinalities().items():
            code = getattr(self, name)
            if not 0 <= code < size:
                raise InputError(f"Item {self.item_id}: {name} code {code} outside [0, {size})")
        if self.image_vec.shape != (IMAGE_DIM,):
            raise InputError(f"Item {self.item_id}: image_vec must have {IMAGE_DIM} dims, got {self.image_vec.shape}")


class OutfitSource(str, Enum):
    CURATED = "curated"
    GENERATED = "generated"


@dataclass(frozen=True, eq=False)
class Outfit:
    """A set of item ids; `items` keeps the order it was built in"""
    items: Tuple[str, ...]
    source: Optional[OutfitSource] = None
    outfit_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise InputError("An outfit needs at least one item")
        if len(set(self.items)) != len(self.items):
            raise InputError(f"Outfit {self.outfit_id or ''} contains duplicate items")

    @property
    def item_set(self) -> FrozenSet[str]:
        return frozenset(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.items

    def __eq__(self, other) -> bool:
        return isinstance(other, Outfit) and self.item_set == other.item_set

    def __hash__(self) -> int:
        return hash(self.item_set)


class EventType(str, Enum):
    CLICK = "click"
    WISHLIST = "wishlist"
    CART = "cart"


EVENT_TYPES: Tuple[EventType, ...] = (EventType.CLICK, EventType.WISHLIST, EventType.CART)


@dataclass(frozen=True)
class Action:
    item_id: str
    event: EventType
    age_days: int


@dataclass(frozen=True)
class ActionSequence:
    """Past interactions, oldest first"""
    actions: Tuple[Action, ...]

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def item_ids(self) -> List[str]:
        return [action.item_id for action in self.actions]


# questionnaire field -> dictionary size (brands/colors/categories come from the schema)
QUESTIONNAIRE_BANDS: Dict[str, int] = {
    "height_band": 5,
    "weight_band": 5,
    "occasion": 6,
    "price_band": 4,
    "shoe_size": 10,
    "hair_color": 6,
}


@dataclass(frozen=True)
class Questionnaire:
    favorite_brands: Tuple[int, ...]
    favorite_colors: Tuple[int, ...]
    nogo_categories: Tuple[int, ...]
    gender: int
    height_band: int
    weight_band: int
    occasion: int
    price_band: int
    shoe_size: int
    hair_color: int
    style_archetype: int

    def validate(self, schema: CatalogSchema, num_styles: int) -> None:
        sizes = schema.cardinalities()
        for code in self.favorite_brands:
            if not 0 <= code < sizes["brand"]:
                raise InputError(f"Questionnaire brand {code} unknown")
        for code in self.favorite_colors:
            if not 0 <= code < sizes["color"]:
                raise InputError(f"Questionnaire color {code} unknown")
        for code in self.nogo_categories:
            if not 0 <= code < sizes["category"]:
                raise InputError(f"Questionnaire category {code} unknown")
        if not 0 <= self.gender < sizes["gender"]:
            raise InputError(f"Questionnaire gender {self.gender} unknown")
        for name, size in QUESTIONNAIRE_BANDS.items():
            if not 0 <= getattr(self, name) < size:
                raise InputError(f"Questionnaire {name} {getattr(self, name)} outside [0, {size})")
        if not 0 <= self.style_archetype < num_styles:
            raise InputError(f"Questionnaire style archetype {self.style_archetype} unknown")


UserContext = Union[ActionSequence, Questionnaire]


@dataclass(frozen=True)
class UserSample:
    """One user context paired with an outfit label"""
    sample_id: str
    user_id: str
    context: UserContext
    outfit: Outfit
    anchor: Optional[str] = None
    day: Optional[int] = None
    kept_items: Tuple[str, ...] = field(default_factory=tuple)
