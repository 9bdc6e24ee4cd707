"""
Style world with a planted compatibility rule

An outfit is compatible iff its items share a gender and a season group, all
style clusters lie within distance 1 of each other on a cycle graph, all
colors fit inside one palette, and the category multiset matches a template.
"""
from collections import Counter
from dataclasses import dataclass
from itertools import product
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple
import logging
import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..catalog import CATEGORIES, IMAGE_DIM, MATERIALS, PATTERNS, SEASONS, Catalog, CatalogSchema, Item, Outfit
from ..errors import ConfigurationError
from ..nn import rng_stream

logger = logging.getLogger(__name__)

CAT = {name: code for code, name in enumerate(CATEGORIES)}
BASE_TEMPLATES: Tuple[Tuple[int, ...], ...] = (
    (CAT["shoes"], CAT["pants"], CAT["top"]),
    (CAT["shoes"], CAT["dress"]),
)
# optional extras: jacket, sweater, and up to two accessories
EXTRA_SLOTS: Tuple[int, ...] = (CAT["jacket"], CAT["sweater"], CAT["accessory"], CAT["accessory"])
# spring/summer vs autumn/winter
SEASON_GROUPS: Tuple[int, ...] = (0, 0, 1, 1)


class WorldConfig(BaseModel):
    num_styles: int = Field(default=8, ge=3)
    num_colors: int = Field(default=12, ge=4)
    num_palettes: int = Field(default=6, ge=1)
    palette_size: int = Field(default=4, ge=1)
    num_brands: int = Field(default=40, ge=1)
    brand_affinity: float = Field(default=0.8, ge=0.0, le=1.0)
    image_noise: float = Field(default=0.3, ge=0.0)
    dress_probability: float = Field(default=0.3, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_palettes(self):
        if self.palette_size > self.num_colors:
            raise ValueError("palette_size cannot exceed num_colors")
        return self


def style_distance(a: int, b: int, num_styles: int) -> int:
    d = abs(a - b) % num_styles
    return min(d, num_styles - d)


@dataclass
class StyleWorld:
    config: WorldConfig
    seed: int
    palettes: Tuple[FrozenSet[int], ...]
    style_palettes: Tuple[Tuple[int, ...], ...]
    brand_styles: Tuple[int, ...]
    style_vectors: np.ndarray
    color_vectors: np.ndarray
    category_vectors: np.ndarray
    templates: FrozenSet[Tuple[Tuple[int, int], ...]]

    @property
    def num_styles(self) -> int:
        return self.config.num_styles

    @property
    def schema(self) -> CatalogSchema:
        return CatalogSchema(num_brands=self.config.num_brands, num_colors=self.config.num_colors)

    def brands_of_style(self, style: int) -> List[int]:
        return [b for b, s in enumerate(self.brand_styles) if s == style]

    def palette_colors(self, style: int) -> List[int]:
        return sorted(set().union(*(self.palettes[p] for p in self.style_palettes[style])))

    def centroid(self, style: int, color: int, category: int) -> np.ndarray:
        return self.style_vectors[style] + self.color_vectors[color] + self.category_vectors[category]

    def template_matches(self, categories: Sequence[int]) -> bool:
        return _multiset_key(categories) in self.templates

    def compatible(self, items: Sequence[Item]) -> bool:
        """The planted rule on already-resolved items"""
        if not items:
            return False
        if len({item.gender for item in items}) != 1:
            return False
        if len({SEASON_GROUPS[item.season] for item in items}) != 1:
            return False
        styles = sorted({item.style for item in items})
        if any(s is None for s in styles):
            return False
        if any(style_distance(a, b, self.num_styles) > 1 for a in styles for b in styles):
            return False
        colors = {item.color for item in items}
        if not any(colors <= palette for palette in self.palettes):
            return False
        return self.template_matches([item.category for item in items])

    def pair_compatible(self, a: Item, b: Item) -> bool:
        """Pairwise restriction of the rule: could a and b share some compatible outfit"""
        if a.item_id == b.item_id or a.gender != b.gender:
            return False
        if SEASON_GROUPS[a.season] != SEASON_GROUPS[b.season]:
            return False
        if a.style is None or b.style is None or style_distance(a.style, b.style, self.num_styles) > 1:
            return False
        if not any({a.color, b.color} <= palette for palette in self.palettes):
            return False
        pair = Counter([a.category, b.category])
        return any(all(Counter(dict(t))[c] >= n for c, n in pair.items()) for t in self.templates)

    def sample_template(self, rng: np.random.Generator, mean_length: float,
                        min_core: int = 0, max_attempts: int = 100) -> Tuple[int, ...]:
        """Base template plus independently drawn extras, calibrated to mean_length"""
        p_dress = self.config.dress_probability
        base_mean = 2 * p_dress + 3 * (1 - p_dress)
        extra_mean = min(max(mean_length - base_mean, 0.0), 4.0)
        # E[extras] = 3q + q^2 with the second accessory conditional on the first
        q = min(1.0, (-3.0 + np.sqrt(9.0 + 4.0 * extra_mean)) / 2.0)
        for _ in range(max_attempts):
            base = BASE_TEMPLATES[1] if rng.random() < p_dress else BASE_TEMPLATES[0]
            extras = [slot for slot in EXTRA_SLOTS[:3] if rng.random() < q]
            if CAT["accessory"] in extras and rng.random() < q:
                extras.append(CAT["accessory"])
            template = tuple(base) + tuple(extras)
            if sum(1 for c in template if c != CAT["accessory"]) >= min_core:
                return template
        raise ConfigurationError(f"No template with {min_core} core items under mean length {mean_length}")

    def to_params(self) -> Dict:
        return {"config": self.config.model_dump(), "seed": self.seed}


def _multiset_key(categories: Sequence[int]) -> Tuple[Tuple[int, int], ...]:
    return tuple(sorted(Counter(categories).items()))


def _all_templates() -> FrozenSet[Tuple[Tuple[int, int], ...]]:
    keys = set()
    for base in BASE_TEMPLATES:
        for jacket, sweater, accessories in product((0, 1), (0, 1), (0, 1, 2)):
            categories = list(base) + [CAT["jacket"]] * jacket + [CAT["sweater"]] * sweater
            categories += [CAT["accessory"]] * accessories
            keys.add(_multiset_key(categories))
    return frozenset(keys)


def build_world(config: WorldConfig, seed: int) -> StyleWorld:
    """Deterministic world from (config, seed)"""
    rng = rng_stream(seed, "world")
    palettes = tuple(
        frozenset((2 * p + k) % config.num_colors for k in range(config.palette_size))
        for p in range(config.num_palettes)
    )
    style_palettes = tuple(
        tuple(sorted({s % config.num_palettes, (s + 1) % config.num_palettes}))
        for s in range(config.num_styles)
    )
    brand_styles = tuple(b % config.num_styles for b in range(config.num_brands))
    scale = 1.0 / np.sqrt(IMAGE_DIM)
    world = StyleWorld(
        config=config,
        seed=seed,
        palettes=palettes,
        style_palettes=style_palettes,
        brand_styles=brand_styles,
        style_vectors=rng.normal(0.0, 2.0 * scale, size=(config.num_styles, IMAGE_DIM)),
        color_vectors=rng.normal(0.0, scale, size=(config.num_colors, IMAGE_DIM)),
        category_vectors=rng.normal(0.0, scale, size=(len(CATEGORIES), IMAGE_DIM)),
        templates=_all_templates(),
    )
    logger.debug(f"Built style world: {config.num_styles} styles, {len(palettes)} palettes, "
                 f"{len(world.templates)} templates")
    return world


def world_from_params(params: Dict) -> StyleWorld:
    return build_world(WorldConfig(**params["config"]), int(params["seed"]))


def oracle_compatible(outfit: Outfit, world: StyleWorld, catalog: Catalog) -> bool:
    """Exact compatibility label for an outfit; unknown items raise InputError"""
    return world.compatible([catalog.get(item_id) for item_id in outfit.items])


def oracle_pair_compatible(a: str, b: str, world: StyleWorld, catalog: Catalog) -> bool:
    return world.pair_compatible(catalog.get(a), catalog.get(b))


def generate_catalog(world: StyleWorld, num_items: int, seed: int,
                     image_noise: Optional[float] = None) -> List[Item]:
    """Items covering every category; image_vec = style + color + category vectors + noise"""
    if num_items < len(CATEGORIES):
        raise ConfigurationError(f"num_items must be >= {len(CATEGORIES)} to cover every category")
    sigma = world.config.image_noise if image_noise is None else image_noise
    rng = rng_stream(seed, "catalog")
    width = len(str(num_items - 1))
    items: List[Item] = []
    for index in range(num_items):
        category = index if index < len(CATEGORIES) else int(rng.integers(len(CATEGORIES)))
        style = int(rng.integers(world.num_styles))
        palette = world.palettes[world.style_palettes[style][int(rng.integers(len(world.style_palettes[style])))]]
        color = int(rng.choice(sorted(palette)))
        home_brands = world.brands_of_style(style)
        if home_brands and rng.random() < world.config.brand_affinity:
            brand = int(rng.choice(home_brands))
        else:
            brand = int(rng.integers(world.config.num_brands))
        image = world.centroid(style, color, category)
        if sigma > 0:
            image = image + rng.normal(0.0, sigma / np.sqrt(IMAGE_DIM), size=IMAGE_DIM)
        items.append(Item(
            item_id=f"i{index:0{width}d}",
            category=category,
            brand=brand,
            color=color,
            season=int(rng.integers(len(SEASONS))),
            gender=int(rng.integers(2)),
            material=int(rng.integers(len(MATERIALS))),
            pattern=int(rng.integers(len(PATTERNS))),
            image_vec=image,
            style=style,
        ))
    logger.info(f"Generated catalog of {num_items} items")
    return items
