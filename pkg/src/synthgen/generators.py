"""
Synthetic users, curated outfits, click histories and questionnaires

Outfits come from rejection sampling: a template is drawn first, slots are
filled from a proposal restricted by gender, season group, style window and
palette, and the draw is kept only when the oracle accepts it.
"""
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple
import logging
import numpy as np

from ..catalog import (
    ACCESSORY, EVENT_TYPES, QUESTIONNAIRE_BANDS, Action, ActionSequence, Catalog, Outfit,
    OutfitSource, Questionnaire, UserSample,
)
from ..nn import rng_stream
from .world import CAT, SEASON_GROUPS, StyleWorld

logger = logging.getLogger(__name__)

MAX_RETRIES = 1000
MIN_ACTIONS = 5
MIN_CLICK_TARGET_CORE = 4
RARE_ACTION_THRESHOLD = 3
MAX_ACTION_AGE = 60
EVENT_PROBABILITIES = (0.7, 0.2, 0.1)


@dataclass(frozen=True)
class SyntheticUser:
    user_id: str
    style: int
    palette: int
    colors: Tuple[int, ...]
    brands: Tuple[int, ...]
    gender: int
    season_group: int
    occasion: int


def make_users(world: StyleWorld, num_users: int, seed: int, stream: str = "users") -> List[SyntheticUser]:
    rng = rng_stream(seed, stream)
    width = len(str(max(num_users - 1, 0)))
    users = []
    for index in range(num_users):
        style = int(rng.integers(world.num_styles))
        palette = int(rng.choice(world.style_palettes[style]))
        colors = tuple(sorted(int(c) for c in rng.choice(sorted(world.palettes[palette]),
                                                         size=min(2, len(world.palettes[palette])),
                                                         replace=False)))
        home = world.brands_of_style(style)
        brands = tuple(sorted(int(b) for b in rng.choice(home, size=min(3, len(home)), replace=False))) if home else ()
        users.append(SyntheticUser(
            user_id=f"u{index:0{width}d}",
            style=style,
            palette=palette,
            colors=colors,
            brands=brands,
            gender=int(rng.integers(2)),
            season_group=int(rng.integers(2)),
            occasion=int(rng.integers(QUESTIONNAIRE_BANDS["occasion"])),
        ))
    return users


class ItemPool:
    """Column view of the catalog for fast proposal filtering"""

    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self.ids = [item.item_id for item in catalog.items]
        self.category = np.array([item.category for item in catalog.items])
        self.gender = np.array([item.gender for item in catalog.items])
        self.group = np.array([SEASON_GROUPS[item.season] for item in catalog.items])
        self.style = np.array([-1 if item.style is None else item.style for item in catalog.items])
        self.color = np.array([item.color for item in catalog.items])
        self.brand = np.array([item.brand for item in catalog.items])

    def select(self, category: int, gender: int, group: int, styles: Sequence[int],
               colors: Sequence[int]) -> np.ndarray:
        mask = ((self.category == category) & (self.gender == gender) & (self.group == group)
                & np.isin(self.style, styles) & np.isin(self.color, colors))
        return np.flatnonzero(mask)

    def consistent_with(self, user: SyntheticUser) -> np.ndarray:
        """Items a user with these preferences would plausibly click"""
        base = (self.style == user.style) & (self.gender == user.gender)
        liked = base & (np.isin(self.color, user.colors) | np.isin(self.brand, user.brands))
        rows = np.flatnonzero(liked)
        return rows if rows.size else np.flatnonzero(base)


def _propose(world: StyleWorld, pool: ItemPool, template: Sequence[int], rng: np.random.Generator,
             user: Optional[SyntheticUser], noise: float) -> Optional[List[str]]:
    personal = user is not None and rng.random() >= noise
    if personal:
        styles = [user.style]
        gender, group, palette = user.gender, user.season_group, user.palette
    else:
        style = int(rng.integers(world.num_styles))
        styles = [style, (style + int(rng.choice((-1, 1)))) % world.num_styles]
        gender, group = int(rng.integers(2)), int(rng.integers(2))
        palette = int(rng.choice(world.style_palettes[style]))
    colors = sorted(world.palettes[palette])
    chosen: List[int] = []
    for category in template:
        rows = pool.select(category, gender, group, styles, colors)
        rows = rows[~np.isin(rows, chosen)]
        if personal and rows.size:
            liked = rows[np.isin(pool.color[rows], user.colors) | np.isin(pool.brand[rows], user.brands)]
            if liked.size:
                rows = liked
        if not rows.size:
            return None
        chosen.append(int(rng.choice(rows)))
    return [pool.ids[row] for row in chosen]


def sample_outfit(world: StyleWorld, pool: ItemPool, rng: np.random.Generator, mean_length: float,
                  user: Optional[SyntheticUser] = None, noise: float = 0.1, min_core: int = 0,
                  excluded_categories: Sequence[int] = (), outfit_id: Optional[str] = None) -> Optional[Outfit]:
    """One oracle-compatible outfit, or None when the drawn template is infeasible"""
    template = world.sample_template(rng, mean_length, min_core)
    for _ in range(MAX_RETRIES):
        if not any(c in excluded_categories for c in template):
            break
        template = world.sample_template(rng, mean_length, min_core)
    for _ in range(MAX_RETRIES):
        proposal = _propose(world, pool, template, rng, user, noise)
        if proposal is not None and world.compatible([pool.catalog.get(i) for i in proposal]):
            return Outfit(tuple(proposal), source=OutfitSource.CURATED, outfit_id=outfit_id)
    logger.warning(f"Template {template} infeasible after {MAX_RETRIES} retries; skipping outfit")
    return None


def generate_outfits(world: StyleWorld, catalog: Catalog, num_outfits: int, seed: int,
                     user: Optional[SyntheticUser] = None, mean_length: float = 4.7,
                     noise: float = 0.1, id_prefix: str = "o") -> List[Outfit]:
    """Oracle-compatible curated outfits; infeasible draws are skipped, never emitted"""
    rng = rng_stream(seed, "outfits")
    pool = ItemPool(catalog)
    width = len(str(max(num_outfits - 1, 0)))
    outfits = []
    for index in range(num_outfits):
        outfit = sample_outfit(world, pool, rng, mean_length, user, noise,
                               outfit_id=f"{id_prefix}{index:0{width}d}")
        if outfit is not None:
            outfits.append(outfit)
    if len(outfits) < num_outfits:
        logger.warning(f"Generated {len(outfits)} of {num_outfits} requested outfits")
    return outfits


def _run_shards(task: Callable[[int, range], List], num_samples: int, num_shards: int,
                max_workers: int) -> List:
    """Split [0, num_samples) into contiguous shards and merge results in shard order"""
    num_shards = max(1, min(num_shards, max(num_samples, 1)))
    bounds = np.linspace(0, num_samples, num_shards + 1).astype(int)
    ranges = [range(bounds[i], bounds[i + 1]) for i in range(num_shards)]
    if max_workers <= 1 or num_shards == 1:
        parts = [task(i, r) for i, r in enumerate(ranges)]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            parts = list(executor.map(task, range(num_shards), ranges))
    return [sample for part in parts for sample in part]


def _click_actions(pool: ItemPool, user: SyntheticUser, rng: np.random.Generator,
                   noise: float) -> ActionSequence:
    liked = pool.consistent_with(user)
    count = MIN_ACTIONS + int(rng.poisson(4))
    ages = sorted((int(a) for a in rng.integers(0, MAX_ACTION_AGE, size=count)), reverse=True)
    actions = []
    for age in ages:
        if rng.random() >= noise and liked.size:
            row = int(rng.choice(liked))
        else:
            row = int(rng.integers(len(pool.ids)))
        event = EVENT_TYPES[int(rng.choice(len(EVENT_TYPES), p=EVENT_PROBABILITIES))]
        actions.append(Action(pool.ids[row], event, age))
    return ActionSequence(tuple(actions))


def generate_click_dataset(world: StyleWorld, catalog: Catalog, num_samples: int, seed: int,
                           users: Optional[List[SyntheticUser]] = None, noise: float = 0.1,
                           mean_length: float = 4.7, num_shards: int = 1,
                           max_workers: int = 1) -> List[UserSample]:
    """(action sequence, target outfit) pairs drawn from shared user preferences

    Shard i draws from its own stream seeded with seed + i. Items clicked fewer
    than three times over the whole dataset are removed from the histories, and
    samples left with fewer than five actions are dropped.
    """
    users = users or make_users(world, max(1, num_samples // 2), seed)
    pool = ItemPool(catalog)
    width = len(str(max(num_samples - 1, 0)))

    def shard(shard_index: int, indices: range) -> List[UserSample]:
        rng = rng_stream(seed + shard_index, "clicks")
        samples = []
        for index in indices:
            user = users[int(rng.integers(len(users)))]
            target = sample_outfit(world, pool, rng, mean_length, user, noise,
                                   min_core=MIN_CLICK_TARGET_CORE, outfit_id=f"c{index:0{width}d}")
            if target is None:
                continue
            core = [i for i in target.items if catalog.category_of(i) != ACCESSORY]
            samples.append(UserSample(
                sample_id=f"c{index:0{width}d}",
                user_id=user.user_id,
                context=_click_actions(pool, user, rng, noise),
                outfit=target,
                anchor=core[int(rng.integers(len(core)))],
                day=int(rng.integers(0, 30)),
            ))
        return samples

    samples = _run_shards(shard, num_samples, num_shards, max_workers)
    return remove_rare_actions(samples)


def remove_rare_actions(samples: List[UserSample], threshold: int = RARE_ACTION_THRESHOLD,
                        min_actions: int = MIN_ACTIONS) -> List[UserSample]:
    counts = Counter(a.item_id for s in samples for a in s.context.actions)
    kept: List[UserSample] = []
    removed_actions = 0
    for sample in samples:
        actions = tuple(a for a in sample.context.actions if counts[a.item_id] >= threshold)
        removed_actions += len(sample.context.actions) - len(actions)
        if len(actions) >= min_actions:
            kept.append(UserSample(sample.sample_id, sample.user_id, ActionSequence(actions), sample.outfit,
                                   sample.anchor, sample.day, sample.kept_items))
    if removed_actions or len(kept) < len(samples):
        logger.warning(f"Removed {removed_actions} actions on rare items; "
                       f"dropped {len(samples) - len(kept)} samples with fewer than {min_actions} actions")
    return kept


def questionnaire_for(user: SyntheticUser, rng: np.random.Generator) -> Questionnaire:
    optional = [CAT["jacket"], CAT["sweater"], CAT["accessory"]]
    nogo = tuple(sorted(c for c in optional if rng.random() < 0.15))
    return Questionnaire(
        favorite_brands=user.brands,
        favorite_colors=user.colors,
        nogo_categories=nogo,
        gender=user.gender,
        height_band=int(rng.integers(QUESTIONNAIRE_BANDS["height_band"])),
        weight_band=int(rng.integers(QUESTIONNAIRE_BANDS["weight_band"])),
        occasion=user.occasion,
        price_band=int(rng.integers(QUESTIONNAIRE_BANDS["price_band"])),
        shoe_size=int(rng.integers(QUESTIONNAIRE_BANDS["shoe_size"])),
        hair_color=int(rng.integers(QUESTIONNAIRE_BANDS["hair_color"])),
        style_archetype=user.style,
    )


def generate_questionnaire_dataset(world: StyleWorld, catalog: Catalog, num_users: int, seed: int,
                                   outfits_per_user: int = 2, mean_length: float = 4.96,
                                   noise: float = 0.1, keep_liked: float = 0.8, keep_other: float = 0.2,
                                   num_shards: int = 1, max_workers: int = 1) -> List[UserSample]:
    """Stylist boxes: each user answers a questionnaire and receives outfits_per_user outfits

    Items matching the user's favorite brands or colors are kept with
    probability keep_liked, the rest with keep_other.
    """
    users = make_users(world, num_users, seed, stream="questionnaire-users")
    pool = ItemPool(catalog)

    def shard(shard_index: int, indices: range) -> List[UserSample]:
        rng = rng_stream(seed + shard_index, "questionnaires")
        samples = []
        for index in indices:
            user = users[index]
            questionnaire = questionnaire_for(user, rng)
            for box in range(outfits_per_user):
                sample_id = f"{user.user_id}-{box}"
                outfit = sample_outfit(world, pool, rng, mean_length, user, noise,
                                       excluded_categories=questionnaire.nogo_categories,
                                       outfit_id=f"s{sample_id}")
                if outfit is None:
                    continue
                kept = []
                for item_id in outfit.items:
                    item = catalog.get(item_id)
                    liked = item.brand in user.brands or item.color in user.colors
                    if rng.random() < (keep_liked if liked else keep_other):
                        kept.append(item_id)
                samples.append(UserSample(sample_id, user.user_id, questionnaire, outfit,
                                          kept_items=tuple(kept)))
        return samples

    return _run_shards(shard, num_users, num_shards, max_workers)
