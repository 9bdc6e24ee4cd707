"""
End-to-end synthetic dataset generation with a manifest
"""
from typing import Any, Dict, Optional
import logging
from pydantic import BaseModel, Field

from ..catalog import Catalog, OutfitDataset
from ..utils.performance import monitor_operation
from .generators import generate_click_dataset, generate_outfits, generate_questionnaire_dataset, make_users
from .world import StyleWorld, WorldConfig, build_world, generate_catalog, world_from_params

logger = logging.getLogger(__name__)


class GeneratorConfig(BaseModel):
    """Desk-scale defaults: 5k items, 20k outfits, 10k users"""
    seed: int = 0
    num_items: int = Field(default=5000, ge=7)
    num_outfits: int = Field(default=20000, ge=0)
    num_users: int = Field(default=10000, ge=1)
    num_click_samples: int = Field(default=10000, ge=0)
    num_questionnaire_users: int = Field(default=2000, ge=0)
    outfits_per_user: int = Field(default=2, ge=1)
    mean_length: float = Field(default=4.7, ge=2.0, le=6.7)
    stylist_mean_length: float = Field(default=4.96, ge=2.0, le=6.7)
    noise: float = Field(default=0.1, ge=0.0, le=1.0)
    num_shards: int = Field(default=4, ge=1)
    world: WorldConfig = Field(default_factory=WorldConfig)


def generate_dataset(config: GeneratorConfig, max_workers: int = 1) -> OutfitDataset:
    with monitor_operation("generate_dataset", {"seed": config.seed}):
        world = build_world(config.world, config.seed)
        catalog = Catalog(generate_catalog(world, config.num_items, config.seed), world.schema)
        outfits = generate_outfits(world, catalog, config.num_outfits, config.seed,
                                   mean_length=config.mean_length, noise=config.noise)
        users = make_users(world, config.num_users, config.seed)
        clicks = generate_click_dataset(world, catalog, config.num_click_samples, config.seed, users=users,
                                        noise=config.noise, mean_length=config.mean_length,
                                        num_shards=config.num_shards, max_workers=max_workers)
        questionnaires = generate_questionnaire_dataset(
            world, catalog, config.num_questionnaire_users, config.seed,
            outfits_per_user=config.outfits_per_user, mean_length=config.stylist_mean_length,
            noise=config.noise, num_shards=config.num_shards, max_workers=max_workers)
    manifest = build_manifest(config, world, catalog, outfits, clicks, questionnaires)
    return OutfitDataset(catalog, outfits, clicks, questionnaires, manifest)


def build_manifest(config: GeneratorConfig, world: StyleWorld, catalog: Catalog, outfits, clicks,
                   questionnaires) -> Dict[str, Any]:
    lengths = [len(o) for o in outfits]
    return {
        "generator": config.model_dump(),
        "world": world.to_params(),
        "schema": {"num_brands": world.config.num_brands, "num_colors": world.config.num_colors},
        "counts": {
            "items": len(catalog),
            "outfits": len(outfits),
            "click_samples": len(clicks),
            "questionnaire_samples": len(questionnaires),
            "distinct_click_items": len({a.item_id for s in clicks for a in s.context.actions}),
            "distinct_click_outfits": len({s.outfit for s in clicks}),
        },
        "mean_outfit_length": (sum(lengths) / len(lengths)) if lengths else 0.0,
    }


def world_for(dataset: OutfitDataset) -> Optional[StyleWorld]:
    """Rebuild the generating world from a dataset manifest, if it carries one"""
    if "world" not in dataset.manifest:
        return None
    return world_from_params(dataset.manifest["world"])
