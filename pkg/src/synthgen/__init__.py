"""
Synthgen Module

Synthetic catalogs, curated outfits, click histories and questionnaires
generated from a style world whose compatibility rule is an exact oracle.
"""
from .world import (
    SEASON_GROUPS, StyleWorld, WorldConfig, build_world, generate_catalog, oracle_compatible,
    oracle_pair_compatible, style_distance, world_from_params,
)
from .generators import (
    ItemPool, SyntheticUser, generate_click_dataset, generate_outfits, generate_questionnaire_dataset,
    make_users, remove_rare_actions, sample_outfit,
)
from .negatives import negative_sample, replace_one
from .baseline import LogisticPairBaseline, PairDataset, build_pair_dataset, sanity_floor
from .dataset import GeneratorConfig, build_manifest, generate_dataset, world_for

__all__ = [
    "SEASON_GROUPS", "StyleWorld", "WorldConfig", "build_world", "generate_catalog", "oracle_compatible",
    "oracle_pair_compatible", "style_distance", "world_from_params",
    "ItemPool", "SyntheticUser", "generate_click_dataset", "generate_outfits",
    "generate_questionnaire_dataset", "make_users", "remove_rare_actions", "sample_outfit",
    "negative_sample", "replace_one",
    "LogisticPairBaseline", "PairDataset", "build_pair_dataset", "sanity_floor",
    "GeneratorConfig", "build_manifest", "generate_dataset", "world_for",
]
