"""
Catalog Module

Items, outfits, user contexts, the item vocabulary and featurization, and
the line-delimited dataset files.
"""
from .types import (
    ACCESSORY, ATTRIBUTES, CATEGORIES, DEFAULT_ATTRIBUTE_DIMS, EVENT_TYPES, GENDERS, IMAGE_DIM,
    MATERIALS, PATTERNS, QUESTIONNAIRE_BANDS, SEASONS,
    Action, ActionSequence, CatalogSchema, EventType, Item, Outfit, OutfitSource, Questionnaire,
    UserContext, UserSample,
)
from .catalog import Catalog, canonical_order, category_rank, MAX_OUTFIT_LENGTH, MIN_OUTFIT_LENGTH
from .vocabulary import MASK, NUM_SPECIAL, STOP, UNK, Vocabulary, build_vocabulary
from .features import AttributeEmbeddings, featurize, featurize_codes, featurize_rows
from .dataset import OutfitDataset, content_hash, load_dataset

__all__ = [
    "ACCESSORY", "ATTRIBUTES", "CATEGORIES", "DEFAULT_ATTRIBUTE_DIMS", "EVENT_TYPES", "GENDERS",
    "IMAGE_DIM", "MATERIALS", "PATTERNS", "QUESTIONNAIRE_BANDS", "SEASONS",
    "Action", "ActionSequence", "CatalogSchema", "EventType", "Item", "Outfit", "OutfitSource",
    "Questionnaire", "UserContext", "UserSample",
    "Catalog", "canonical_order", "category_rank", "MAX_OUTFIT_LENGTH", "MIN_OUTFIT_LENGTH",
    "MASK", "NUM_SPECIAL", "STOP", "UNK", "Vocabulary", "build_vocabulary",
    "AttributeEmbeddings", "featurize", "featurize_codes", "featurize_rows",
    "OutfitDataset", "content_hash", "load_dataset",
]
