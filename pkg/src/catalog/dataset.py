"""
Dataset directory bundle

A dataset directory holds catalog.jsonl, outfits.jsonl (non-personalized
curated outfits), clicks.jsonl and questionnaires.jsonl (user samples), plus
the generator's manifest.json.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List
import hashlib
import json
import logging

from ..errors import DataError
from .catalog import Catalog
from .io import read_items, read_outfits, read_users, write_items, write_outfits, write_users
from .types import CatalogSchema, Outfit, UserSample

logger = logging.getLogger(__name__)

CATALOG_FILE = "catalog.jsonl"
OUTFITS_FILE = "outfits.jsonl"
CLICKS_FILE = "clicks.jsonl"
QUESTIONNAIRES_FILE = "questionnaires.jsonl"
MANIFEST_FILE = "manifest.json"
DATA_FILES = (CATALOG_FILE, OUTFITS_FILE, CLICKS_FILE, QUESTIONNAIRES_FILE)


@dataclass
class OutfitDataset:
    catalog: Catalog
    outfits: List[Outfit]
    click_samples: List[UserSample] = field(default_factory=list)
    questionnaire_samples: List[UserSample] = field(default_factory=list)
    manifest: Dict = field(default_factory=dict)
    dataset_id: str = ""

    def save(self, directory: Path) -> str:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_items(directory / CATALOG_FILE, self.catalog.items)
        write_outfits(directory / OUTFITS_FILE, self.outfits)
        write_users(directory / CLICKS_FILE, self.click_samples)
        write_users(directory / QUESTIONNAIRES_FILE, self.questionnaire_samples)
        self.dataset_id = content_hash(directory)
        self.manifest["dataset_id"] = self.dataset_id
        (directory / MANIFEST_FILE).write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")
        logger.info(f"Saved dataset {self.dataset_id[:12]} to {directory}")
        return self.dataset_id


def content_hash(directory: Path) -> str:
    """sha256 over the data files in a fixed order"""
    digest = hashlib.sha256()
    for name in DATA_FILES:
        path = Path(directory) / name
        digest.update(name.encode("utf-8"))
        if path.exists():
            digest.update(path.read_bytes())
    return digest.hexdigest()


def load_dataset(directory: Path) -> OutfitDataset:
    directory = Path(directory)
    if not (directory / CATALOG_FILE).exists():
        raise DataError(f"{directory} is not a dataset directory (no {CATALOG_FILE})")
    manifest: Dict = {}
    if (directory / MANIFEST_FILE).exists():
        manifest = json.loads((directory / MANIFEST_FILE).read_text())
    schema = CatalogSchema(**manifest.get("schema", {})) if "schema" in manifest else CatalogSchema()
    catalog = Catalog(read_items(directory / CATALOG_FILE), schema)
    outfits = read_outfits(directory / OUTFITS_FILE) if (directory / OUTFITS_FILE).exists() else []
    clicks = read_users(directory / CLICKS_FILE) if (directory / CLICKS_FILE).exists() else []
    questionnaires = (read_users(directory / QUESTIONNAIRES_FILE)
                      if (directory / QUESTIONNAIRES_FILE).exists() else [])
    for outfit in outfits:
        for item_id in outfit.items:
            if item_id not in catalog:
                raise DataError(f"Outfit {outfit.outfit_id} references unknown item {item_id}")
    dataset = OutfitDataset(catalog, outfits, clicks, questionnaires, manifest, content_hash(directory))
    logger.info(f"Loaded dataset {dataset.dataset_id[:12]}: {len(catalog)} items, {len(outfits)} outfits, "
                f"{len(clicks)} click samples, {len(questionnaires)} questionnaire samples")
    return dataset
