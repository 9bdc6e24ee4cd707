"""
Line-delimited dataset files

Every file starts with a header record {"schema": ..., "version": ...}
followed by one JSON object per line. Three kinds exist: catalog (items),
outfits, and users (user contexts with linked outfit labels).
"""
from pathlib import Path
from typing import Iterable, List, Literal, Optional, Type
import json
import logging
import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..errors import DataError
from .types import (
    IMAGE_DIM, Action, ActionSequence, EventType, Item, Outfit, OutfitSource, Questionnaire, UserSample,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class Header(BaseModel):
    schema_name: str = Field(alias="schema")
    version: int


class ItemRecord(BaseModel):
    item_id: str
    category: int
    brand: int
    color: int
    season: int
    gender: int
    material: int
    pattern: int
    image_vec: List[float] = Field(min_length=IMAGE_DIM, max_length=IMAGE_DIM)
    style: Optional[int] = None

    @classmethod
    def from_item(cls, item: Item) -> "ItemRecord":
        return cls(item_id=item.item_id, category=item.category, brand=item.brand, color=item.color,
                   season=item.season, gender=item.gender, material=item.material, pattern=item.pattern,
                   image_vec=[float(v) for v in item.image_vec], style=item.style)

    def to_item(self) -> Item:
        return Item(item_id=self.item_id, category=self.category, brand=self.brand, color=self.color,
                    season=self.season, gender=self.gender, material=self.material, pattern=self.pattern,
                    image_vec=np.array(self.image_vec, dtype=np.float64), style=self.style)


class OutfitRecord(BaseModel):
    outfit_id: Optional[str] = None
    items: List[str] = Field(min_length=1)
    source: Optional[OutfitSource] = None

    @classmethod
    def from_outfit(cls, outfit: Outfit) -> "OutfitRecord":
        return cls(outfit_id=outfit.outfit_id, items=list(outfit.items), source=outfit.source)

    def to_outfit(self) -> Outfit:
        return Outfit(tuple(self.items), source=self.source, outfit_id=self.outfit_id)


class ActionRecord(BaseModel):
    item_id: str
    event: EventType
    age_days: int = Field(ge=0)


class QuestionnaireRecord(BaseModel):
    favorite_brands: List[int]
    favorite_colors: List[int]
    nogo_categories: List[int]
    gender: int
    height_band: int
    weight_band: int
    occasion: int
    price_band: int
    shoe_size: int
    hair_color: int
    style_archetype: int


class UserRecord(BaseModel):
    sample_id: str
    user_id: str
    context_kind: Literal["actions", "questionnaire"]
    actions: Optional[List[ActionRecord]] = None
    questionnaire: Optional[QuestionnaireRecord] = None
    outfit: OutfitRecord
    anchor: Optional[str] = None
    day: Optional[int] = None
    kept_items: List[str] = Field(default_factory=list)

    @classmethod
    def from_sample(cls, sample: UserSample) -> "UserRecord":
        payload = dict(sample_id=sample.sample_id, user_id=sample.user_id,
                       outfit=OutfitRecord.from_outfit(sample.outfit), anchor=sample.anchor,
                       day=sample.day, kept_items=list(sample.kept_items))
        if isinstance(sample.context, ActionSequence):
            payload["context_kind"] = "actions"
            payload["actions"] = [ActionRecord(item_id=a.item_id, event=a.event, age_days=a.age_days)
                                  for a in sample.context.actions]
        else:
            payload["context_kind"] = "questionnaire"
            fields = {name: getattr(sample.context, name) for name in QuestionnaireRecord.model_fields}
            payload["questionnaire"] = QuestionnaireRecord(**{
                k: list(v) if isinstance(v, tuple) else v for k, v in fields.items()})
        return cls(**payload)

    def to_sample(self) -> UserSample:
        if self.context_kind == "actions":
            if not self.actions:
                raise DataError(f"User record {self.sample_id} has no actions")
            context = ActionSequence(tuple(Action(a.item_id, a.event, a.age_days) for a in self.actions))
        else:
            if self.questionnaire is None:
                raise DataError(f"User record {self.sample_id} has no questionnaire")
            q = self.questionnaire.model_dump()
            context = Questionnaire(**{k: tuple(v) if isinstance(v, list) else v for k, v in q.items()})
        return UserSample(sample_id=self.sample_id, user_id=self.user_id, context=context,
                          outfit=self.outfit.to_outfit(), anchor=self.anchor, day=self.day,
                          kept_items=tuple(self.kept_items))


RECORD_TYPES = {"catalog": ItemRecord, "outfits": OutfitRecord, "users": UserRecord}
FileKind = Literal["catalog", "outfits", "users"]


def write_records(path: Path, kind: FileKind, records: Iterable[BaseModel]) -> int:
    """Write header + records; returns the number of records"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps({"schema": f"outfitgen.{kind}", "version": SCHEMA_VERSION}) + "\n")
        for record in records:
            handle.write(record.model_dump_json(exclude_none=True) + "\n")
            count += 1
    logger.debug(f"Wrote {count} {kind} records to {path}")
    return count


def read_records(path: Path, kind: FileKind) -> List[BaseModel]:
    """Read and validate a dataset file; schema problems raise DataError"""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Dataset file not found: {path}")
    record_type: Type[BaseModel] = RECORD_TYPES[kind]
    records: List[BaseModel] = []
    with path.open("r", encoding="utf-8") as handle:
        first = handle.readline()
        try:
            header = Header.model_validate_json(first)
        except ValidationError as e:
            raise DataError(f"{path}: missing or malformed header line") from e
        if header.schema_name != f"outfitgen.{kind}":
            raise DataError(f"{path}: expected schema outfitgen.{kind}, found {header.schema_name}")
        if header.version != SCHEMA_VERSION:
            raise DataError(f"{path}: unsupported schema version {header.version}")
        for line_number, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            try:
                records.append(record_type.model_validate_json(line))
            except ValidationError as e:
                raise DataError(f"{path}:{line_number}: {e.errors()[0]['msg']}") from e
    return records


def write_items(path: Path, items: Iterable[Item]) -> int:
    return write_records(path, "catalog", (ItemRecord.from_item(item) for item in items))


def read_items(path: Path) -> List[Item]:
    return [record.to_item() for record in read_records(path, "catalog")]


def write_outfits(path: Path, outfits: Iterable[Outfit]) -> int:
    return write_records(path, "outfits", (OutfitRecord.from_outfit(o) for o in outfits))


def read_outfits(path: Path) -> List[Outfit]:
    return [record.to_outfit() for record in read_records(path, "outfits")]


def write_users(path: Path, samples: Iterable[UserSample]) -> int:
    return write_records(path, "users", (UserRecord.from_sample(s) for s in samples))


def read_users(path: Path) -> List[UserSample]:
    return [record.to_sample() for record in read_records(path, "users")]
