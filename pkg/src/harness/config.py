"""
Experiment configuration

Experiments are flat YAML files. A top-level `include:` list names other
files (relative to the including file) that are merged first, so a family
config can extend a shared base. Keys matching ModelConfig fields become
model overrides.
"""
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Set
import logging
import yaml
from pydantic import BaseModel, Field, ValidationError, model_validator

from ..errors import ConfigurationError
from ..models.config import ACTION_FAMILIES, CONTEXTUAL_FAMILIES, Family, ModelConfig
from ..models.config import model_config as family_model_config

logger = logging.getLogger(__name__)

SPLIT_POLICIES = ("random_90_10", "time_based")
TRAINING_DATA = ("outfits", "clicks", "questionnaires")


def default_training_data(family: Family) -> str:
    if family in ACTION_FAMILIES:
        return "clicks"
    if family in CONTEXTUAL_FAMILIES:
        return "questionnaires"
    return "outfits"


class ExperimentConfig(BaseModel):
    name: str
    data_dir: Path
    family: Family
    profile: Literal["full", "desk"] = "desk"
    model: Dict[str, Any] = Field(default_factory=dict)
    training_data: Optional[Literal["outfits", "clicks", "questionnaires"]] = None
    split: Literal["random_90_10", "time_based"] = "random_90_10"
    validation_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)
    vocab_threshold: int = Field(default=8, ge=1)
    data_seed: int = Field(default=0, ge=0)
    init_seed: int = Field(default=0, ge=0)
    eval_seed: int = Field(default=0, ge=0)
    epochs: int = Field(default=10, ge=0)
    threads: int = Field(default=1, ge=1)
    batch_size: Optional[int] = Field(default=None, ge=1)
    max_train_samples: Optional[int] = Field(default=None, ge=1)
    max_eval_samples: Optional[int] = Field(default=None, ge=1)
    output_dir: Path = Path("runs")
    keep_checkpoints: int = Field(default=2, ge=1)
    fitb_cutoffs: List[int] = Field(default_factory=lambda: [1, 5, 25, 250])
    hard_negatives: bool = False
    personalized: Optional[bool] = None
    fixed_length: bool = True
    candidate_cap: int = Field(default=100, ge=1)
    validity_samples: int = Field(default=200, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _collect_model_keys(cls, values: Any) -> Any:
        if not isinstance(values, dict):
            return values
        values = dict(values)
        model = dict(values.pop("model", None) or {})
        for key in list(values):
            if key in ModelConfig.model_fields and key not in cls.model_fields:
                model[key] = values.pop(key)
        values["model"] = model
        return values

    @model_validator(mode="after")
    def _defaults(self):
        if self.training_data is None:
            self.training_data = default_training_data(self.family)
        if self.split == "time_based" and self.training_data == "outfits":
            raise ValueError("time_based split needs dated user samples, not plain outfits")
        if self.family in ACTION_FAMILIES and self.training_data != "clicks":
            raise ValueError(f"{self.family.value} trains on click samples")
        if self.family in CONTEXTUAL_FAMILIES and self.training_data == "outfits":
            raise ValueError(f"{self.family.value} needs user samples with contexts")
        if self.personalized is None:
            self.personalized = self.training_data != "outfits"
        return self

    @property
    def train_fraction(self) -> float:
        return 1.0 - self.validation_fraction

    def build_model_config(self) -> ModelConfig:
        overrides = dict(self.model)
        if self.batch_size is not None:
            overrides["batch_size"] = self.batch_size
        return family_model_config(self.family.value, self.profile, **overrides)

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.name

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
    except FileNotFoundError:
        raise ConfigurationError(f"Experiment config {path} does not exist") from None
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Experiment config {path} is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Experiment config {path} must be a mapping of keys to values")
    return data


def load_raw_config(path: Path, _seen: Optional[Set[Path]] = None) -> Dict[str, Any]:
    """Merged key/value mapping with includes resolved; later keys win"""
    path = Path(path).resolve()
    seen = set() if _seen is None else _seen
    if path in seen:
        raise ConfigurationError(f"Include cycle through {path}")
    seen = seen | {path}
    data = _read_yaml(path)
    includes = data.pop("include", None) or []
    if isinstance(includes, str):
        includes = [includes]
    merged: Dict[str, Any] = {}
    for include in includes:
        merged.update(load_raw_config(path.parent / include, seen))
    merged.update(data)
    return merged


def apply_environment(values: Dict[str, Any]) -> Dict[str, Any]:
    """Output dir and thread count set through OUTFITGEN_* variables override the file"""
    from config.settings import settings

    values = dict(values)
    if "output_dir" in settings.model_fields_set:
        values["output_dir"] = str(settings.output_dir)
    if "num_threads" in settings.model_fields_set:
        values["threads"] = settings.num_threads
    return values


def build_experiment_config(values: Dict[str, Any], source: str = "<config>") -> ExperimentConfig:
    try:
        config = ExperimentConfig(**values)
        config.build_model_config()
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigurationError(f"{source}: {location}: {error['msg']}") from e
    return config


def load_experiment_config(path: Path, overrides: Optional[Dict[str, Any]] = None,
                           use_environment: bool = True) -> ExperimentConfig:
    """Load, merge includes, apply env and explicit overrides, validate"""
    values = load_raw_config(path)
    if use_environment:
        values = apply_environment(values)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    values.setdefault("name", Path(path).stem)
    config = build_experiment_config(values, str(path))
    logger.info(f"Loaded experiment '{config.name}' ({config.family.value}, {config.split}, "
                f"{config.epochs} epochs)")
    return config
