"""
Model configuration with per-family defaults

Two profiles exist: "full" carries the reference sizes, "desk" narrows the
widths so the whole benchmark trains on a laptop.
"""
from enum import Enum
from typing import Any, Dict, List, Literal, Optional
from pydantic import BaseModel, Field, ValidationError, model_validator

from ..catalog import CATEGORIES, DEFAULT_ATTRIBUTE_DIMS
from ..errors import ConfigurationError


class Family(str, Enum):
    SIAMESE = "siamese"
    LSTM = "lstm"
    GPT = "gpt"
    BERT = "bert"
    CTX_GPT = "ctx_gpt"
    CTX_BERT = "ctx_bert"
    TRANSFORMER = "transformer"
    S2S_LSTM = "s2s_lstm"


class ContextMode(str, Enum):
    NONE = "none"
    QUESTIONNAIRE = "questionnaire"
    ACTION_SEQUENCE = "action_sequence"


CONTEXTUAL_FAMILIES = {Family.CTX_GPT, Family.CTX_BERT}
ACTION_FAMILIES = {Family.TRANSFORMER, Family.S2S_LSTM}


class ModelConfig(BaseModel):
    family: Family
    context_mode: ContextMode = ContextMode.NONE
    model_dim: int = Field(default=128, ge=1)
    num_heads: int = Field(default=8, ge=1)
    num_layers: int = Field(default=4, ge=1)
    hidden_size: int = Field(default=512, ge=1)
    siamese_units: int = Field(default=64, ge=1)
    dropout_rate: float = Field(default=0.01, ge=0.0, lt=1.0)
    batch_size: int = Field(default=512, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    clip_norm: Optional[float] = Field(default=5.0, gt=0.0)
    use_positional_encoding: bool = False
    context_slots: int = Field(default=0, ge=0)
    max_actions: int = Field(default=20, ge=1)
    field_dim: int = Field(default=32, ge=1)
    num_style_archetypes: int = Field(default=8, ge=1)
    attribute_dims: Dict[str, int] = Field(default_factory=lambda: dict(DEFAULT_ATTRIBUTE_DIMS))
    siamese_categories: List[int] = Field(default_factory=lambda: list(range(len(CATEGORIES))))
    dtype: Literal["float64", "float32"] = "float64"

    @model_validator(mode="after")
    def _family_constraints(self):
        if self.use_positional_encoding:
            raise ValueError("outfit models are position-free; use_positional_encoding must be false")
        if self.family in (Family.GPT, Family.BERT, Family.CTX_GPT, Family.CTX_BERT, Family.TRANSFORMER):
            if self.model_dim % self.num_heads != 0:
                raise ValueError(f"model_dim {self.model_dim} not divisible by num_heads {self.num_heads}")
        if self.family in ACTION_FAMILIES and self.context_mode != ContextMode.ACTION_SEQUENCE:
            raise ValueError(f"{self.family.value} requires context_mode action_sequence")
        if self.family in CONTEXTUAL_FAMILIES and self.context_mode == ContextMode.NONE:
            raise ValueError(f"{self.family.value} requires a context_mode")
        if (self.family not in CONTEXTUAL_FAMILIES | ACTION_FAMILIES
                and self.context_mode != ContextMode.NONE):
            raise ValueError(f"{self.family.value} takes no user context")
        if self.context_slots and self.family != Family.TRANSFORMER:
            raise ValueError("context_slots only apply to the transformer")
        if set(self.attribute_dims) != set(DEFAULT_ATTRIBUTE_DIMS):
            raise ValueError(f"attribute_dims must cover {sorted(DEFAULT_ATTRIBUTE_DIMS)}")
        return self

    @property
    def contextual(self) -> bool:
        return self.context_mode != ContextMode.NONE

    def to_flat(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


_ATTENTION_FULL = dict(model_dim=128, num_heads=8, num_layers=4, dropout_rate=0.01, batch_size=512)
_ATTENTION_DESK = dict(model_dim=64, num_heads=4, num_layers=2, dropout_rate=0.01, batch_size=128)
_LSTM_FULL = dict(hidden_size=512, dropout_rate=0.3, batch_size=64)
_LSTM_DESK = dict(hidden_size=64, dropout_rate=0.3, batch_size=64)

PROFILES: Dict[str, Dict[Family, Dict[str, Any]]] = {
    "full": {
        Family.GPT: _ATTENTION_FULL,
        Family.BERT: _ATTENTION_FULL,
        Family.CTX_GPT: {**_ATTENTION_FULL, "context_mode": ContextMode.QUESTIONNAIRE},
        Family.CTX_BERT: {**_ATTENTION_FULL, "context_mode": ContextMode.QUESTIONNAIRE},
        Family.LSTM: _LSTM_FULL,
        Family.S2S_LSTM: {**_LSTM_FULL, "context_mode": ContextMode.ACTION_SEQUENCE},
        Family.SIAMESE: dict(siamese_units=64, batch_size=32, dropout_rate=0.0),
        Family.TRANSFORMER: dict(model_dim=216, num_heads=12, num_layers=2, dropout_rate=0.1, batch_size=64,
                                 context_mode=ContextMode.ACTION_SEQUENCE),
    },
    "desk": {
        Family.GPT: _ATTENTION_DESK,
        Family.BERT: _ATTENTION_DESK,
        Family.CTX_GPT: {**_ATTENTION_DESK, "context_mode": ContextMode.QUESTIONNAIRE},
        Family.CTX_BERT: {**_ATTENTION_DESK, "context_mode": ContextMode.QUESTIONNAIRE},
        Family.LSTM: _LSTM_DESK,
        Family.S2S_LSTM: {**_LSTM_DESK, "context_mode": ContextMode.ACTION_SEQUENCE},
        Family.SIAMESE: dict(siamese_units=64, batch_size=64, dropout_rate=0.0),
        Family.TRANSFORMER: dict(model_dim=64, num_heads=4, num_layers=2, dropout_rate=0.1, batch_size=64,
                                 context_mode=ContextMode.ACTION_SEQUENCE),
    },
}


def model_config(family: str, profile: str = "desk", **overrides: Any) -> ModelConfig:
    """Profile defaults for a family, updated with overrides; invalid values raise ConfigurationError"""
    try:
        family_enum = Family(family)
    except ValueError:
        raise ConfigurationError(f"Unknown model family '{family}'; choose from "
                                 f"{[f.value for f in Family]}") from None
    if profile not in PROFILES:
        raise ConfigurationError(f"Unknown profile '{profile}'; choose from {sorted(PROFILES)}")
    values = {**PROFILES[profile][family_enum], **{k: v for k, v in overrides.items() if v is not None}}
    try:
        return ModelConfig(family=family_enum, **values)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid {family} configuration: {e.errors()[0]['msg']}") from e
