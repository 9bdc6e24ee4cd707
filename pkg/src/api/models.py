"""
Pydantic Models for the FastAPI Application

Request and response bodies for the serving endpoints. User contexts reuse
the dataset record types so the API accepts exactly what the users files hold.
"""
from typing import List, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..catalog.io import ActionRecord, QuestionnaireRecord


# Request Models
class UserContextPayload(BaseModel):
    """Either an action history or a questionnaire, never both"""
    actions: Optional[List[ActionRecord]] = Field(None, description="Past interactions, oldest first")
    questionnaire: Optional[QuestionnaireRecord] = Field(None, description="Stylist questionnaire answers")

    @model_validator(mode="after")
    def _one_context(self):
        if self.actions is not None and self.questionnaire is not None:
            raise ValueError("Give either actions or a questionnaire, not both")
        if self.actions is not None and not self.actions:
            raise ValueError("actions must not be empty")
        return self


class GenerateRequest(BaseModel):
    """Request for sampled or beam-searched outfits"""
    model_config = ConfigDict(protected_namespaces=())

    model_name: str = Field(..., description="Run name as listed by /models")
    anchor: Optional[str] = Field(None, description="Item id to build the outfit around")
    context: Optional[UserContextPayload] = Field(None, description="User context for contextual models")
    count: int = Field(1, ge=1, le=50, description="Number of sampled outfits")
    beam_width: Optional[int] = Field(None, ge=1, le=64, description="Beam search with this width")
    temperature: float = Field(1.0, ge=0.0, description="Sampling temperature; 0 is argmax")
    gibbs_iters: Optional[int] = Field(None, ge=1, description="Gibbs iterations for masked models")
    fixed_length: Optional[int] = Field(None, ge=2, le=7, description="Exact outfit length")
    seed: int = Field(0, description="Sampling seed")


class RecommendRequest(BaseModel):
    """Request for one deterministic personalized outfit"""
    model_config = ConfigDict(protected_namespaces=())

    model_name: str = Field(..., description="Run name as listed by /models")
    anchor: str = Field(..., description="Item the user is looking at")
    context: Optional[UserContextPayload] = Field(None, description="User context")
    length: Optional[int] = Field(None, ge=2, le=7, description="Exact outfit length")
    seed: int = Field(0, description="Seed for Gibbs chains")


# Response Models
class OutfitInfo(BaseModel):
    """One outfit with its item categories"""
    items: List[str]
    categories: List[str]


class OutfitsResponse(BaseModel):
    """Outfits produced for a request"""
    model_config = ConfigDict(protected_namespaces=())

    model_name: str
    family: str
    outfits: List[OutfitInfo]


class ModelInfo(BaseModel):
    """A loaded run"""
    name: str
    family: str
    contextual: bool
    dataset_id: str
    vocab_size: int
    epochs_completed: int


class ModelsResponse(BaseModel):
    """Every loaded run"""
    models: List[ModelInfo]
    total_count: int


class HealthResponse(BaseModel):
    """Health check response"""
    status: str
    message: str
    models_loaded: int
    run_dir: str
