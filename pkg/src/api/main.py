"""
FastAPI Main Application

Serves the frozen models of finished runs: listing, sampled or beam-searched
generation, and deterministic personalized recommendation.
"""
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from contextlib import asynccontextmanager
from typing import Optional
import logging
import uvicorn

from config.settings import settings
from src.errors import AnchorNotFoundError, InputError, OutfitGenError, UsageError
from src.generation import GenerationRequest
from .models import (
    GenerateRequest, HealthResponse, ModelInfo, ModelsResponse, OutfitsResponse, RecommendRequest,
)
from .services import OutfitService, UnknownModelError, context_from_payload

logger = logging.getLogger(__name__)

# Global service instance
outfit_service: Optional[OutfitService] = None


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan management"""
    global outfit_service

    logger.info(f"Loading runs from {settings.serve_run_dir}...")
    try:
        outfit_service = OutfitService(settings.serve_run_dir)
        outfit_service.initialize()
    except Exception as e:
        logger.error(f"Failed to start application: {str(e)}")
        outfit_service = None

    yield

    logger.info("Shutting down outfit service...")
    if outfit_service:
        outfit_service.cleanup()


# Create FastAPI app
app = FastAPI(
    title="outfitgen",
    description="Outfit generation and personalized recommendation from trained benchmark runs",
    version="1.0.0",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _service() -> OutfitService:
    if not outfit_service or not outfit_service.initialized:
        raise HTTPException(status_code=503, detail="No models loaded")
    return outfit_service


def _http_error(error: OutfitGenError) -> HTTPException:
    if isinstance(error, (UnknownModelError, AnchorNotFoundError)):
        return HTTPException(status_code=404, detail=str(error))
    if isinstance(error, (InputError, UsageError)):
        return HTTPException(status_code=422, detail=str(error))
    logger.error(f"Request failed: {type(error).__name__}: {error}")
    return HTTPException(status_code=500, detail=str(error))


@app.get("/health", response_model=HealthResponse)
async def health_check():
    """Health check endpoint"""
    loaded = len(outfit_service.runs) if outfit_service else 0
    return HealthResponse(
        status="healthy" if loaded else "unhealthy",
        message="outfitgen is running" if loaded else "No models loaded",
        models_loaded=loaded,
        run_dir=str(settings.serve_run_dir)
    )


@app.get("/models", response_model=ModelsResponse)
async def list_models():
    """Loaded runs"""
    models = [ModelInfo(**info) for info in _service().list_models()]
    return ModelsResponse(models=models, total_count=len(models))


@app.post("/generate", response_model=OutfitsResponse)
async def generate(request: GenerateRequest):
    """Sample or beam-search outfits from one model"""
    service = _service()
    generation = GenerationRequest(
        anchor=request.anchor, context=context_from_payload(request.context), count=request.count,
        beam_width=request.beam_width, temperature=request.temperature, gibbs_iters=request.gibbs_iters,
        fixed_length=request.fixed_length, seed=request.seed
    )
    try:
        return OutfitsResponse(**await service.generate(request.model_name, generation))
    except OutfitGenError as e:
        raise _http_error(e)


@app.post("/recommend", response_model=OutfitsResponse)
async def recommend(request: RecommendRequest):
    """One deterministic outfit around the anchor for this user"""
    service = _service()
    try:
        result = await service.recommend(request.model_name, request.anchor,
                                         context_from_payload(request.context), request.length, request.seed)
        return OutfitsResponse(**result)
    except OutfitGenError as e:
        raise _http_error(e)


if __name__ == "__main__":
    uvicorn.run(
        "src.api.main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=False,
        log_level=settings.log_level.lower()
    )
