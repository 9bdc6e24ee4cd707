"""
API Module

FastAPI application serving the frozen models of finished runs.
"""
from .main import app
from .services import OutfitService, UnknownModelError

__all__ = ["app", "OutfitService", "UnknownModelError"]
