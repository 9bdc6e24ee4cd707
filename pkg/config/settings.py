"""
Process-level settings for outfitgen
"""
from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
from pathlib import Path


class Settings(BaseSettings):
    """Application settings loaded from OUTFITGEN_* environment variables and .env"""

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", env_prefix="OUTFITGEN_",
                                      extra="ignore")

    # Runs and data
    output_dir: Path = Field(default=Path("runs"))
    data_dir: Path = Field(default=Path("data") / "synthetic")
    num_threads: int = Field(default=1, ge=1)

    # Logging
    log_level: str = Field(default="INFO")
    log_file: Optional[Path] = Field(default=None)

    # API Configuration
    api_host: str = Field(default="0.0.0.0")
    api_port: int = Field(default=8000)
    serve_run_dir: Path = Field(default=Path("runs"))

    # Project paths
    project_root: Path = Field(default_factory=lambda: Path(__file__).parent.parent)
    experiments_path: Path = Field(default_factory=lambda: Path(__file__).parent.parent / "data" / "experiments")


# Global settings instance
settings = Settings()
