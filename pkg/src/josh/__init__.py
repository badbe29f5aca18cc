"""Taxonomy-guided hierarchical topic mining with joint spherical tree and text embeddings."""

from .config import TrainConfig
from .trainer import run

__all__ = ["TrainConfig", "run"]
__version__ = "0.1.0"
