"""Filesystem implementations (production)."""

from .annotation_repository import FileAnnotationRepository
from .corpus_repository import FileCorpusRepository
from .model_repository import FileModelRepository

__all__ = ["FileAnnotationRepository", "FileCorpusRepository", "FileModelRepository"]
