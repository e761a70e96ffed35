"""In-memory implementations for testing/demo purposes."""

from .annotation_repository import InMemoryAnnotationRepository
from .corpus_repository import InMemoryCorpusRepository
from .model_repository import InMemoryModelRepository

__all__ = ["InMemoryAnnotationRepository", "InMemoryCorpusRepository", "InMemoryModelRepository"]
