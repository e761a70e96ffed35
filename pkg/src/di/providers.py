"""Providers for dependency injection."""

from abc import ABC, abstractmethod
from typing import Generic, TypeVar

# Repository implementations
from src.persistances.repositories.implementations import (
    FileAnnotationRepository,
    FileCorpusRepository,
    FileModelRepository,
)
from src.persistances.repositories.implementations.memory import (
    InMemoryAnnotationRepository,
    InMemoryCorpusRepository,
    InMemoryModelRepository,
)

# Repository interfaces
from src.persistances.repositories.interfaces import (
    AnnotationRepositoryInterface,
    CorpusRepositoryInterface,
    ModelRepositoryInterface,
)

# Service imports
from src.services.workflow_service import WorkflowService

T = TypeVar("T")


class Provider(ABC, Generic[T]):
    """Base provider interface."""

    @abstractmethod
    def provide(self) -> T:
        """Provide the dependency instance."""


class SingletonProvider(Provider[T]):
    """Provider that ensures singleton behavior."""

    def __init__(self, factory_func) -> None:
        self._factory = factory_func
        self._instance = None

    def provide(self) -> T:
        if self._instance is None:
            self._instance = self._factory()
        return self._instance


class RepositoryProvider:
    """Provider for repository layer dependencies."""

    def __init__(self, use_filesystem: bool = True) -> None:
        self._use_filesystem: bool = use_filesystem
        self._annotation_repository = SingletonProvider(self._create_annotation_repository)
        self._corpus_repository = SingletonProvider(self._create_corpus_repository)
        self._model_repository = SingletonProvider(self._create_model_repository)

    def _create_annotation_repository(self) -> AnnotationRepositoryInterface:
        """Factory for annotation repository."""
        if self._use_filesystem:
            return FileAnnotationRepository()
        return InMemoryAnnotationRepository()

    def _create_corpus_repository(self) -> CorpusRepositoryInterface:
        """Factory for corpus repository."""
        if self._use_filesystem:
            return FileCorpusRepository()
        return InMemoryCorpusRepository()

    def _create_model_repository(self) -> ModelRepositoryInterface:
        """Factory for model repository."""
        if self._use_filesystem:
            return FileModelRepository()
        return InMemoryModelRepository()

    def get_annotation_repository(self) -> AnnotationRepositoryInterface:
        return self._annotation_repository.provide()

    def get_corpus_repository(self) -> CorpusRepositoryInterface:
        return self._corpus_repository.provide()

    def get_model_repository(self) -> ModelRepositoryInterface:
        return self._model_repository.provide()


class ServiceProvider:
    """Provider for service layer dependencies."""

    def __init__(self, repository_provider: RepositoryProvider) -> None:
        self._repository_provider: RepositoryProvider = repository_provider
        self._workflow_service = SingletonProvider(self._create_workflow_service)

    def _create_workflow_service(self) -> WorkflowService:
        """Factory for workflow service."""
        return WorkflowService(
            annotation_repo=self._repository_provider.get_annotation_repository(),
            corpus_repo=self._repository_provider.get_corpus_repository(),
            model_repo=self._repository_provider.get_model_repository(),
        )

    def get_workflow_service(self) -> WorkflowService:
        """Get workflow service instance."""
        return self._workflow_service.provide()
