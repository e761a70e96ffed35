"""Repository interfaces - pure abstractions without implementation details."""

from abc import ABC, abstractmethod
from collections.abc import Sequence

from src.services.baselines import IsolationForestModel
from src.services.detector import DetectorModel
from src.services.models import BoundingBoxRecord, Corpus


class AnnotationRepositoryInterface(ABC):
    """Abstract interface for bounding-box annotation sources."""

    @abstractmethod
    def load(self, location: str) -> list[BoundingBoxRecord]:
        """Read every record, in file order."""

    @abstractmethod
    def save(self, location: str, records: Sequence[BoundingBoxRecord]) -> None:
        """Write the records."""

    @abstractmethod
    def exists(self, location: str) -> bool:
        """Check if annotations exist at the location."""


class CorpusRepositoryInterface(ABC):
    """Abstract interface for packed-sample corpora."""

    @abstractmethod
    def load(self, location: str) -> Corpus:
        """Read a corpus, with its provenance column if present."""

    @abstractmethod
    def save(self, location: str, corpus: Corpus) -> None:
        """Write a corpus."""

    @abstractmethod
    def exists(self, location: str) -> bool:
        """Check if a corpus exists at the location."""


class ModelRepositoryInterface(ABC):
    """Abstract interface for trained detector and isolation forest storage."""

    @abstractmethod
    def load(self, location: str) -> DetectorModel | IsolationForestModel:
        """Read a model of either kind."""

    @abstractmethod
    def save(self, location: str, model: DetectorModel | IsolationForestModel) -> None:
        """Write a model."""

    @abstractmethod
    def digest(self, location: str) -> str:
        """SHA-256 of the stored model bytes."""
