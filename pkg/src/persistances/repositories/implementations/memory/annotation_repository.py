"""In-memory implementation of AnnotationRepository for testing/demo purposes."""

from collections.abc import Sequence

from src.persistances.repositories.interfaces import AnnotationRepositoryInterface
from src.services.exceptions import InvalidAnnotation
from src.services.models import BoundingBoxRecord


class InMemoryAnnotationRepository(AnnotationRepositoryInterface):
    """Annotation sets kept in a dict keyed by location."""

    def __init__(self) -> None:
        self._records: dict[str, list[BoundingBoxRecord]] = {}

    def load(self, location: str) -> list[BoundingBoxRecord]:
        if location not in self._records:
            raise InvalidAnnotation(f"no annotations stored at '{location}'")
        return list(self._records[location])

    def save(self, location: str, records: Sequence[BoundingBoxRecord]) -> None:
        self._records[location] = list(records)

    def exists(self, location: str) -> bool:
        return location in self._records
