"""In-memory implementation of ModelRepository for testing/demo purposes."""

import hashlib

from src.persistances.model_codec import AnyModel, dumps_model, loads_model
from src.persistances.repositories.interfaces import ModelRepositoryInterface
from src.services.exceptions import ModelFormatError


class InMemoryModelRepository(ModelRepositoryInterface):
    """Keeps the serialized text, so loads go through the same codec as files."""

    def __init__(self) -> None:
        self._texts: dict[str, str] = {}

    def load(self, location: str) -> AnyModel:
        if location not in self._texts:
            raise ModelFormatError(f"no model stored at '{location}'")
        return loads_model(self._texts[location])

    def save(self, location: str, model: AnyModel) -> None:
        self._texts[location] = dumps_model(model)

    def digest(self, location: str) -> str:
        if location not in self._texts:
            raise ModelFormatError(f"no model stored at '{location}'")
        return hashlib.sha256(self._texts[location].encode("utf-8")).hexdigest()
