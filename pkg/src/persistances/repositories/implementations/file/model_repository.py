"""Model files in the versioned text formats of `model_codec`."""

from src.persistances.model_codec import AnyModel, load_model, save_model
from src.persistances.repositories.interfaces import ModelRepositoryInterface
from src.persistances.storage import file_digest


class FileModelRepository(ModelRepositoryInterface):
    def load(self, location: str) -> AnyModel:
        return load_model(location)

    def save(self, location: str, model: AnyModel) -> None:
        save_model(model, location)

    def digest(self, location: str) -> str:
        return file_digest(location)
