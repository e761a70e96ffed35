"""In-memory implementation of CorpusRepository for testing/demo purposes."""

from src.persistances.repositories.interfaces import CorpusRepositoryInterface
from src.services.exceptions import CorpusFormatError
from src.services.models import Corpus


class InMemoryCorpusRepository(CorpusRepositoryInterface):
    def __init__(self) -> None:
        self._corpora: dict[str, Corpus] = {}

    def load(self, location: str) -> Corpus:
        if location not in self._corpora:
            raise CorpusFormatError(f"no corpus stored at '{location}'")
        stored = self._corpora[location]
        return Corpus(stored.matrix.copy(), stored.provenance)

    def save(self, location: str, corpus: Corpus) -> None:
        # Copie pour que l'appelant ne modifie pas la version stockée
        self._corpora[location] = Corpus(corpus.matrix.copy(), corpus.provenance)

    def exists(self, location: str) -> bool:
        return location in self._corpora
