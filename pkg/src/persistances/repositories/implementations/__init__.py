"""Repository implementations package."""

# Filesystem implementations (production)
from .file import FileAnnotationRepository, FileCorpusRepository, FileModelRepository

# In-memory implementations (testing/demo)
from .memory import InMemoryAnnotationRepository, InMemoryCorpusRepository, InMemoryModelRepository

__all__ = [
    # Filesystem (production)
    "FileAnnotationRepository",
    "FileCorpusRepository",
    "FileModelRepository",
    # In-memory (testing/demo)
    "InMemoryAnnotationRepository",
    "InMemoryCorpusRepository",
    "InMemoryModelRepository",
]
