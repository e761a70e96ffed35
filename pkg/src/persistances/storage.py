"""Atomic text file writes: no partial output file is ever left at the target path."""

import hashlib
import os
import tempfile
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import TextIO


@contextmanager
def atomic_write(path: str | Path) -> Iterator[TextIO]:
    """Open a temporary file next to `path` and move it into place on success.

    Usage:
        with atomic_write("model.txt") as handle:
            handle.write("...")
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temp_name = tempfile.mkstemp(
        prefix=f".{target.name}.", suffix=".tmp", dir=target.parent
    )
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8", newline="\n") as handle:
            yield handle
        # Succès : on remplace la cible d'un seul coup
        os.replace(temp_name, target)
    except BaseException:
        # Échec : on supprime le fichier temporaire
        if os.path.exists(temp_name):
            os.remove(temp_name)
        raise


def file_digest(path: str | Path) -> str:
    """SHA-256 of a file's bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
