"""Corpus files: `label,x1,y1,vx1,vy1,...` packed rows, optional trailing `source` column."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from src.persistances.repositories.interfaces import CorpusRepositoryInterface
from src.persistances.storage import atomic_write
from src.services.exceptions import CorpusFormatError
from src.services.models import POINT_FEATURES, Corpus

logger = logging.getLogger(__name__)

SOURCE_COLUMN = "source"


def corpus_columns(window_length: int) -> list[str]:
    """Header of a corpus holding windows of `window_length` points."""
    columns = ["label"]
    for index in range(1, window_length + 1):
        columns += [f"x{index}", f"y{index}", f"vx{index}", f"vy{index}"]
    return columns


class FileCorpusRepository(CorpusRepositoryInterface):
    """Comma-separated corpus files, reals written with 17 significant digits."""

    def load(self, location: str) -> Corpus:
        try:
            frame = pd.read_csv(
                location,
                float_precision="round_trip",
                keep_default_na=False,
                dtype={SOURCE_COLUMN: str},
            )
        except FileNotFoundError:
            raise CorpusFormatError(f"{location} does not exist") from None
        except pd.errors.EmptyDataError:
            raise CorpusFormatError(f"{location}: missing header line") from None
        except (pd.errors.ParserError, ValueError) as error:
            raise CorpusFormatError(f"{location}: {error}") from None

        columns = [str(column) for column in frame.columns]
        provenance = None
        if columns and columns[-1] == SOURCE_COLUMN:
            provenance = tuple(frame[SOURCE_COLUMN].astype(str))
            columns = columns[:-1]

        window_length, remainder = divmod(len(columns) - 1, POINT_FEATURES)
        if remainder or window_length < 1 or columns != corpus_columns(window_length):
            raise CorpusFormatError(f"{location}: header is not a packed-sample layout")

        try:
            matrix = frame[columns].to_numpy(dtype=np.float64)
        except ValueError as error:
            raise CorpusFormatError(f"{location}: non-numeric value ({error})") from None
        if not np.all(np.isfinite(matrix)):
            raise CorpusFormatError(f"{location}: non-finite value")

        logger.info("Read corpus of %s samples from %s", len(matrix), location)
        return Corpus(matrix.reshape(len(matrix), len(columns)), provenance)

    def save(self, location: str, corpus: Corpus) -> None:
        window_length = (corpus.width - 1) // POINT_FEATURES
        frame = pd.DataFrame(corpus.matrix, columns=corpus_columns(window_length))
        if corpus.provenance is not None:
            frame[SOURCE_COLUMN] = list(corpus.provenance)
        with atomic_write(location) as handle:
            frame.to_csv(handle, index=False, float_format="%.17g", lineterminator="\n")
        logger.info("Wrote corpus of %s samples to %s", len(corpus), location)

    def exists(self, location: str) -> bool:
        return Path(location).is_file()
