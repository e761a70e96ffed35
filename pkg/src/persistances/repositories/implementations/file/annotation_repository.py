"""Annotation files: `frame,object_id,label,x_min,y_min,x_max,y_max`, one box per line."""

import logging
from collections.abc import Sequence
from pathlib import Path

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.persistances.repositories.interfaces import AnnotationRepositoryInterface
from src.persistances.storage import atomic_write
from src.services.exceptions import InvalidAnnotation
from src.services.models import BoundingBoxRecord, ObjectClass

logger = logging.getLogger(__name__)

ANNOTATION_COLUMNS = ["frame", "object_id", "label", "x_min", "y_min", "x_max", "y_max"]


class AnnotationRow(BaseModel):
    """One raw line of an annotation file."""

    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    frame: int = Field(ge=0)
    object_id: int
    label: int = Field(ge=0, le=2)
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def to_record(self) -> BoundingBoxRecord:
        return BoundingBoxRecord(
            frame_index=self.frame,
            object_id=self.object_id,
            class_label=ObjectClass(self.label),
            x_min=self.x_min,
            y_min=self.y_min,
            x_max=self.x_max,
            y_max=self.y_max,
        )


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    field_name = ".".join(str(part) for part in first["loc"]) or "row"
    return f"{field_name}: {first['msg']}"


class FileAnnotationRepository(AnnotationRepositoryInterface):
    """Comma-separated UTF-8 annotation files on the local filesystem."""

    def load(self, location: str) -> list[BoundingBoxRecord]:
        """Read and validate every line; errors carry the 1-based file line number."""
        try:
            frame = pd.read_csv(
                location, dtype=str, keep_default_na=False, skip_blank_lines=True
            )
        except FileNotFoundError:
            raise InvalidAnnotation(f"{location} does not exist") from None
        except pd.errors.EmptyDataError:
            raise InvalidAnnotation("missing header line", line_number=1) from None
        except pd.errors.ParserError as error:
            raise InvalidAnnotation(f"malformed line ({error})") from None

        header = [str(column).strip() for column in frame.columns]
        if header != ANNOTATION_COLUMNS:
            raise InvalidAnnotation(
                f"header must be {','.join(ANNOTATION_COLUMNS)}, got {','.join(header)}",
                line_number=1,
            )
        frame.columns = header

        records = []
        for offset, row in enumerate(frame.to_dict(orient="records")):
            line_number = offset + 2
            try:
                records.append(AnnotationRow(**row).to_record())
            except ValidationError as error:
                raise InvalidAnnotation(_describe(error), line_number=line_number) from None
            except InvalidAnnotation as error:
                raise InvalidAnnotation(str(error), line_number=line_number) from None

        logger.info("Read %s annotation records from %s", len(records), location)
        return records

    def save(self, location: str, records: Sequence[BoundingBoxRecord]) -> None:
        frame = pd.DataFrame(
            [
                (
                    record.frame_index,
                    record.object_id,
                    int(record.class_label),
                    record.x_min,
                    record.y_min,
                    record.x_max,
                    record.y_max,
                )
                for record in records
            ],
            columns=ANNOTATION_COLUMNS,
        )
        with atomic_write(location) as handle:
            frame.to_csv(handle, index=False, float_format="%.17g", lineterminator="\n")
        logger.info("Wrote %s annotation records to %s", len(frame), location)

    def exists(self, location: str) -> bool:
        return Path(location).is_file()
