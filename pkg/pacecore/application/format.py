"""Application layer for rendering run artifacts into text formats."""

from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from enum import StrEnum, auto
from typing import ClassVar

__all__ = ["Document", "OutputFormat", "Record", "RecordFormatter", "format_as"]

type Record = Mapping[str, object]
type Document = Record | Sequence[Record]


class OutputFormat(StrEnum):
    """Supported artifact formats."""

    JSON = auto()
    JSONL = auto()
    CSV = auto()


class RecordFormatter(ABC):
    """Abstract base class for turning plain records into one text format."""

    output: ClassVar[OutputFormat]

    @abstractmethod
    def format(self, document: Document) -> str:
        """Render a document in the target representation.

        Args:
            document: A single record or a sequence of records made of JSON-compatible values.

        Returns:
            String representation in the target format.
        """


def format_as(formatter: RecordFormatter, document: Document) -> str:
    """Render a document using the provided formatter.

    Args:
        formatter: The formatter implementation to use.
        document: The record or records to render.

    Returns:
        String representation in the formatter's format.
    """
    return formatter.format(document)
