"""Formatters rendering plain records as JSON, JSON lines or CSV."""

import csv
import io
import json
import logging
from collections.abc import Mapping, Sequence

from pacecore.application.format import Document, OutputFormat, Record, RecordFormatter

__all__ = ["CSVFormatter", "JSONFormatter", "JSONLinesFormatter", "formatter_for"]

logger = logging.getLogger(__name__)


def _records(document: Document) -> Sequence[Record]:
    if isinstance(document, Mapping):
        return [document]
    return document


class JSONFormatter(RecordFormatter):
    """Formatter that renders one indented JSON document.

    Non-finite floats are rejected; codecs encode them as strings first.
    """

    output = OutputFormat.JSON

    def format(self, document: Document) -> str:
        """Render the document as indented JSON followed by a newline."""
        result = json.dumps(document, indent=2, allow_nan=False, ensure_ascii=False) + "\n"
        logger.debug("Formatted JSON document: %d characters", len(result))
        return result


class JSONLinesFormatter(RecordFormatter):
    """Formatter that renders one compact JSON object per line."""

    output = OutputFormat.JSONL

    def format(self, document: Document) -> str:
        """Render every record on its own line."""
        lines = [json.dumps(record, separators=(",", ":"), allow_nan=False) for record in _records(document)]
        result = "".join(line + "\n" for line in lines)
        logger.debug("Formatted %d JSON lines: %d characters", len(lines), len(result))
        return result


class CSVFormatter(RecordFormatter):
    """Formatter that renders flat records as CSV with a header taken from the first record."""

    output = OutputFormat.CSV

    def format(self, document: Document) -> str:
        """Render the records as CSV; an empty document renders as an empty string."""
        records = _records(document)
        if not records:
            return ""
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(records[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
        result = buffer.getvalue()
        logger.debug("Formatted %d CSV rows: %d characters", len(records), len(result))
        return result


def formatter_for(output: OutputFormat | str) -> RecordFormatter:
    """Return the formatter for an output format."""
    match OutputFormat(output):
        case OutputFormat.JSON:
            return JSONFormatter()
        case OutputFormat.JSONL:
            return JSONLinesFormatter()
        case OutputFormat.CSV:
            return CSVFormatter()
