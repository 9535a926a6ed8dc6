"""Tests for formatting application services."""

import json

import pytest

from pacecore.adapters.formatters import CSVFormatter, JSONFormatter, JSONLinesFormatter, formatter_for
from pacecore.application.format import OutputFormat, RecordFormatter, format_as


@pytest.fixture
def summary_records() -> list[dict[str, object]]:
    """Create two per-agent summary rows."""
    return [
        {"agent": 0, "share": 0.25, "utility": 310.5, "spend": 0.24, "depletion_time": 1000},
        {"agent": 1, "share": 0.25, "utility": 298.0, "spend": 0.25, "depletion_time": 998},
    ]


class TestJSONFormatter:
    """Tests for indented JSON documents."""

    def test_format_single_document(self, json_formatter: RecordFormatter) -> None:
        """Test that a document renders as parseable JSON ending in a newline."""
        result = format_as(json_formatter, {"schema": "pacecore-beta-v1", "beta": [0.5]})

        assert result.endswith("\n")
        assert json.loads(result) == {"schema": "pacecore-beta-v1", "beta": [0.5]}

    def test_keeps_non_ascii_text(self, json_formatter: RecordFormatter) -> None:
        """Test that γ and δ are written as characters, not escapes."""
        result = format_as(json_formatter, {"note": "γ and δ"})

        assert "γ and δ" in result

    def test_rejects_non_finite_numbers(self, json_formatter: RecordFormatter) -> None:
        """Test that NaN must be encoded by a codec before formatting."""
        with pytest.raises(ValueError, match="not JSON compliant"):
            format_as(json_formatter, {"delta_star": float("nan")})


class TestJSONLinesFormatter:
    """Tests for JSON lines output."""

    def test_one_compact_record_per_line(self, summary_records: list[dict[str, object]]) -> None:
        """Test that each record becomes one line."""
        result = JSONLinesFormatter().format(summary_records)
        lines = result.splitlines()

        assert len(lines) == 2
        assert lines[0].startswith('{"agent":0,"share":0.25')
        assert [json.loads(line) for line in lines] == summary_records

    def test_single_record_is_one_line(self) -> None:
        """Test that a mapping is treated as one record."""
        assert JSONLinesFormatter().format({"record": "run"}) == '{"record":"run"}\n'


class TestCSVFormatter:
    """Tests for CSV output."""

    def test_header_from_first_record(self, summary_records: list[dict[str, object]]) -> None:
        """Test the header row and the data rows."""
        result = CSVFormatter().format(summary_records)

        assert result.splitlines() == [
            "agent,share,utility,spend,depletion_time",
            "0,0.25,310.5,0.24,1000",
            "1,0.25,298.0,0.25,998",
        ]

    def test_empty_document_renders_empty(self) -> None:
        """Test that no records give no output at all."""
        assert CSVFormatter().format([]) == ""


class TestFormatterFor:
    """Tests for choosing a formatter."""

    @pytest.mark.parametrize(
        ("output", "expected"),
        [
            (OutputFormat.JSON, JSONFormatter),
            ("jsonl", JSONLinesFormatter),
            ("csv", CSVFormatter),
        ],
    )
    def test_picks_formatter(self, output: OutputFormat | str, expected: type[RecordFormatter]) -> None:
        """Test the format-to-formatter mapping."""
        formatter = formatter_for(output)

        assert isinstance(formatter, expected)
        assert formatter.output == OutputFormat(output)

    def test_rejects_unknown_format(self) -> None:
        """Test that unknown format names are refused."""
        with pytest.raises(ValueError, match="xml"):
            formatter_for("xml")
