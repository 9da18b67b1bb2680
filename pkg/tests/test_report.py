"""Tests for report emission and loading."""

import csv
import io
import json
import math

import pytest

from fockbench import __version__
from fockbench.exceptions import ReportError
from fockbench.models import CheckRecord, Report, RunConfig
from fockbench.report import CSV_COLUMNS, build_report, emit_report, load_report
from fockbench.suite import COVERAGE


@pytest.fixture
def records():
    return [
        CheckRecord.measure("words", "word_count", 0, 0.0, 0.0, level=3),
        CheckRecord.measure("rowcon", "defect_identity", 1, 2e-9, 1e-10, predicted_scale=1e-9),
        CheckRecord.failure("transform", "transport", 0, RuntimeError("singular")),
    ]


class TestBuildReport:
    """Test the report header."""

    def test_header(self, records, small_config):
        """Version, effective config, settings and coverage are recorded."""
        report = build_report(records, small_config)

        assert report.header.version == __version__
        assert report.header.config["level"] == small_config.level
        assert report.header.settings["theorem_tol"] == 1e-3
        assert report.header.coverage == COVERAGE
        assert report.header.notes
        assert len(report.failures) == 2


class TestEmitReport:
    """Test rendering and writing."""

    def test_json_roundtrip(self, records, small_config, tmp_path):
        """JSON reports load back into a Report, infinities included."""
        path = tmp_path / "out" / "report.json"
        text = emit_report(records, small_config, path=path)

        assert path.read_text() == text
        assert text.endswith("\n")
        loaded = load_report(path)
        assert isinstance(loaded, Report)
        assert [r.check for r in loaded.records] == [r.check for r in records]
        assert math.isinf(loaded.records[2].residual)

    def test_json_is_reproducible(self, records, small_config):
        """Equal inputs render byte-identical reports."""
        assert emit_report(records, small_config) == emit_report(records, small_config)

    def test_csv_layout(self, records, small_config):
        """One header row plus one row per record."""
        text = emit_report(records, small_config, fmt="csv")
        rows = list(csv.reader(io.StringIO(text)))

        assert rows[0] == list(CSV_COLUMNS)
        assert len(rows) == len(records) + 1
        params = json.loads(rows[1][CSV_COLUMNS.index("params")])
        assert params == {"level": 3}
        assert rows[1][CSV_COLUMNS.index("predicted_scale")] == ""

    def test_csv_roundtrip(self, records, small_config, tmp_path):
        """CSV reports load back as records."""
        finite = records[:2]
        path = tmp_path / "report.csv"
        emit_report(finite, small_config, fmt="csv", path=path)
        loaded = load_report(path)

        assert [r.model_dump() for r in loaded] == [r.model_dump() for r in finite]

    def test_format_from_config(self, records):
        """The config's format is used when fmt is omitted."""
        text = emit_report(records, RunConfig(format="csv", level=4, margin=1))
        assert text.startswith("suite,check,trial")

    def test_unknown_format(self, records, small_config):
        with pytest.raises(ReportError):
            emit_report(records, small_config, fmt="xml")


class TestLoadReport:
    """Test error handling when loading."""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ReportError) as exc_info:
            load_report(tmp_path / "absent.json")
        assert exc_info.value.details["path"].endswith("absent.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ReportError):
            load_report(path)
