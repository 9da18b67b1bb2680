"""
Report emission and loading.

JSON reports carry a header (version, effective configuration, tolerances,
coverage map) and the records in (suite, trial) order. CSV reports hold one
row per record with the CheckRecord fields as columns.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

from .config import WorkbenchSettings, get_settings
from .exceptions import ReportError
from .models import CheckRecord, Report, ReportHeader, RunConfig

logger = logging.getLogger(__name__)

CSV_COLUMNS = tuple(CheckRecord.model_fields)

NOTES = [
    "Ranks of constraint subspaces are certified at truncation level N only.",
    "Transport residuals are measured on levels <= N - B.",
    "predicted_scale is the coupling ||P_{N-B} U_X P_{>N}||, an upper bound on those residuals.",
]


def build_report(
    records: Sequence[CheckRecord],
    config: RunConfig,
    settings: Optional[WorkbenchSettings] = None,
) -> Report:
    """Wrap records in a Report with its header."""
    from . import __version__
    from .suite import COVERAGE

    settings = settings if settings is not None else get_settings()
    header = ReportHeader(
        version=__version__,
        config=config.model_dump(),
        settings=settings.model_dump(),
        coverage=COVERAGE,
        notes=NOTES,
    )
    return Report(header=header, records=list(records))


def render_json(report: Report) -> str:
    return report.model_dump_json(indent=2) + "\n"


def render_csv(records: Sequence[CheckRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        row = record.model_dump()
        row["params"] = json.dumps(row["params"], sort_keys=True)
        writer.writerow(["" if row[column] is None else row[column] for column in CSV_COLUMNS])
    return buffer.getvalue()


def emit_report(
    records: Sequence[CheckRecord],
    config: RunConfig,
    fmt: Optional[str] = None,
    path: Optional[Union[str, Path]] = None,
    settings: Optional[WorkbenchSettings] = None,
) -> str:
    """
    Render a report and optionally write it.

    Args:
        records: check records in (suite, trial) order
        config: the run configuration, copied into the header
        fmt: "json" or "csv" (defaults to config.format)
        path: destination file; nothing is written when omitted

    Returns:
        The rendered report text

    Raises:
        ReportError: If the format is unknown or the file cannot be written
    """
    fmt = (fmt or config.format).lower()
    if fmt == "json":
        text = render_json(build_report(records, config, settings))
    elif fmt == "csv":
        text = render_csv(records)
    else:
        raise ReportError(f"Unknown report format '{fmt}'", reason="format")

    if path is not None:
        target = Path(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text)
        except OSError as e:
            raise ReportError(f"Cannot write report: {e}", path=str(target), reason=str(e))
        logger.info(f"Wrote {fmt} report with {len(records)} records to {target}")
    return text


def load_report(path: Union[str, Path]) -> Union[Report, List[CheckRecord]]:
    """
    Read a report written by emit_report.

    JSON files give a Report; CSV files give the list of records.

    Raises:
        ReportError: If the file is missing or malformed
    """
    source = Path(path)
    try:
        text = source.read_text()
    except OSError as e:
        raise ReportError(f"Cannot read report: {e}", path=str(source), reason=str(e))

    try:
        if source.suffix.lower() == ".csv":
            return [_record_from_row(row) for row in csv.DictReader(io.StringIO(text))]
        return Report.model_validate(json.loads(text))
    except ReportError:
        raise
    except Exception as e:
        raise ReportError(f"Malformed report: {e}", path=str(source), reason=type(e).__name__)


def _record_from_row(row: dict) -> CheckRecord:
    data = {column: (row[column] if row[column] != "" else None) for column in CSV_COLUMNS}
    data["params"] = json.loads(data["params"] or "{}")
    data["passed"] = data["passed"] == "True"
    return CheckRecord.model_validate(data)
