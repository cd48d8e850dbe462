"""
Report rendering for essopt.

This module provides the Report class: a rendered document (JSON or CSV)
with the file name it is written under. Renderings are deterministic so
that repeated runs produce byte-identical files.
"""

import csv
import io
import json
import math
import os
from typing import Any, Iterable, Optional, Sequence

from .logging import logger

# Money is quoted to this many decimals in JSON reports
MONEY_DECIMALS = 4

CONTENT_TYPE_JSON = "application/json"
CONTENT_TYPE_CSV = "text/csv"


def round_money(data: Any) -> Any:
    """Round every float inside nested dicts/lists to MONEY_DECIMALS."""
    if isinstance(data, float):
        if not math.isfinite(data):
            return None
        rounded = round(data, MONEY_DECIMALS)
        return 0.0 if rounded == 0 else rounded
    if isinstance(data, dict):
        return {k: round_money(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [round_money(v) for v in data]
    return data


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


class Report:
    """A rendered report document."""

    def __init__(self, body: str, content_type: str, name: Optional[str] = None):
        """
        Initialize a new report.

        Args:
            body: The rendered text
            content_type: CONTENT_TYPE_JSON or CONTENT_TYPE_CSV
            name: Default file name used by write() when given a directory
        """
        self.body = body
        self.content_type = content_type
        self.name = name

    @property
    def extension(self) -> str:
        return "json" if self.content_type == CONTENT_TYPE_JSON else "csv"

    def write(self, path: str) -> str:
        """
        Write the report and return the file path.

        A directory path (existing, or ending in a separator) gets the
        report's default name appended; parent directories are created.
        """
        if self.name and (os.path.isdir(path) or path.endswith(os.sep)):
            path = os.path.join(path, self.name)
        parent = os.path.dirname(path)
        if parent and not os.path.exists(parent):
            os.makedirs(parent)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.body)
        logger.info(f"wrote {path}")
        return path

    @staticmethod
    def json(data: Any, name: Optional[str] = None, money: bool = True) -> "Report":
        """
        Create a JSON report with sorted keys and 2-space indent.

        Args:
            data: JSON-serializable data
            name: Default file name
            money: Round floats to MONEY_DECIMALS
        """
        if money:
            data = round_money(data)
        body = json.dumps(data, indent=2, sort_keys=True) + "\n"
        return Report(body, CONTENT_TYPE_JSON, name)

    @staticmethod
    def csv(header: Sequence[str], rows: Iterable[Sequence[Any]], name: Optional[str] = None) -> "Report":
        """
        Create a CSV report; floats are rendered with repr() and cells holding
        a comma, quote or newline are quoted.

        Args:
            header: Column names
            rows: Row values
            name: Default file name
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_cell(v) for v in row] for row in rows)
        return Report(buffer.getvalue(), CONTENT_TYPE_CSV, name)

    @staticmethod
    def text(body: str, name: Optional[str] = None) -> "Report":
        """Create a report from already rendered CSV text (schedule and profile files)."""
        return Report(body, CONTENT_TYPE_CSV, name)
