"""Parsers that turn heterogeneous analyzer outputs into one normalized alert stream.

Two input formats are supported:

* SARIF 2.1.0 (the subset most tools emit: ``runs[].tool.driver.name``,
  ``runs[].results[].ruleId`` and the first physical location).
* A normalized JSONL format, one ``{"tool": ..., "checker": ..., "file": ...,
  "line": ..., "message": ...}`` object per line, used both as an adapter for
  tools without a SARIF mode and as the round-trippable export format.

Paths are normalized at parse time so every downstream join on filepath is
string-exact.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import ParseError, ValidationError

SARIF_FORMAT = "sarif"
JSONL_FORMAT = "normalized-jsonl"

_DUP_SEP = re.compile(r"/{2,}")


@dataclass(frozen=True)
class RawAlert:
    """One tool finding: a checker firing at a (file, line) location."""

    alert_id: int
    tool: str
    checker: str
    filepath: str
    line: int
    message: str | None = None


@dataclass(frozen=True)
class ToolRun:
    """Bookkeeping for one ingested artifact."""

    tool: str
    format: str
    source_path: str
    alert_count: int


@dataclass
class ParsedAlerts:
    """Alert list plus the accounting needed to verify nothing vanished silently.

    ``alerts`` + ``skipped`` always equals ``total_results``.
    """

    alerts: list[RawAlert] = field(default_factory=list)
    skipped: int = 0
    total_results: int = 0
    extra_locations: int = 0


def normalize_path(raw: str) -> str:
    """Normalize a path for string-exact joins.

    Backslashes become forward slashes, duplicate separators collapse, and
    leading ``./`` segments are stripped.  Idempotent by construction.
    """
    path = raw.replace("\\", "/")
    path = _DUP_SEP.sub("/", path)
    while path.startswith("./"):
        path = path[2:]
    if not path:
        raise ValidationError(f"path {raw!r} normalizes to the empty string")
    return path


def parse_sarif(document: str, start_id: int = 0) -> ParsedAlerts:
    """Parse a SARIF 2.1.0 document into raw alerts.

    One alert per result, taking ``ruleId`` as the checker and the first
    physical location as (file, line).  Results lacking a ruleId, a uri, or a
    startLine are skipped and counted rather than guessed at; locations past
    the first are ignored and counted in ``extra_locations``.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed SARIF JSON at byte offset {exc.pos}: {exc.msg}") from exc

    if not isinstance(doc, dict) or "runs" not in doc:
        raise ParseError("SARIF document is missing the 'runs' array")

    parsed = ParsedAlerts()
    next_id = start_id
    for run_index, run in enumerate(doc["runs"]):
        if "results" not in run:
            raise ParseError(f"SARIF run {run_index} is missing the 'results' array")
        tool = run.get("tool", {}).get("driver", {}).get("name", "unknown")
        for result in run["results"]:
            parsed.total_results += 1
            checker = result.get("ruleId")
            locations = result.get("locations") or []
            if not checker or not locations:
                parsed.skipped += 1
                continue
            parsed.extra_locations += len(locations) - 1
            physical = locations[0].get("physicalLocation", {})
            uri = physical.get("artifactLocation", {}).get("uri")
            line = physical.get("region", {}).get("startLine")
            if not uri or line is None:
                parsed.skipped += 1
                continue
            message = result.get("message", {}).get("text")
            parsed.alerts.append(
                RawAlert(next_id, tool, checker, normalize_path(uri), int(line), message)
            )
            next_id += 1
    return parsed


def parse_normalized_jsonl(document: str, tool: str, start_id: int = 0) -> ParsedAlerts:
    """Parse normalized JSONL alerts, in input order.

    A per-record ``tool`` field overrides the ``tool`` argument.  A line that
    fails to parse, or that lacks a required key, is an error naming the
    1-based line number; there is no silent skipping in this format.
    """
    parsed = ParsedAlerts()
    next_id = start_id
    for lineno, line in enumerate(document.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON on line {lineno}: {exc.msg}") from exc
        try:
            checker = record["checker"]
            filepath = record["file"]
            alert_line = record["line"]
        except KeyError as exc:
            raise ParseError(f"line {lineno} is missing key {exc.args[0]!r}") from exc
        if not isinstance(alert_line, int) or alert_line < 1:
            raise ValidationError(f"line {lineno}: alert line must be a positive integer, got {alert_line!r}")
        parsed.total_results += 1
        parsed.alerts.append(
            RawAlert(
                next_id,
                record.get("tool") or tool,
                checker,
                normalize_path(filepath),
                alert_line,
                record.get("message"),
            )
        )
        next_id += 1
    return parsed


def to_jsonl(alerts: list[RawAlert]) -> str:
    """Export alerts to the normalized JSONL format (round-trips by field)."""
    lines = []
    for alert in alerts:
        record = {"tool": alert.tool, "checker": alert.checker, "file": alert.filepath, "line": alert.line}
        if alert.message is not None:
            record["message"] = alert.message
        lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")
