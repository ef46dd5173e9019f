"""Per-alert feature assembly from code-metrics tables.

Metrics arrive in a long-form CSV (one metric value per row, file- or
function-scoped).  Each labeled fused alert is joined against them: file-scope
metrics by filepath, function-scope metrics by the innermost metric span
containing the alert line (falling back to the suite's function spans when a
metrics tool reported the function under a name-only key).

Feature vectors never contain verdict machinery -- only metrics, identity, and
contributor information -- so there is no label leakage by construction.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ParseError, ValidationError
from .fuse_label import VERDICT_FALSE, VERDICT_TRUE, FusedAlert
from .ingest import normalize_path
from .suite import FunctionSpan, TestCaseIdentity, parse_identity

FILE_SCOPE = "file"
FUNCTION_SCOPE = "function"

METRICS_CSV_HEADER = ["source", "scope", "file", "function", "start_line", "end_line", "metric", "value"]


@dataclass
class MetricsRecord:
    """One row of a metrics table; metric names are namespaced ``source.NAME``."""

    source: str
    scope: str
    filepath: str
    function_name: str | None = None
    start_line: int | None = None
    end_line: int | None = None
    metrics: dict[str, float] = field(default_factory=dict)


@dataclass
class FeatureVector:
    """Everything the classifiers may see about one labeled fused alert."""

    fused_id: int
    cwe: int
    variant_id: str | None
    tool_flags: dict[str, bool]
    n_tools: int
    metrics: dict[str, float | None]
    missing_flags: dict[str, bool]
    label: int


def parse_metrics_csv(document: str, source: str) -> list[MetricsRecord]:
    """Parse a long-form metrics CSV; a non-blank source column overrides ``source``.

    Blank value cells mean the metric is missing for that row; non-numeric
    non-blank cells are an error naming the row and column.
    """
    records = []
    reader = csv.DictReader(io.StringIO(document))
    for lineno, row in enumerate(reader, start=2):
        row_source = (row.get("source") or "").strip() or source
        scope = (row.get("scope") or "").strip()
        if scope not in (FILE_SCOPE, FUNCTION_SCOPE):
            raise ValidationError(f"metrics CSV row {lineno}: scope must be file or function, got {scope!r}")
        filepath = normalize_path(row["file"])
        function_name = (row.get("function") or "").strip() or None
        start_line = _parse_int(row.get("start_line"), lineno, "start_line")
        end_line = _parse_int(row.get("end_line"), lineno, "end_line")
        if scope == FUNCTION_SCOPE and (function_name is None or start_line is None or end_line is None):
            raise ValidationError(
                f"metrics CSV row {lineno}: function-scope rows need function, start_line, and end_line"
            )
        metric_name = (row.get("metric") or "").strip()
        if not metric_name:
            raise ValidationError(f"metrics CSV row {lineno}: missing metric name")
        raw_value = (row.get("value") or "").strip()
        metrics = {}
        if raw_value:
            try:
                metrics[f"{row_source}.{metric_name}"] = float(raw_value)
            except ValueError as exc:
                raise ParseError(f"metrics CSV row {lineno}, column 'value': {raw_value!r} is not numeric") from exc
        records.append(
            MetricsRecord(
                source=row_source,
                scope=scope,
                filepath=filepath,
                function_name=function_name,
                start_line=start_line,
                end_line=end_line,
                metrics=metrics,
            )
        )
    return records


def _parse_int(cell: str | None, lineno: int, column: str) -> int | None:
    cell = (cell or "").strip()
    if not cell:
        return None
    try:
        return int(cell)
    except ValueError as exc:
        raise ParseError(f"metrics CSV row {lineno}, column {column!r}: {cell!r} is not an integer") from exc


def metric_names(metrics: Iterable[MetricsRecord]) -> list[str]:
    names: set[str] = set()
    for record in metrics:
        names.update(record.metrics)
    return sorted(names)


def build_features(
    labeled: list[FusedAlert],
    metrics: list[MetricsRecord],
    spans: list[FunctionSpan],
    identities: Iterable[TestCaseIdentity] | None = None,
    tools: Iterable[str] | None = None,
) -> list[FeatureVector]:
    """Assemble one feature vector per True/False-labeled fused alert.

    Unknown-verdict alerts are skipped.  The tool universe defaults to the
    tools seen among contributors; pass ``tools`` to fix it (e.g. from the
    registry) so absent tools still get a flag column.
    """
    labeled_only = [fa for fa in labeled if fa.verdict in (VERDICT_TRUE, VERDICT_FALSE)]
    if tools is None:
        tool_universe = sorted({c.tool for fa in labeled_only for c in fa.contributors})
    else:
        tool_universe = sorted(set(tools))

    identity_index: dict[str, TestCaseIdentity] = {}
    if identities is not None:
        identity_index = {i.filepath: i for i in identities}

    names = metric_names(metrics)
    file_index: dict[str, dict[str, float]] = {}
    func_index: dict[str, list[MetricsRecord]] = {}
    for record in metrics:
        if record.scope == FILE_SCOPE:
            file_index.setdefault(record.filepath, {}).update(record.metrics)
        else:
            func_index.setdefault(record.filepath, []).append(record)

    span_index: dict[str, list[FunctionSpan]] = {}
    for span in spans:
        span_index.setdefault(span.filepath, []).append(span)

    vectors = []
    for fa in labeled_only:
        resolved: dict[str, float] = {}
        resolved.update(file_index.get(fa.filepath, {}))
        for record in _enclosing_function_records(fa, func_index, span_index):
            resolved.update(record.metrics)

        identity = identity_index.get(fa.filepath)
        if identity is None:
            identity = parse_identity(fa.filepath)

        contributing_tools = {c.tool for c in fa.contributors}
        tool_flags = {tool: tool in contributing_tools for tool in tool_universe}
        vectors.append(
            FeatureVector(
                fused_id=fa.fused_id,
                cwe=fa.cwe,
                variant_id=identity.variant_id,
                tool_flags=tool_flags,
                n_tools=sum(tool_flags.values()),
                metrics={name: resolved.get(name) for name in names},
                missing_flags={name: name not in resolved for name in names},
                label=1 if fa.verdict == VERDICT_TRUE else 0,
            )
        )
    return vectors


def _enclosing_function_records(
    fa: FusedAlert,
    func_index: dict[str, list[MetricsRecord]],
    span_index: dict[str, list[FunctionSpan]],
) -> list[MetricsRecord]:
    """Function-scope records for the innermost span containing the alert line."""
    candidates = [
        r
        for r in func_index.get(fa.filepath, ())
        if r.start_line is not None and r.end_line is not None and r.start_line <= fa.line <= r.end_line
    ]
    if candidates:
        best = min(candidates, key=_span_sort_key)
        best_key = (best.start_line, best.end_line, best.function_name)
        return [r for r in candidates if (r.start_line, r.end_line, r.function_name) == best_key]

    # No metric span contains the line: resolve the function by name via the
    # suite spans instead.
    enclosing = [
        s for s in span_index.get(fa.filepath, ()) if s.start_line <= fa.line <= s.end_line
    ]
    if not enclosing:
        return []
    span = min(enclosing, key=lambda s: (s.end_line - s.start_line, s.start_line, s.function_name))
    return [r for r in func_index.get(fa.filepath, ()) if r.function_name == span.function_name]


def _span_sort_key(record: MetricsRecord) -> tuple[int, int, str]:
    return (record.end_line - record.start_line, record.start_line, record.function_name or "")


# ---------------------------------------------------------------------------
# Stage formats
# ---------------------------------------------------------------------------


def features_to_csv(vectors: list[FeatureVector]) -> str:
    """Wide CSV with stable, sorted column ordering for cross-run diffing."""
    tool_cols = sorted({t for v in vectors for t in v.tool_flags})
    metric_cols = sorted({m for v in vectors for m in v.metrics})
    header = (
        ["fused_id", "label", "cwe", "variant", "n_tools"]
        + [f"tool.{t}" for t in tool_cols]
        + metric_cols
        + [f"miss.{m}" for m in metric_cols]
    )
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for v in sorted(vectors, key=lambda v: v.fused_id):
        row: list[object] = [v.fused_id, v.label, v.cwe, v.variant_id or "", v.n_tools]
        row += [int(v.tool_flags.get(t, False)) for t in tool_cols]
        for m in metric_cols:
            value = v.metrics.get(m)
            row.append("" if value is None else repr(float(value)))
        row += [int(v.missing_flags.get(m, True)) for m in metric_cols]
        writer.writerow(row)
    return out.getvalue()


def features_to_jsonl(vectors: list[FeatureVector]) -> str:
    lines = []
    for v in vectors:
        lines.append(
            json.dumps(
                {
                    "fused_id": v.fused_id,
                    "cwe": v.cwe,
                    "variant_id": v.variant_id,
                    "tool_flags": v.tool_flags,
                    "n_tools": v.n_tools,
                    "metrics": v.metrics,
                    "missing_flags": v.missing_flags,
                    "label": v.label,
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def features_from_jsonl(document: str) -> list[FeatureVector]:
    vectors = []
    for lineno, line in enumerate(document.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            vectors.append(
                FeatureVector(
                    fused_id=record["fused_id"],
                    cwe=record["cwe"],
                    variant_id=record["variant_id"],
                    tool_flags=record["tool_flags"],
                    n_tools=record["n_tools"],
                    metrics=record["metrics"],
                    missing_flags=record["missing_flags"],
                    label=record["label"],
                )
            )
        except (json.JSONDecodeError, KeyError) as exc:
            raise ValidationError(f"feature JSONL line {lineno}: {exc}") from exc
    return vectors
